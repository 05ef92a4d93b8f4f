/**
 * Weighted model integration: sum over the LRA-satisfiable total truth
 * assignments of the weight restricted to each assignment, integrated over
 * its polytope; and the normalized conditional probability built on it.
 */
#ifndef WMIPFV_WMI_HPP
#define WMIPFV_WMI_HPP

#include <ostream>

#include "enumeration.hpp"
#include "polytope.hpp"
#include "weights.hpp"

namespace wmipfv {

struct WmiOptions
{
    /** Check LRA feasibility at every search node. */
    bool theory_pruning = true;
    /** Skip branches that can only contribute measure-zero regions. */
    bool measure_zero_pruning = true;
    /** Writes each enumerated assignment, one per line. */
    std::ostream* dump = nullptr;
    /** Receives (assignment, w_[μ], integral) for each enumerated assignment. */
    std::function<void(const Assignment&, const Polynomial&, const Rational&)> on_assignment;
};

struct WmiResult
{
    Rational value = 0;
    std::size_t num_assignments = 0;
    /** Full-dimensional polytopes with nonzero weight that were integrated. */
    std::size_t num_integrations = 0;
    std::size_t search_nodes = 0;
};

namespace detail {

inline void collect_reals(const std::vector<Variable>& vs, VariableSet& seen, std::vector<Variable>& out)
{
    for (const auto& v : vs)
        if (v.is_real() && !v.is_defined() && seen.insert(v).second)
            out.push_back(v);
}

/** Per-coordinate box from the literal conjuncts of `f`, if every coordinate is bounded. */
inline std::optional<BoxBounds> skeleton_box(const Formula& f, const std::vector<Variable>& coordinates)
{
    std::vector<Literal> lits;
    for (const auto& c : conjuncts_of(f))
        if (auto l = as_literal(c); l && l->atom.is_lra() && !(l->atom.relation() == Relation::eq && !l->positive))
            lits.push_back(*l);
    if (lits.empty() || coordinates.empty())
        return std::nullopt;
    std::vector<Variable> vars = real_variables_of(lits);
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t i = 0; i < vars.size(); ++i)
        index[vars[i].id()] = i;
    LinearProgram lp = program_from_literals(lits, vars);
    BoxBounds box;
    for (const auto& v : coordinates) {
        auto it = index.find(v.id());
        if (it == index.end())
            return std::nullopt;
        std::vector<Rational> c(vars.size());
        c[it->second] = 1;
        LpResult hi = lp.maximize(c);
        if (hi.status != LpStatus::optimal)
            return std::nullopt;
        LpResult lo = lp.minimize(c);
        if (lo.status != LpStatus::optimal)
            return std::nullopt;
        box.emplace_back(lo.value, hi.value);
    }
    return box;
}

} // namespace detail

/**
 * WMI(Δ ∧ χ, w). The enumeration universe includes the atoms of w's
 * conditions, so each assignment fixes w_[μ]. Defined variables must be
 * pinned by the equalities of each assignment; they are substituted away and
 * integration runs over the remaining free reals.
 */
inline WmiResult wmi(const Formula& delta, const WeightDag& w, const WmiOptions& options = {})
{
    Formula problem = elaborate_terms(delta && w.support());
    std::vector<Atom> extra = condition_atoms(w);

    std::vector<Variable> coordinates;
    VariableSet seen;
    detail::collect_reals(variables_of(problem), seen, coordinates);
    for (const auto& a : extra)
        for (const auto& v : a.variables())
            if (!seen.count(v) && v.is_real() && !v.is_defined()) {
                seen.insert(v);
                coordinates.push_back(v);
            }
    detail::collect_reals(polynomial_variables(w), seen, coordinates);
    std::sort(coordinates.begin(), coordinates.end());
    std::unordered_map<std::uint64_t, std::size_t> coordinate_index;
    for (std::size_t i = 0; i < coordinates.size(); ++i)
        coordinate_index[coordinates[i].id()] = i;

    std::optional<BoxBounds> box = detail::skeleton_box(problem, coordinates);

    EnumerationOptions eo;
    eo.theory_pruning = options.theory_pruning;
    eo.measure_zero_pruning = options.measure_zero_pruning;
    eo.dump = options.dump;
    Enumerator enumerator(problem, extra, eo);

    WmiResult result;
    auto check_determined = [](const LinearExpr& e) {
        for (const auto& [v, c] : e.terms())
            if (v.is_defined())
                throw NotDeterminedError("defined variable '" + v.name() + "' is not fixed by the assignment");
    };
    enumerator.run([&](const Assignment& mu, const AffineSystem& equalities) {
        ++result.num_assignments;
        Polynomial poly = restrict_to_assignment(w, mu);
        Rational value = 0;
        if (!poly.is_zero()) {
            poly = poly.substitute(equalities.solved());
            for (const auto& v : poly.variables())
                if (v.is_defined())
                    throw NotDeterminedError("weight uses defined variable '" + v.name() + "' not fixed by the assignment");
            std::vector<Literal> lits;
            bool empty = false;
            for (const auto& l : mu.lra_literals()) {
                if (l.atom.relation() == Relation::eq)
                    continue;
                LinearExpr e = equalities.reduce(l.atom.lhs_expr());
                e.add_constant(-l.atom.rhs());
                if (e.is_constant()) {
                    bool truth = Atom::constant_truth(e.constant(), l.atom.relation());
                    empty |= truth != l.positive;
                    continue;
                }
                check_determined(e);
                auto c = Atom::canonical(e, l.atom.relation());
                lits.push_back(l.positive ? *c : c->negated());
            }
            // a free variable solved by an equality means a measure-zero region
            for (const auto& [id, e] : equalities.solved())
                empty |= coordinate_index.count(id) > 0;
            if (!empty) {
                Polytope p = polytope_from_literals(lits, coordinates, false);
                if (is_full_dimensional(p)) {
                    ++result.num_integrations;
                    value = integrate_polynomial(poly, p, box ? &*box : nullptr);
                }
            }
        }
        result.value += value;
        if (options.on_assignment)
            options.on_assignment(mu, poly, value);
        return true;
    });
    result.search_nodes = enumerator.stats().search_nodes;
    return result;
}

/** WMI(Δ ∧ φ, w). */
inline WmiResult wmi_restricted(const Formula& delta, const WeightDag& w, const Formula& phi, const WmiOptions& options = {})
{
    return wmi(delta && phi, w, options);
}

/** ⋀ (b ∨ ¬b) over the boolean variables of f: puts them in the enumeration without constraining them. */
inline Formula boolean_frame(const Formula& f)
{
    std::vector<Formula> parts;
    for (const auto& v : variables_of(f))
        if (!v.is_real())
            parts.push_back(Formula::variable(v) || !Formula::variable(v));
    return Formula::conjunction(parts);
}

/** WMI(Γ ∧ Δ, w) / WMI(Δ, w), both over the booleans of Γ, Δ and w. */
inline Rational conditional_probability(const Formula& gamma, const Formula& delta, const WeightDag& w,
                                        const WmiOptions& options = {})
{
    Rational z = wmi(delta && boolean_frame(gamma), w, options).value;
    if (z == 0)
        throw NullConditioningError("conditioning on an event of weight zero");
    return wmi(gamma && delta, w, options).value / z;
}

} // namespace wmipfv

#endif

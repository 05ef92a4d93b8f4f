/**
 * Bound propagation: a box from the precondition, pushed forward through the
 * defined variables of a system encoding, and the simplification of every
 * conditional the box decides.
 */
#ifndef WMIPFV_BOUND_PROPAGATION_HPP
#define WMIPFV_BOUND_PROPAGATION_HPP

#include "box.hpp"
#include "lp.hpp"
#include "models.hpp"

namespace wmipfv {

/**
 * Box from the literal conjuncts of Δ_pre ∧ support: per-variable LP optima
 * over their closure. Non-literal conjuncts (disjunctions, ite comparisons)
 * are dropped, which keeps the box sound.
 */
inline Box bounds_from_precondition(const Formula& delta_pre, const Formula& support)
{
    std::vector<Literal> lits;
    for (const auto& c : conjuncts_of(delta_pre && support)) {
        if (c.is_false())
            throw UnsatisfiableError("precondition is unsatisfiable");
        if (auto l = as_literal(c); l && l->atom.is_lra() && !(l->atom.relation() == Relation::eq && !l->positive))
            lits.push_back(*l);
    }
    Box box;
    if (lits.empty())
        return box;
    std::vector<Variable> vars = real_variables_of(lits);
    LinearProgram lp = program_from_literals(lits, vars);
    if (!lp.feasible())
        throw UnsatisfiableError("precondition is unsatisfiable");
    for (std::size_t i = 0; i < vars.size(); ++i) {
        std::vector<Rational> c(vars.size());
        c[i] = 1;
        Interval iv;
        if (LpResult lo = lp.minimize(c); lo.status == LpStatus::optimal)
            iv.lo = lo.value;
        if (LpResult hi = lp.maximize(c); hi.status == LpStatus::optimal)
            iv.hi = hi.value;
        box.set(vars[i], iv);
    }
    return box;
}

namespace detail {

inline std::optional<bool> decide_sign(const Interval& r, Comparison cmp)
{
    switch (cmp) {
        case Comparison::le:
            if (r.hi && *r.hi <= 0)
                return true;
            if (r.lo && *r.lo > 0)
                return false;
            return std::nullopt;
        case Comparison::lt:
            if (r.hi && *r.hi < 0)
                return true;
            if (r.lo && *r.lo >= 0)
                return false;
            return std::nullopt;
        case Comparison::eq:
            if (r.lo && r.hi && *r.lo == 0 && *r.hi == 0)
                return true;
            if ((r.lo && *r.lo > 0) || (r.hi && *r.hi < 0))
                return false;
            return std::nullopt;
        case Comparison::ge: {
            auto v = decide_sign(r, Comparison::lt);
            return v ? std::optional<bool>(!*v) : std::nullopt;
        }
        case Comparison::gt: {
            auto v = decide_sign(r, Comparison::le);
            return v ? std::optional<bool>(!*v) : std::nullopt;
        }
        case Comparison::ne: {
            auto v = decide_sign(r, Comparison::eq);
            return v ? std::optional<bool>(!*v) : std::nullopt;
        }
    }
    return std::nullopt;
}

inline Comparison comparison_of(Relation r)
{
    switch (r) {
        case Relation::le: return Comparison::le;
        case Relation::lt: return Comparison::lt;
        case Relation::eq: return Comparison::eq;
    }
    return Comparison::le;
}

} // namespace detail

/**
 * Rewrites terms and formulas under a box: ite conditions and inequality
 * atoms the box decides become constants. Equalities are kept because they
 * pin defined variables during enumeration.
 */
class BoxSimplifier
{
    public:
        explicit BoxSimplifier(const Box& box) : box_(box) {}

        Interval range(const LinearExpr& e)
        {
            Interval r = Interval::point(e.constant());
            for (const auto& [v, c] : e.terms())
                r = r + variable_range(v).scaled(c);
            return r;
        }

        Interval variable_range(const Variable& v)
        {
            if (box_.has(v))
                return box_.get(v);
            if (v.is_defined()) {
                auto it = defined_.find(v.id());
                if (it != defined_.end())
                    return it->second;
                Interval r = range(v.definition());
                defined_.emplace(v.id(), r);
                return r;
            }
            return {};
        }

        /** Interval of a term; ite branches are evaluated under their condition when it bounds a single variable. */
        Interval range(const Term& t)
        {
            const TermNode* n = t.node();
            switch (n->kind) {
                case TermKind::linear: return range(n->linear);
                case TermKind::sum: {
                    Interval r = range(n->linear);
                    for (const auto& [c, p] : n->parts)
                        r = r + range(p).scaled(c);
                    return r;
                }
                case TermKind::ite: {
                    auto c = decide(n->cond);
                    if (c)
                        return range(n->branches[*c ? 0 : 1]);
                    return branch_range(n->cond, n->branches[0], true).hull(branch_range(n->cond, n->branches[1], false));
                }
            }
            return {};
        }

        std::optional<bool> decide(const Atom& a)
        {
            if (a.is_boolean() || a.relation() == Relation::eq)
                return std::nullopt;
            LinearExpr e = a.lhs_expr();
            e.add_constant(-a.rhs());
            return detail::decide_sign(range(e), detail::comparison_of(a.relation()));
        }

        std::optional<bool> decide(const Formula& f)
        {
            Formula s = simplify(f);
            if (s.is_true())
                return true;
            if (s.is_false())
                return false;
            return std::nullopt;
        }

        Term simplify(const Term& t)
        {
            auto it = term_memo_.find(t.node());
            if (it != term_memo_.end())
                return it->second;
            const TermNode* n = t.node();
            Term out = t;
            switch (n->kind) {
                case TermKind::linear: break;
                case TermKind::sum: {
                    out = Term(n->linear);
                    for (const auto& [c, p] : n->parts)
                        out = out + c * simplify(p);
                    break;
                }
                case TermKind::ite: {
                    Formula c = simplify(n->cond);
                    if (c.is_true())
                        out = simplify(n->branches[0]);
                    else if (c.is_false())
                        out = simplify(n->branches[1]);
                    else
                        out = Term::ite(c, simplify(n->branches[0]), simplify(n->branches[1]));
                    break;
                }
            }
            term_memo_.emplace(t.node(), out);
            return out;
        }

        Formula simplify(const Formula& f)
        {
            auto it = memo_.find(f.node());
            if (it != memo_.end())
                return it->second;
            const FormulaNode* n = f.node();
            Formula out = f;
            switch (n->kind) {
                case FormulaKind::truth:
                case FormulaKind::falsity: break;
                case FormulaKind::atom:
                    if (auto v = decide(n->atom))
                        out = Formula::constant(*v);
                    break;
                case FormulaKind::compare: {
                    Term l = simplify(*n->lhs), r = simplify(*n->rhs);
                    out = Formula::compare(l, n->comparison, r);
                    if (out.kind() == FormulaKind::atom || out.kind() == FormulaKind::negation)
                        out = simplify_atoms(out, [&](const Atom& a) { return decide(a); });
                    else if (out.kind() == FormulaKind::compare && n->comparison != Comparison::eq && n->comparison != Comparison::ne)
                        if (auto v = detail::decide_sign(range(l - r), n->comparison))
                            out = Formula::constant(*v);
                    break;
                }
                case FormulaKind::negation: out = !simplify(n->children[0]); break;
                case FormulaKind::conjunction:
                case FormulaKind::disjunction: {
                    std::vector<Formula> cs;
                    for (const auto& c : n->children)
                        cs.push_back(simplify(c));
                    out = n->kind == FormulaKind::conjunction ? Formula::conjunction(cs) : Formula::disjunction(cs);
                    break;
                }
                case FormulaKind::implication: out = Formula::implies(simplify(n->children[0]), simplify(n->children[1])); break;
                case FormulaKind::equivalence: out = Formula::iff(simplify(n->children[0]), simplify(n->children[1])); break;
                case FormulaKind::ite:
                    out = Formula::ite(simplify(n->children[0]), simplify(n->children[1]), simplify(n->children[2]));
                    break;
            }
            memo_.emplace(n, out);
            return out;
        }

        WeightDag simplify(const WeightDag& w)
        {
            std::unordered_map<const WeightNode*, WeightDag> memo;
            std::function<WeightDag(const WeightNodePtr&)> rec = [&](const WeightNodePtr& n) -> WeightDag {
                auto it = memo.find(n.get());
                if (it != memo.end())
                    return it->second;
                WeightDag out;
                switch (n->kind) {
                    case WeightKind::poly: out = WeightDag(n->poly); break;
                    case WeightKind::ite: {
                        Formula c = simplify(n->cond);
                        if (c.is_true())
                            out = rec(n->children[0]);
                        else if (c.is_false())
                            out = rec(n->children[1]);
                        else
                            out = WeightDag::ite(c, rec(n->children[0]), rec(n->children[1]));
                        break;
                    }
                    case WeightKind::sum:
                    case WeightKind::product: {
                        std::vector<WeightDag> parts;
                        for (const auto& c : n->children)
                            parts.push_back(rec(c));
                        out = n->kind == WeightKind::sum ? WeightDag::sum(parts) : WeightDag::product(parts);
                        break;
                    }
                }
                memo.emplace(n.get(), out);
                return out;
            };
            // the support is what bounds the box, so it stays as is
            return rec(w.root()).with_support(w.support());
        }

    private:
        /** Range of `t` on the side of `cond` given by `side`. */
        Interval branch_range(const Formula& cond, const Term& t, bool side)
        {
            auto lit = as_literal(cond);
            if (!lit || !lit->atom.is_lra() || lit->atom.lhs().size() != 1 || lit->atom.relation() == Relation::eq)
                return range(t);
            bool holds = lit->positive == side;
            const auto& [v, c] = lit->atom.lhs()[0];
            // c·v ≤ b (or <) when holds, c·v ≥ b otherwise; closures suffice
            Rational bound = lit->atom.rhs() / c;
            Interval extra;
            if ((c > 0) == holds)
                extra.hi = bound;
            else
                extra.lo = bound;
            Interval current = variable_range(v);
            Interval narrowed = current.intersect(extra);
            if (narrowed.lo && narrowed.hi && *narrowed.lo > *narrowed.hi)
                return range(t);
            BoxSimplifier inner(box_);
            inner.box_.set(v, narrowed);
            return inner.range(t);
        }

        Box box_;
        std::unordered_map<std::uint64_t, Interval> defined_;
        std::unordered_map<const FormulaNode*, Formula> memo_;
        std::unordered_map<const TermNode*, Term> term_memo_;
};

/** `b` extended with intervals for the introduced variables, in dependency order. */
inline Box propagate_bounds(const SystemEncoding& sys, const Box& b)
{
    Box out = b;
    for (const auto& v : sys.introduced) {
        BoxSimplifier s(out);
        Interval r = s.range(v.definition());
        out.set(v, out.has(v) ? out.get(v).intersect(r) : r);
    }
    return out;
}

/**
 * χ_S, w_S and the outputs with every box-decided condition replaced by its
 * taken branch; the eligible partition conditions keep the undecided ones.
 */
inline SystemEncoding simplify_stable_conditions(const SystemEncoding& sys, const Box& b)
{
    Box full = propagate_bounds(sys, b);
    BoxSimplifier s(full);
    SystemEncoding out = sys;
    out.chi = s.simplify(sys.chi);
    out.decision = s.simplify(sys.decision);
    if (sys.output)
        out.output = s.simplify(*sys.output);
    out.weight = s.simplify(sys.weight);
    out.conditions.clear();
    for (const auto& c : sys.conditions)
        if (!s.decide(c))
            out.conditions.push_back(c);
    return out;
}

/** Weight ite conditions decided by the box replaced by their taken branch. */
inline WeightDag simplify_weight(const WeightDag& w, const Box& b)
{
    BoxSimplifier s(b);
    return s.simplify(w);
}

inline Formula simplify_formula(const Formula& f, const Box& b)
{
    BoxSimplifier s(b);
    return s.simplify(f);
}

} // namespace wmipfv

#endif

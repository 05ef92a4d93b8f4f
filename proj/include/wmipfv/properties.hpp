/**
 * Probabilistic properties as (Δ_pre, Δ_post, weight) triples over encoded
 * systems, including self-composed hyperproperties.
 */
#ifndef WMIPFV_PROPERTIES_HPP
#define WMIPFV_PROPERTIES_HPP

#include <map>

#include "models.hpp"
#include "wmi.hpp"

namespace wmipfv {

enum class Norm { l1, linf };

inline std::string to_string(Norm n) { return n == Norm::l1 ? "l1" : "linf"; }

/** |a − b| = ite(a < b; b − a; a − b). */
inline Term abs_difference(const Term& a, const Term& b) { return Term::ite(a < b, b - a, a - b); }

/**
 * ‖a − b‖ as an ite term: L1 sums absolute differences; L∞ uses
 * max({v1, v2} ∪ V) = ite(v1 < v2; max({v2} ∪ V); max({v1} ∪ V)).
 */
inline Term encode_distance(const std::vector<Term>& a, const std::vector<Term>& b, Norm norm)
{
    if (a.size() != b.size())
        throw ArityError("distance between vectors of different length");
    if (a.empty())
        return Term(0);
    std::vector<Term> d;
    for (std::size_t i = 0; i < a.size(); ++i)
        d.push_back(abs_difference(a[i], b[i]));
    if (norm == Norm::l1) {
        Term s(0);
        for (const auto& t : d)
            s = s + t;
        return s;
    }
    // max over {d[head]} ∪ d[from..]
    std::map<std::pair<std::size_t, std::size_t>, Term> memo;
    std::function<Term(std::size_t, std::size_t)> max_of = [&](std::size_t head, std::size_t from) -> Term {
        if (from == d.size())
            return d[head];
        auto key = std::make_pair(head, from);
        auto it = memo.find(key);
        if (it != memo.end())
            return it->second;
        Term out = Term::ite(d[head] < d[from], max_of(from, from + 1), max_of(head, from + 1));
        memo.emplace(key, out);
        return out;
    };
    return max_of(0, 1);
}

inline std::vector<Term> as_terms(const std::vector<Variable>& vs) { return {vs.begin(), vs.end()}; }

inline std::vector<Term> as_terms(const std::vector<Rational>& vs)
{
    std::vector<Term> out;
    for (const auto& v : vs)
        out.emplace_back(v);
    return out;
}

/**
 * ‖a − b‖ ⋈ ε as a conjunction of linear atoms: per-coordinate bands for L∞,
 * one facet per sign vector for L1. Equivalent to comparing encode_distance.
 */
inline Formula distance_ball(const std::vector<Term>& a, const std::vector<Term>& b, Norm norm, const Rational& eps,
                             bool strict = false)
{
    if (a.size() != b.size())
        throw ArityError("distance between vectors of different length");
    Comparison cmp = strict ? Comparison::lt : Comparison::le;
    std::vector<Formula> parts;
    if (norm == Norm::linf) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            parts.push_back(Formula::compare(a[i] - b[i], cmp, Term(eps)));
            parts.push_back(Formula::compare(b[i] - a[i], cmp, Term(eps)));
        }
    } else {
        if (a.size() > 20)
            throw UnsupportedError("L1 ball over more than 20 coordinates");
        for (std::size_t mask = 0; mask < (std::size_t(1) << a.size()); ++mask) {
            Term s(0);
            for (std::size_t i = 0; i < a.size(); ++i)
                s = s + ((mask >> i) & 1 ? b[i] - a[i] : a[i] - b[i]);
            parts.push_back(Formula::compare(s, cmp, Term(eps)));
        }
    }
    return Formula::conjunction(parts);
}

/** Uniform density over a bounded box. */
inline WeightDag uniform_prior(const std::vector<Variable>& vars, const Box& box)
{
    Rational volume = 1;
    std::vector<Formula> parts;
    for (const auto& v : vars) {
        Interval i = box.get(v);
        if (!i.bounded())
            throw UnboundedRegionError("uniform prior over unbounded '" + v.name() + "'");
        if (!(*i.lo < *i.hi))
            throw EmptyIntervalError("uniform prior over a degenerate interval for '" + v.name() + "'");
        volume *= *i.hi - *i.lo;
        parts.push_back(interval(v, *i.lo, *i.hi));
    }
    return WeightDag(Rational(1) / volume).with_support(Formula::conjunction(parts));
}

/** Triangular density on [lo, hi] with the given mode. */
inline WeightDag triangular_density(const Variable& n, const Rational& lo, const Rational& mode, const Rational& hi)
{
    if (!(lo <= mode && mode <= hi && lo < hi))
        throw EmptyIntervalError("triangular density needs lo ≤ mode ≤ hi and lo < hi");
    Polynomial x = Polynomial::variable(n);
    Rational width = hi - lo;
    Polynomial rising, falling;
    if (mode > lo)
        rising = (x - Polynomial(lo)).scaled(Rational(2) / (width * (mode - lo)));
    if (hi > mode)
        falling = (Polynomial(hi) - x).scaled(Rational(2) / (width * (hi - mode)));
    WeightDag w = mode == lo ? WeightDag(falling) : mode == hi ? WeightDag(rising) : WeightDag::ite(Term(n) <= Term(mode), rising, falling);
    return w.with_support(interval(n, lo, hi));
}

/** Copy of `sys` with variables mapped by `r` (fresh copies for unmapped ones). */
inline SystemEncoding rename(const SystemEncoding& sys, Renaming& r)
{
    SystemEncoding out;
    for (const auto& v : sys.inputs)
        out.inputs.push_back(r(v));
    out.chi = r.apply(sys.chi);
    out.weight = rename(sys.weight, r);
    if (sys.output)
        out.output = r.apply(*sys.output);
    out.decision = r.apply(sys.decision);
    for (const auto& v : sys.introduced)
        out.introduced.push_back(r(v));
    for (const auto& c : sys.conditions)
        out.conditions.push_back(r.apply(c));
    return out;
}

/** Δ_pre, Δ_post, the prior w_R and the systems whose χ_S and w_S join the weight. */
struct PropertyEncoding
{
    std::string kind;
    Formula delta_pre = Formula::top();
    Formula delta_post = Formula::top();
    WeightDag prior;
    std::vector<SystemEncoding> systems;
    std::map<std::string, std::string> parameters;

    Formula system_support() const
    {
        std::vector<Formula> parts;
        for (const auto& s : systems)
            parts.push_back(s.chi);
        return Formula::conjunction(parts);
    }

    /** w_R · Π w_S with support χ_R ∧ Π χ_S. */
    WeightDag weight() const
    {
        std::vector<WeightDag> parts{prior};
        std::vector<Formula> supports{prior.support()};
        for (const auto& s : systems) {
            parts.push_back(s.weight);
            supports.push_back(s.weight.support());
            supports.push_back(s.chi);
        }
        return WeightDag::product(parts).with_support(Formula::conjunction(supports));
    }

    /** Eligible partition conditions of all systems, deduplicated. */
    std::vector<Formula> conditions() const
    {
        std::vector<Formula> out;
        std::unordered_set<Atom, AtomHash> have;
        for (const auto& s : systems)
            for (const auto& c : s.conditions)
                if (auto l = as_literal(c); l && l->atom.is_lra() && have.insert(l->atom).second)
                    out.push_back(Formula::atom(l->atom));
        return out;
    }
};

/** P(Δ_post | Δ_pre) under the property's weight. */
inline Rational conditional_probability(const PropertyEncoding& p, const WmiOptions& options = {})
{
    return conditional_probability(p.delta_post, p.delta_pre, p.weight(), options);
}

inline Formula decision_is(const SystemEncoding& sys, bool c0) { return c0 ? sys.decision : !sys.decision; }

/** Δ_pre = ‖x − x0‖ ≤ ε, Δ_post = (c(x) ↔ c0). */
inline PropertyEncoding local_robustness(const SystemEncoding& sys, const std::vector<Rational>& x0, bool c0, const Rational& eps,
                                         const WeightDag& prior, Norm norm = Norm::linf)
{
    if (!(eps > 0))
        throw Error("robustness radius must be positive");
    if (x0.size() != sys.inputs.size())
        throw ArityError("reference point has the wrong dimension");
    PropertyEncoding p;
    p.kind = "local_robustness";
    p.delta_pre = distance_ball(as_terms(sys.inputs), as_terms(x0), norm, eps);
    p.delta_post = decision_is(sys, c0);
    p.prior = prior;
    p.systems = {sys};
    p.parameters = {{"eps", to_string(eps)}, {"norm", to_string(norm)}, {"c0", c0 ? "true" : "false"}};
    return p;
}

/** Regressor variant: Δ_post = ‖f(x) − y0‖ ≤ δ. */
inline PropertyEncoding local_robustness_regression(const SystemEncoding& sys, const std::vector<Rational>& x0, const Rational& y0,
                                                    const Rational& eps, const Rational& delta, const WeightDag& prior,
                                                    Norm norm = Norm::linf)
{
    if (!sys.output)
        throw UnsupportedError("regression robustness needs a real output");
    PropertyEncoding p = local_robustness(sys, x0, true, eps, prior, norm);
    p.kind = "local_robustness_regression";
    p.delta_post = distance_ball({*sys.output}, {Term(y0)}, Norm::linf, delta);
    p.parameters["delta"] = to_string(delta);
    return p;
}

/** Δ_post = (c_1(x) ↔ c_2(x)); Δ_pre = ⊤, or an ε-ball around x0 for the local variant. */
inline PropertyEncoding equivalence(const SystemEncoding& sys1, const SystemEncoding& sys2, const WeightDag& prior,
                                    const std::optional<std::pair<std::vector<Rational>, Rational>>& local = std::nullopt,
                                    Norm norm = Norm::linf)
{
    if (sys1.inputs.size() != sys2.inputs.size())
        throw ArityError("equivalence between systems with different input arity");
    SystemEncoding second = sys2;
    if (sys1.inputs != sys2.inputs) {
        Renaming r(false);
        for (std::size_t i = 0; i < sys1.inputs.size(); ++i)
            r.map(sys2.inputs[i], sys1.inputs[i]);
        second = rename(sys2, r);
    }
    PropertyEncoding p;
    p.kind = "equivalence";
    if (local) {
        if (local->first.size() != sys1.inputs.size())
            throw ArityError("reference point has the wrong dimension");
        p.delta_pre = distance_ball(as_terms(sys1.inputs), as_terms(local->first), norm, local->second);
        p.parameters["eps"] = to_string(local->second);
    }
    p.delta_post = Formula::iff(sys1.decision, second.decision);
    p.prior = prior;
    p.systems = {sys1, second};
    return p;
}

struct ParityResult
{
    Rational ratio;
    /** P(c | M) and P(c | ¬M). */
    Rational minority_rate, majority_rate;
};

/** r = P(c | M) / P(c | ¬M) from four WMI calls. */
inline ParityResult demographic_parity(const SystemEncoding& sys, const Formula& minority, const WeightDag& prior,
                                       const WmiOptions& options = {})
{
    PropertyEncoding p;
    p.prior = prior;
    p.systems = {sys};
    WeightDag w = p.weight();
    // χ_S pins every introduced variable, so the group masses need only the prior
    Rational m = wmi(minority, prior, options).value;
    Rational not_m = wmi(!minority, prior, options).value;
    if (m == 0 || not_m == 0)
        throw NullConditioningError("protected group or its complement has zero mass");
    Rational mc = wmi(minority && sys.decision, w, options).value;
    Rational not_mc = wmi(!minority && sys.decision, w, options).value;
    ParityResult r;
    r.minority_rate = mc / m;
    r.majority_rate = not_mc / not_m;
    if (r.majority_rate == 0)
        throw NullConditioningError("positive rate outside the protected group is zero");
    r.ratio = r.minority_rate / r.majority_rate;
    return r;
}

inline Rational demographic_parity_ratio(const SystemEncoding& sys, const Formula& minority, const WeightDag& prior,
                                         const WmiOptions& options = {})
{
    return demographic_parity(sys, minority, prior, options).ratio;
}

/** Δ_pre = ‖x − x′‖ < ε, Δ_post = (c(x) ↔ c(x′)), weight = sc(w_R · w_S). */
inline PropertyEncoding individual_fairness(const SystemEncoding& sys, const WeightDag& prior, const Rational& eps, Norm norm = Norm::linf)
{
    if (!(eps > 0))
        throw Error("fairness radius must be positive");
    Renaming r;
    SystemEncoding copy = rename(sys, r);
    WeightDag prior_copy = rename(prior, r);
    PropertyEncoding p;
    p.kind = "individual_fairness";
    p.delta_pre = distance_ball(as_terms(sys.inputs), as_terms(copy.inputs), norm, eps, true);
    p.delta_post = Formula::iff(sys.decision, copy.decision);
    p.prior = WeightDag::product({prior, prior_copy});
    p.systems = {sys, copy};
    p.parameters = {{"eps", to_string(eps)}, {"norm", to_string(norm)}};
    return p;
}

/**
 * Pairs differing on one feature: x′ copies x except a fresh x_i′ (the other
 * features are shared, i.e. x_j = x_j′). Δ_pre = (x_i < x_i′),
 * Δ_post = (f(x) < f(x′)), weight = sc(w_R · w_S).
 */
inline PropertyEncoding monotonicity(const SystemEncoding& sys, std::size_t feature, const WeightDag& prior)
{
    if (!sys.output)
        throw UnsupportedError("monotonicity needs a real output");
    if (feature >= sys.inputs.size())
        throw ArityError("monotonicity feature index out of range");
    Renaming r;
    for (std::size_t j = 0; j < sys.inputs.size(); ++j)
        if (j != feature)
            r.map(sys.inputs[j], sys.inputs[j]);
    SystemEncoding copy = rename(sys, r);
    WeightDag prior_copy = rename(prior, r);
    PropertyEncoding p;
    p.kind = "monotonicity";
    p.delta_pre = Term(sys.inputs[feature]) < Term(copy.inputs[feature]);
    p.delta_post = *sys.output < *copy.output;
    p.prior = WeightDag::product({prior, prior_copy});
    p.systems = {sys, copy};
    p.parameters = {{"feature", std::to_string(feature)}};
    return p;
}

/**
 * x′ = x + n on the noised features (x′ defined by that sum), identity
 * elsewhere. Δ_post = (c(x) ↔ c(x′)), weight = w_R(x) · w_N(n) · sc(w_S).
 */
inline PropertyEncoding noise_robustness(const SystemEncoding& sys, const WeightDag& prior, const WeightDag& noise,
                                         const std::vector<std::pair<std::size_t, Variable>>& noised)
{
    Renaming r;
    std::vector<Formula> pre;
    VariableSet touched;
    for (const auto& [i, n] : noised) {
        if (i >= sys.inputs.size())
            throw ArityError("noised feature index out of range");
        if (!n.is_real())
            throw ArityError("noise variable must be real");
        const Variable& x = sys.inputs[i];
        Variable moved = Variable::defined(x.name() + "'", Term(x) + Term(n));
        r.map(x, moved);
        touched.insert(x);
        pre.push_back(eq(Term(moved), Term(x) + Term(n)));
    }
    for (const auto& x : sys.inputs)
        if (!touched.count(x))
            r.map(x, x);
    SystemEncoding copy = rename(sys, r);
    PropertyEncoding p;
    p.kind = "noise_robustness";
    p.delta_pre = Formula::conjunction(pre);
    p.delta_post = Formula::iff(sys.decision, copy.decision);
    p.prior = WeightDag::product({prior, noise});
    p.systems = {sys, copy};
    return p;
}

} // namespace wmipfv

#endif

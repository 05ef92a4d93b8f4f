/**
 * Threshold verification of probabilistic properties: the normalization
 * constant, a partition of the search space on system conditions, ordered
 * accumulation with early exit, and the three-way robustness classification.
 */
#ifndef WMIPFV_VERIFIER_HPP
#define WMIPFV_VERIFIER_HPP

#include <chrono>
#include <numeric>
#include <random>

#include "bound_propagation.hpp"
#include "oracle.hpp"
#include "properties.hpp"

namespace wmipfv {

enum class Heuristic { none, random, sampling };

inline std::string to_string(Heuristic h)
{
    switch (h) {
        case Heuristic::none: return "none";
        case Heuristic::random: return "random";
        case Heuristic::sampling: return "sampling";
    }
    return "?";
}

struct VerifierOptions
{
    Rational k = 0;
    std::size_t partitions = 16;
    Heuristic heuristic = Heuristic::sampling;
    std::uint64_t seed = 0;
    std::size_t samples = 1000;
    bool bound_propagation = true;
    /** Pass when P̃ > k·Z (false: P̃ ≥ k·Z). */
    bool strict = true;
    bool early_exit = true;
    WmiOptions wmi;
};

struct Counters
{
    std::size_t assignments = 0;
    std::size_t integrations = 0;
    std::size_t search_nodes = 0;

    void add(const WmiResult& r)
    {
        assignments += r.num_assignments;
        integrations += r.num_integrations;
        search_nodes += r.search_nodes;
    }
};

struct Verdict
{
    bool passed = false;
    /** P̃/Z: exact when complete, a lower bound otherwise. */
    Rational probability = 0;
    bool complete = false;
    Rational z = 0;
    Rational mass = 0;
    std::vector<Rational> contributions;
    std::size_t partitions_solved = 0;
    std::size_t partitions_total = 0;
    /** Conditions requested and actually available for partitioning. */
    std::size_t conditions_requested = 0, conditions_used = 0;
    bool sampling_fallback = false;
    Counters counters;
    double seconds = 0;
};

struct ConditionScores
{
    std::vector<double> p;
    std::vector<double> score;
    std::size_t accepted = 0;
    bool fallback = false;
};

/** Property after bound propagation: the WMI problem pieces plus the eligible conditions. */
struct PreparedProblem
{
    Formula pre, post;
    WeightDag weight;
    std::vector<Formula> conditions;
    /** Box of the precondition and the prior support. */
    Box box;
};

/** Applies bound propagation when requested. */
inline PreparedProblem prepare(const PropertyEncoding& prop, bool bound_propagation)
{
    PreparedProblem out;
    out.pre = prop.delta_pre;
    out.post = prop.delta_post;
    Box box = bounds_from_precondition(prop.delta_pre, prop.prior.support());
    out.box = box;
    if (!bound_propagation) {
        out.weight = prop.weight();
        out.conditions = prop.conditions();
        return out;
    }
    PropertyEncoding p = prop;
    for (auto& s : p.systems) {
        box = propagate_bounds(s, box);
        s = simplify_stable_conditions(s, box);
    }
    p.prior = simplify_weight(prop.prior, box);
    out.post = simplify_formula(prop.delta_post, box);
    out.weight = p.weight();
    out.conditions = p.conditions();
    return out;
}

/**
 * p_i: self-normalized estimate of P(cond_i | Δ_pre ∧ Δ_post) from uniform
 * samples over the precondition box of the weight support, weighted by the
 * weight; s_i = |p_i − 1/2|. With no accepted sample every p_i = 1/2.
 */
inline ConditionScores score_conditions(const std::vector<Formula>& conditions, const Formula& pre, const Formula& post,
                                        const WeightDag& w, std::size_t samples, std::uint64_t seed, const Box* sample_box = nullptr)
{
    if (samples == 0)
        throw Error("sampling heuristic needs at least one sample");
    ConditionScores out;
    out.p.assign(conditions.size(), 0.5);
    DoubleEvaluator ev;
    std::size_t accept = ev.add_formula(pre && post && w.support());
    std::size_t wi = ev.add_weight(w);
    std::vector<std::size_t> ci;
    for (const auto& c : conditions)
        ci.push_back(ev.add_formula(c));
    Box box = sample_box ? *sample_box : bounds_from_precondition(pre, w.support());
    for (const auto& v : ev.free_reals())
        if (!box.get(v).bounded()) {
            out.fallback = true;
            break;
        }
    if (!out.fallback) {
        detail::UniformPointSampler sampler(ev, box, seed);
        double total = 0;
        std::vector<double> hit(conditions.size(), 0.0);
        for (std::size_t s = 0; s < samples; ++s) {
            sampler.draw();
            if (!ev.formula(accept))
                continue;
            double wv = ev.weight(wi);
            if (wv <= 0)
                continue;
            ++out.accepted;
            total += wv;
            for (std::size_t i = 0; i < ci.size(); ++i)
                if (ev.formula(ci[i]))
                    hit[i] += wv;
        }
        if (total > 0)
            for (std::size_t i = 0; i < conditions.size(); ++i)
                out.p[i] = hit[i] / total;
        else
            out.fallback = true;
    }
    for (double p : out.p)
        out.score.push_back(std::abs(p - 0.5));
    return out;
}

struct PartitionPlan
{
    std::vector<Formula> partitions;
    std::vector<Formula> chosen;
    bool sampling_fallback = false;
};

/**
 * log2(n_p) conditions (the first ones, a seeded shuffle, or the lowest
 * sampling scores with ties by index) and all sign combinations over them.
 * The sampling heuristic orders the combinations by estimated mass.
 */
inline PartitionPlan make_partitions(std::size_t n_p, const std::vector<Formula>& conditions, const Formula& pre, const Formula& post,
                                     const WeightDag& w, Heuristic heuristic, std::uint64_t seed, std::size_t samples = 1000,
                                     const Box* sample_box = nullptr)
{
    if (n_p == 0 || (n_p & (n_p - 1)) != 0)
        throw Error("number of partitions must be a power of two");
    std::size_t want = 0;
    while ((std::size_t(1) << want) < n_p)
        ++want;
    std::size_t m = std::min(want, conditions.size());
    PartitionPlan plan;
    std::vector<std::size_t> order(conditions.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    ConditionScores scores;
    if (heuristic == Heuristic::random) {
        std::shuffle(order.begin(), order.end(), rng);
    } else if (heuristic == Heuristic::sampling && !conditions.empty() && m > 0) {
        scores = score_conditions(conditions, pre, post, w, samples, seed, sample_box);
        plan.sampling_fallback = scores.fallback;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores.score[a] < scores.score[b]; });
    }
    for (std::size_t i = 0; i < m; ++i)
        plan.chosen.push_back(conditions[order[i]]);

    std::vector<std::size_t> combos(std::size_t(1) << m);
    std::iota(combos.begin(), combos.end(), 0);
    // bit i set means condition i negated; combo 0 is all positive
    auto mass = [&](std::size_t combo) {
        double p = 1;
        for (std::size_t i = 0; i < m; ++i) {
            double pi = scores.p.empty() ? 0.5 : scores.p[order[i]];
            p *= (combo >> (m - 1 - i)) & 1 ? 1 - pi : pi;
        }
        return p;
    };
    if (heuristic == Heuristic::random)
        std::shuffle(combos.begin(), combos.end(), rng);
    else if (heuristic == Heuristic::sampling && !plan.sampling_fallback && !scores.p.empty())
        std::stable_sort(combos.begin(), combos.end(), [&](std::size_t a, std::size_t b) { return mass(a) > mass(b); });
    for (std::size_t combo : combos) {
        std::vector<Formula> lits;
        for (std::size_t i = 0; i < m; ++i)
            lits.push_back((combo >> (m - 1 - i)) & 1 ? !plan.chosen[i] : plan.chosen[i]);
        plan.partitions.push_back(Formula::conjunction(lits));
    }
    return plan;
}

/**
 * Z = WMI(Δ_pre, w) over the booleans of Δ_post and the conditions too; accumulates P̃ += WMI(Δ_pre ∧ Δ_post ∧ φ) over the
 * ordered partitions and passes as soon as P̃ exceeds k·Z.
 */
inline Verdict verify(const PropertyEncoding& prop, const VerifierOptions& options = {})
{
    if (options.k < 0 || options.k > 1)
        throw Error("threshold k must lie in [0, 1]");
    auto start = std::chrono::steady_clock::now();
    Verdict v;
    PreparedProblem prob = prepare(prop, options.bound_propagation);
    Formula pre = prob.pre && boolean_frame(prob.post && Formula::conjunction(prob.conditions));
    WmiResult z = wmi(pre, prob.weight, options.wmi);
    v.counters.add(z);
    v.z = z.value;
    if (v.z == 0)
        throw NullConditioningError("precondition has zero mass");
    PartitionPlan plan = make_partitions(options.partitions, prob.conditions, prob.pre, prob.post, prob.weight, options.heuristic,
                                         options.seed, options.samples, &prob.box);
    std::size_t want = 0;
    while ((std::size_t(1) << want) < options.partitions)
        ++want;
    v.conditions_requested = want;
    v.conditions_used = plan.chosen.size();
    v.sampling_fallback = plan.sampling_fallback;
    v.partitions_total = plan.partitions.size();
    Rational target = options.k * v.z;
    auto reached = [&] { return options.strict ? v.mass > target : v.mass >= target; };
    for (const auto& phi : plan.partitions) {
        WmiResult r = wmi(pre && prob.post && phi, prob.weight, options.wmi);
        v.counters.add(r);
        v.contributions.push_back(r.value);
        v.mass += r.value;
        ++v.partitions_solved;
        if (options.early_exit && reached()) {
            v.passed = true;
            break;
        }
    }
    v.complete = v.partitions_solved == v.partitions_total;
    if (!v.passed)
        v.passed = reached();
    v.probability = v.mass / v.z;
    v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return v;
}

/** Demographic parity with the system simplified under the prior-support box. */
inline ParityResult demographic_parity(const SystemEncoding& sys, const Formula& minority, const WeightDag& prior, bool bound_propagation,
                                       const WmiOptions& options = {})
{
    if (!bound_propagation)
        return demographic_parity(sys, minority, prior, options);
    Box box = bounds_from_precondition(Formula::top(), prior.support());
    box = propagate_bounds(sys, box);
    SystemEncoding simplified = simplify_stable_conditions(sys, box);
    return demographic_parity(simplified, minority, simplify_weight(prior, box), options);
}

enum class RobustnessClass { robust, probably_robust, not_robust };

inline std::string to_string(RobustnessClass c)
{
    switch (c) {
        case RobustnessClass::robust: return "Rob";
        case RobustnessClass::probably_robust: return "~Rob";
        case RobustnessClass::not_robust: return "!Rob";
    }
    return "?";
}

struct RobustnessResult
{
    RobustnessClass cls = RobustnessClass::robust;
    /** Violation probability: exact when complete, a lower bound otherwise. */
    Rational violation = 0;
    bool complete = false;
    Rational z = 0;
    std::size_t partitions_solved = 0;
    Counters counters;
    double seconds = 0;
};

/**
 * Violation probability 1 − P(Δ_post | Δ_pre): Rob when 0, ~Rob when below k,
 * ¬Rob otherwise. Violation mass is accumulated per partition; with early exit
 * the search stops once it reaches k·Z.
 */
inline RobustnessResult classify_robustness(const PropertyEncoding& prop, const VerifierOptions& options = {})
{
    auto start = std::chrono::steady_clock::now();
    RobustnessResult out;
    PreparedProblem prob = prepare(prop, options.bound_propagation);
    Formula pre = prob.pre && boolean_frame(prob.post && Formula::conjunction(prob.conditions));
    WmiResult z = wmi(pre, prob.weight, options.wmi);
    out.counters.add(z);
    out.z = z.value;
    if (out.z == 0)
        throw NullConditioningError("precondition has zero mass");
    Formula violated = !prob.post;
    PartitionPlan plan = make_partitions(options.partitions, prob.conditions, prob.pre, violated, prob.weight, options.heuristic,
                                         options.seed, options.samples, &prob.box);
    Rational target = options.k * out.z;
    Rational mass = 0;
    for (const auto& phi : plan.partitions) {
        WmiResult r = wmi(pre && violated && phi, prob.weight, options.wmi);
        out.counters.add(r);
        mass += r.value;
        ++out.partitions_solved;
        if (options.early_exit && mass >= target && mass > 0)
            break;
    }
    out.complete = out.partitions_solved == plan.partitions.size();
    out.violation = mass / out.z;
    if (mass == 0)
        out.cls = RobustnessClass::robust;
    else if (mass < target)
        out.cls = RobustnessClass::probably_robust;
    else
        out.cls = RobustnessClass::not_robust;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace wmipfv

#endif

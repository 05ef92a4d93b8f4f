// Shared problem builders for the test suites.
#ifndef WMIPFV_TESTS_FIXTURES_HPP
#define WMIPFV_TESTS_FIXTURES_HPP

#include <array>
#include <random>

#include <wmipfv/box.hpp>
#include <wmipfv/logic.hpp>
#include <wmipfv/weights.hpp>

namespace fixtures {

using namespace wmipfv;

/** Δ = (x ∈ [0,1]) ∧ (y ∈ [0,1]) ∧ (A → (x + y ≤ 1)). */
struct UnitSquareExample
{
    Variable A = Variable::boolean("A");
    Variable x = Variable::real("x");
    Variable y = Variable::real("y");

    Formula sum_le_one() const { return Term(x) + Term(y) <= Term(1); }

    Formula delta() const
    {
        return interval(x, 0, 1) && interval(y, 0, 1) && Formula::implies(Formula::variable(A), sum_le_one());
    }
};

inline Rational random_rational(std::mt19937_64& rng, int lo, int hi, int den)
{
    std::uniform_int_distribution<int> d(lo * den, hi * den);
    return Rational(d(rng), den);
}

/** Random linear atom over `reals` with small integer coefficients. */
inline Formula random_lra_atom(std::mt19937_64& rng, const std::vector<Variable>& reals)
{
    std::uniform_int_distribution<int> coef(-2, 2), pick(0, 2);
    for (;;) {
        LinearExpr e(random_rational(rng, -1, 1, 4));
        for (const auto& v : reals)
            e.add(v, coef(rng));
        if (e.is_constant())
            continue;
        Comparison cmp = std::array<Comparison, 3>{Comparison::le, Comparison::lt, Comparison::ge}[pick(rng)];
        return compare_zero(e, cmp);
    }
}

/**
 * Random formula over the given variables: a random boolean combination of
 * `n_atoms` atoms (real atoms and boolean propositions).
 */
inline Formula random_formula(std::mt19937_64& rng, const std::vector<Variable>& reals, const std::vector<Variable>& bools,
                              int n_atoms)
{
    std::vector<Formula> leaves;
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<std::size_t> pick_bool(0, bools.empty() ? 0 : bools.size() - 1);
    for (int i = 0; i < n_atoms; ++i) {
        bool boolean = !bools.empty() && (reals.empty() || coin(rng));
        Formula a = boolean ? Formula::variable(bools[pick_bool(rng)]) : random_lra_atom(rng, reals);
        leaves.push_back(coin(rng) ? a : !a);
    }
    std::uniform_int_distribution<int> op(0, 3);
    while (leaves.size() > 1) {
        std::uniform_int_distribution<std::size_t> idx(0, leaves.size() - 1);
        std::size_t i = idx(rng);
        Formula a = leaves[i];
        leaves.erase(leaves.begin() + static_cast<long>(i));
        std::uniform_int_distribution<std::size_t> idx2(0, leaves.size() - 1);
        std::size_t j = idx2(rng);
        Formula b = leaves[j];
        switch (op(rng)) {
            case 0: leaves[j] = a && b; break;
            case 1: leaves[j] = a || b; break;
            case 2: leaves[j] = Formula::implies(a, b); break;
            default: leaves[j] = Formula::iff(a, b); break;
        }
    }
    return leaves.empty() ? Formula::top() : leaves[0];
}

/** Conjunction of x ∈ [lo, hi] for every real. */
inline Formula box(const std::vector<Variable>& reals, const Rational& lo, const Rational& hi)
{
    std::vector<Formula> fs;
    for (const auto& v : reals)
        fs.push_back(interval(v, lo, hi));
    return Formula::conjunction(fs);
}

/** Random polynomial with coefficients in [0, 3] and degree at most `max_degree`. */
inline Polynomial random_polynomial(std::mt19937_64& rng, const std::vector<Variable>& reals, unsigned max_degree)
{
    std::uniform_int_distribution<int> coef(0, 3), nterms(1, 3);
    std::uniform_int_distribution<unsigned> deg(0, max_degree);
    Polynomial p;
    for (int t = nterms(rng); t > 0; --t) {
        Polynomial m(Rational(coef(rng) + 1, 2));
        if (!reals.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, reals.size() - 1);
            for (unsigned e = deg(rng); e > 0; --e)
                m *= Polynomial::variable(reals[pick(rng)]);
        }
        p += m;
    }
    return p;
}

/** WMI problem over the unit box: Δ, piecewise-polynomial w and the box. */
struct RandomProblem
{
    std::vector<Variable> reals, bools;
    Formula delta;
    WeightDag weight;
    Box box;
};

/**
 * Up to `max_reals` reals in [0, 1], up to `max_bools` booleans, at most
 * `max_atoms` atoms in Δ and the weight conditions together, weight degree at
 * most `max_degree`.
 */
inline RandomProblem random_problem(std::mt19937_64& rng, int max_reals = 3, int max_bools = 4, int max_atoms = 8,
                                    unsigned max_degree = 3)
{
    RandomProblem p;
    std::uniform_int_distribution<int> nr(1, max_reals), nb(0, max_bools);
    int n_reals = nr(rng), n_bools = nb(rng);
    for (int i = 0; i < n_reals; ++i)
        p.reals.push_back(Variable::real("x" + std::to_string(i)));
    for (int i = 0; i < n_bools; ++i)
        p.bools.push_back(Variable::boolean("B" + std::to_string(i)));
    std::uniform_int_distribution<int> split(1, std::max(1, max_atoms - 2));
    int delta_atoms = split(rng);
    int weight_atoms = std::min(2, max_atoms - delta_atoms);
    p.delta = random_formula(rng, p.reals, p.bools, delta_atoms);
    WeightDag w = random_polynomial(rng, p.reals, max_degree);
    for (int i = 0; i < weight_atoms; ++i) {
        std::uniform_int_distribution<int> coin(0, 1);
        Formula c = !p.bools.empty() && coin(rng) ? Formula::variable(p.bools[static_cast<std::size_t>(i) % p.bools.size()])
                                                  : random_lra_atom(rng, p.reals);
        w = w + WeightDag::ite(c, random_polynomial(rng, p.reals, max_degree), random_polynomial(rng, p.reals, max_degree));
    }
    p.weight = w.with_support(box(p.reals, 0, 1));
    for (const auto& v : p.reals)
        p.box.set(v, Interval::closed(0, 1));
    return p;
}

} // namespace fixtures

#endif

#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include <wmipfv/enumeration.hpp>
#include <wmipfv/lp.hpp>
#include <wmipfv/printing.hpp>

#include "fixtures.hpp"

using namespace wmipfv;

namespace {

Literal lit(const Formula& f)
{
    auto l = as_literal(f);
    EXPECT_TRUE(l);
    return *l;
}

std::set<std::string> as_strings(const std::vector<Assignment>& mus)
{
    std::set<std::string> out;
    for (const auto& m : mus)
        out.insert(to_string(m));
    return out;
}

/** TTA by brute force over all 2^n assignments, with the LP feasibility check. */
std::set<std::string> brute_force_tta(const Formula& f, const std::vector<Atom>& universe)
{
    std::set<std::string> out;
    std::size_t n = universe.size();
    for (std::uint64_t bits = 0; bits < (std::uint64_t(1) << n); ++bits) {
        Assignment mu;
        for (std::size_t i = 0; i < n; ++i)
            mu.set(universe[i], (bits >> i) & 1);
        if (evaluate_partial(f, mu) != std::optional<bool>(true))
            continue;
        if (!check_lra_sat(mu.lra_literals()))
            continue;
        out.insert(to_string(mu));
    }
    return out;
}

/** Interior of μ: every inequality made strict. */
std::vector<Literal> interior(const Assignment& mu)
{
    std::vector<Literal> out;
    for (const auto& l : mu.lra_literals()) {
        const Atom& a = l.atom;
        LinearExpr e = a.lhs_expr();
        e.add_constant(-a.rhs());
        if (a.relation() == Relation::eq) {
            out.push_back(l);
        } else if (l.positive) {
            out.push_back(*Atom::canonical(e, Relation::lt));
        } else {
            out.push_back(*Atom::canonical(-e, Relation::lt));
        }
    }
    return out;
}

} // namespace

TEST(LraSat, DisjointHalfLinesUnsat)
{
    Variable x = Variable::real("x");
    EXPECT_FALSE(check_lra_sat({lit(Term(x) < Term(0)), lit(Term(x) > Term(1))}));
}

TEST(LraSat, PointIsSat)
{
    Variable x = Variable::real("x");
    EXPECT_TRUE(check_lra_sat({lit(Term(0) <= Term(x)), lit(Term(x) <= Term(0))}));
}

TEST(LraSat, StrictWithEquality)
{
    Variable x = Variable::real("x");
    EXPECT_TRUE(check_lra_sat({lit(Term(x) < Term(0)), lit(Term(x) > Term(-1)), lit(eq(Term(x), Term(Rational(-1, 2))))}));
    EXPECT_FALSE(check_lra_sat({lit(Term(x) < Term(0)), lit(Term(x) >= Term(0))}));
    EXPECT_FALSE(check_lra_sat({lit(Term(x) <= Term(0)), lit(Term(x) >= Term(0)), lit(!eq(Term(x), Term(0)))}));
}

TEST(LraSat, OpenTriangleBoundary)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    // x > 0, y > 0, x + y < 0 is empty; with <= 0 on the sum it is still empty
    EXPECT_FALSE(check_lra_sat({lit(Term(x) > Term(0)), lit(Term(y) > Term(0)), lit(Term(x) + Term(y) <= Term(0))}));
    EXPECT_TRUE(check_lra_sat({lit(Term(x) >= Term(0)), lit(Term(y) >= Term(0)), lit(Term(x) + Term(y) <= Term(0))}));
}

TEST(Enumerate, UnitSquareExampleHasThreeAssignments)
{
    fixtures::UnitSquareExample ex;
    auto mus = enumerate_tta(ex.delta());
    ASSERT_EQ(mus.size(), 3u);
    Atom A = Atom::boolean(ex.A);
    Atom s = ex.sum_le_one().atom();
    std::set<std::pair<bool, bool>> seen;
    for (const auto& mu : mus)
        seen.insert({*mu.value(A), *mu.value(s)});
    EXPECT_EQ(seen, (std::set<std::pair<bool, bool>>{{true, true}, {false, true}, {false, false}}));
}

TEST(Enumerate, DisjointHalfLinesHaveTwoAssignments)
{
    Variable x = Variable::real("x");
    auto mus = enumerate_tta((Term(x) < Term(0)) || (Term(x) > Term(1)));
    EXPECT_EQ(mus.size(), 2u);
}

TEST(Enumerate, FalseYieldsNothing)
{
    EXPECT_TRUE(enumerate_tta(Formula::bottom()).empty());
}

TEST(Enumerate, TrueOverExtraBooleanAtom)
{
    Variable a = Variable::boolean("a");
    EXPECT_EQ(enumerate_tta(Formula::top(), {Atom::boolean(a)}).size(), 2u);
}

TEST(Enumerate, DumpWritesEachAssignment)
{
    Variable x = Variable::real("x");
    std::ostringstream out;
    EnumerationOptions opts;
    opts.dump = &out;
    enumerate_tta((Term(x) < Term(0)) || (Term(x) > Term(1)), {}, opts);
    EXPECT_EQ(out.str(), "(and (< x 0) (<= x 1))\n(and (not (< x 0)) (not (<= x 1)))\n");
}

TEST(Enumerate, AgreesWithBruteForceAndIsDisjoint)
{
    std::mt19937_64 rng(2024);
    std::vector<Variable> reals{Variable::real("x"), Variable::real("y")};
    std::vector<Variable> bools{Variable::boolean("A"), Variable::boolean("B")};
    for (int trial = 0; trial < 40; ++trial) {
        Formula f = fixtures::random_formula(rng, reals, bools, 4 + trial % 5) && fixtures::box(reals, -1, 1);
        Enumerator pruned(f);
        auto with = pruned.all();
        EnumerationOptions no_pruning;
        no_pruning.theory_pruning = false;
        Enumerator plain(f, {}, no_pruning);
        auto without = plain.all();
        ASSERT_LE(pruned.universe().size(), 12u);
        auto expected = brute_force_tta(f, pruned.universe());
        EXPECT_EQ(as_strings(with), expected) << to_string(f);
        EXPECT_EQ(as_strings(without), expected) << to_string(f);
        EXPECT_LE(pruned.stats().search_nodes, plain.stats().search_nodes);
        for (const auto& mu : with) {
            EXPECT_EQ(evaluate_partial(f, mu), std::optional<bool>(true));
            EXPECT_TRUE(check_lra_sat(mu.lra_literals()));
        }
        for (std::size_t i = 0; i < with.size(); ++i)
            for (std::size_t j = i + 1; j < with.size(); ++j) {
                bool same_booleans = true;
                for (const auto& l : with[i].literals())
                    if (l.atom.is_boolean())
                        same_booleans &= *with[j].value(l.atom) == l.positive;
                if (!same_booleans)
                    continue;
                auto both = interior(with[i]);
                auto other = interior(with[j]);
                both.insert(both.end(), other.begin(), other.end());
                EXPECT_FALSE(check_lra_sat(both));
            }
    }
}

TEST(Enumerate, EqualityAtomsMatchBruteForce)
{
    std::mt19937_64 rng(99);
    Variable x = Variable::real("x"), y = Variable::real("y");
    for (int trial = 0; trial < 20; ++trial) {
        Formula f = fixtures::box({x, y}, 0, 2) &&
                    (eq(Term(x), Term(y)) || fixtures::random_lra_atom(rng, {x, y})) &&
                    (!eq(Term(x) + Term(y), Term(fixtures::random_rational(rng, 0, 3, 2))) || fixtures::random_lra_atom(rng, {x}));
        Enumerator e(f);
        EXPECT_EQ(as_strings(e.all()), brute_force_tta(f, e.universe())) << to_string(f);
    }
}

TEST(Simplex, AgreesWithLinearProgram)
{
    std::mt19937_64 rng(5);
    std::vector<Variable> reals{Variable::real("a"), Variable::real("b"), Variable::real("c")};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Literal> lits;
        std::uniform_int_distribution<int> count(1, 7), coin(0, 1);
        int n = count(rng);
        for (int i = 0; i < n; ++i) {
            Formula f = fixtures::random_lra_atom(rng, reals);
            auto l = as_literal(f);
            ASSERT_TRUE(l);
            lits.push_back(coin(rng) ? *l : l->negated());
        }
        Formula conj = Formula::top();
        for (const auto& l : lits)
            conj = conj && Formula::literal(l);
        // the conjunction is itself a single-assignment enumeration problem
        std::vector<Atom> universe;
        for (const auto& l : lits)
            universe.push_back(l.atom);
        bool lp = check_lra_sat(lits);
        bool incremental = !enumerate_tta(conj).empty() || conj.is_true();
        EXPECT_EQ(lp, incremental) << to_string(conj);
    }
}

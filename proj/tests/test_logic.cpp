#include <random>

#include <gtest/gtest.h>

#include <wmipfv/logic.hpp>
#include <wmipfv/printing.hpp>

#include "fixtures.hpp"

using namespace wmipfv;

namespace {

Formula ite_max(const Term& a, const Term& b) { return a <= b; }

Term max_term(const Term& a, const Term& b) { return Term::ite(ite_max(a, b), b, a); }

std::size_t count_kind(const Formula& f, FormulaKind kind)
{
    std::size_t n = f.kind() == kind;
    for (const auto& c : f.children())
        n += count_kind(c, kind);
    return n;
}

} // namespace

TEST(Atoms, UnitSquareExampleHasSixAtoms)
{
    fixtures::UnitSquareExample ex;
    auto atoms = atoms_of(ex.delta());
    EXPECT_EQ(atoms.size(), 6u);
    std::size_t booleans = 0;
    for (const auto& a : atoms)
        booleans += a.is_boolean();
    EXPECT_EQ(booleans, 1u);
}

TEST(Atoms, DisjointHalfLinesHaveTwoAtoms)
{
    Variable x = Variable::real("x");
    Formula delta = (Term(x) < Term(0)) || (Term(x) > Term(1));
    EXPECT_EQ(atoms_of(delta).size(), 2u);
}

TEST(Atoms, TrueHasNoAtoms)
{
    EXPECT_TRUE(atoms_of(Formula::top()).empty());
}

TEST(Atoms, ScaledInequalitiesShareOneAtom)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    Formula a = Term(x) + Term(y) <= Term(1);
    Formula b = Rational(2) * Term(x) + Rational(2) * Term(y) <= Term(2);
    ASSERT_EQ(a.kind(), FormulaKind::atom);
    ASSERT_EQ(b.kind(), FormulaKind::atom);
    EXPECT_TRUE(a.atom() == b.atom());
    EXPECT_EQ(atoms_of(a && b).size(), 1u);
}

TEST(Atoms, CanonicalFormIsIdempotent)
{
    std::mt19937_64 rng(7);
    std::vector<Variable> vs{Variable::real("a"), Variable::real("b"), Variable::real("c")};
    for (int trial = 0; trial < 200; ++trial) {
        LinearExpr e(fixtures::random_rational(rng, -3, 3, 4));
        for (const auto& v : vs)
            e.add(v, fixtures::random_rational(rng, -3, 3, 6));
        if (e.is_constant())
            continue;
        for (Relation rel : {Relation::le, Relation::lt, Relation::eq}) {
            auto lit = Atom::canonical(e, rel);
            ASSERT_TRUE(lit);
            LinearExpr again = lit->atom.lhs_expr();
            again.add_constant(-lit->atom.rhs());
            auto lit2 = Atom::canonical(again, lit->atom.relation());
            ASSERT_TRUE(lit2);
            EXPECT_TRUE(lit2->atom == lit->atom);
            EXPECT_TRUE(lit2->positive);
            // coprime integer coefficients with positive leading coefficient
            Integer g = 0;
            for (const auto& [v, c] : lit->atom.lhs()) {
                EXPECT_TRUE(is_integer(c));
                g = gcd(g, numerator_of(c));
            }
            EXPECT_EQ(g, 1);
            EXPECT_GT(lit->atom.lhs().front().second, 0);
        }
    }
}

TEST(Atoms, CanonicalLiteralPreservesTruth)
{
    std::mt19937_64 rng(11);
    Variable x = Variable::real("x"), y = Variable::real("y");
    for (int trial = 0; trial < 300; ++trial) {
        LinearExpr e(fixtures::random_rational(rng, -2, 2, 3));
        e.add(x, fixtures::random_rational(rng, -2, 2, 2));
        e.add(y, fixtures::random_rational(rng, -2, 2, 2));
        for (Comparison cmp : {Comparison::le, Comparison::lt, Comparison::eq, Comparison::ge, Comparison::gt, Comparison::ne}) {
            Formula f = compare_zero(e, cmp);
            for (int p = 0; p < 5; ++p) {
                Valuation pt;
                pt.set(x, fixtures::random_rational(rng, -2, 2, 2));
                pt.set(y, fixtures::random_rational(rng, -2, 2, 2));
                EXPECT_EQ(evaluate(f, pt), compare_values(evaluate(e, pt), cmp, 0));
            }
        }
    }
}

TEST(Interval, ClosedUnitInterval)
{
    Variable x = Variable::real("x");
    Formula f = interval(x, 0, 1);
    EXPECT_EQ(to_string(f), "(and (not (< x 0)) (<= x 1))");
    for (auto [v, expected] : std::vector<std::pair<Rational, bool>>{{0, true}, {1, true}, {Rational(1, 2), true}, {-1, false}, {2, false}}) {
        Valuation pt;
        pt.set(x, v);
        EXPECT_EQ(evaluate(f, pt), expected);
    }
}

TEST(Interval, PointInterval)
{
    Variable x = Variable::real("x");
    Formula f = interval(x, 0, 0);
    Valuation at0, at1;
    at0.set(x, Rational(0));
    at1.set(x, Rational(1, 100));
    EXPECT_TRUE(evaluate(f, at0));
    EXPECT_FALSE(evaluate(f, at1));
}

TEST(Interval, EmptyIntervalThrows)
{
    Variable x = Variable::real("x");
    EXPECT_THROW(interval(x, 1, 0), EmptyIntervalError);
}

TEST(Interval, BooleanVariableRejected)
{
    Variable a = Variable::boolean("a");
    EXPECT_THROW(interval(a, 0, 1), ArityError);
}

TEST(Elaboration, AbsoluteValue)
{
    Variable x = Variable::real("x");
    Term abs_x = Term::ite(Term(x) < Term(0), -Term(x), Term(x));
    Formula f = abs_x <= Term(1);
    EXPECT_TRUE(has_ite_terms(f));
    Elaborator el;
    Formula g = el.elaborate(f);
    EXPECT_FALSE(has_ite_terms(g));
    ASSERT_EQ(el.fresh_variables().size(), 1u);
    Variable t = el.fresh_variables()[0];
    EXPECT_EQ(count_kind(g, FormulaKind::implication), 2u);
    // atoms: (t <= 1), (x < 0), (t + x = 0), (t - x = 0)
    EXPECT_EQ(atoms_of(g).size(), 4u);
    for (int v = -3; v <= 3; ++v) {
        Valuation pt;
        pt.set(x, Rational(v, 2));
        EXPECT_EQ(evaluate(g, pt), evaluate(f, pt));
        EXPECT_EQ(pt.real(t), abs(Rational(v, 2)));
    }
}

TEST(Elaboration, FormulaWithoutIteIsUnchanged)
{
    fixtures::UnitSquareExample ex;
    Formula d = ex.delta();
    EXPECT_EQ(elaborate_terms(d).node(), d.node());
}

TEST(Elaboration, MaxOfThreeSharesSubterm)
{
    Variable a = Variable::real("a"), b = Variable::real("b"), c = Variable::real("c");
    Term m = max_term(max_term(a, b), c);
    Elaborator el;
    Formula g = el.elaborate(m <= Term(5));
    EXPECT_EQ(el.fresh_variables().size(), 2u);
    EXPECT_EQ(count_kind(g, FormulaKind::implication), 4u);
}

TEST(Elaboration, UniqueExtensionToFreshVariables)
{
    std::mt19937_64 rng(3);
    Variable a = Variable::real("a"), b = Variable::real("b");
    Term m = max_term(a, Term::ite(Term(b) < Term(0), -Term(b), Term(b)));
    // m <= m + 1 folds to true after elaboration, leaving only the guards
    Elaborator el;
    Formula guards = el.elaborate(m <= m + Term(1));
    ASSERT_EQ(el.fresh_variables().size(), 2u);
    for (int trial = 0; trial < 100; ++trial) {
        Rational va = fixtures::random_rational(rng, -2, 2, 4), vb = fixtures::random_rational(rng, -2, 2, 4);
        Valuation pt;
        pt.set(a, va);
        pt.set(b, vb);
        EXPECT_TRUE(evaluate(guards, pt));
        for (const auto& t : el.fresh_variables()) {
            Valuation bad;
            bad.set(a, va);
            bad.set(b, vb);
            for (const auto& u : el.fresh_variables())
                bad.set(u, pt.real(u) + (u == t ? Rational(1, 3) : Rational(0)));
            EXPECT_FALSE(evaluate(guards, bad));
        }
    }
}

TEST(Renaming, FreshCopyIsDisjoint)
{
    fixtures::UnitSquareExample ex;
    Formula d = ex.delta();
    Renaming r1, r2;
    Formula d1 = r1.apply(d);
    Formula d2 = r2.apply(d);
    auto atoms = atoms_of(d), atoms1 = atoms_of(d1), atoms2 = atoms_of(d2);
    EXPECT_EQ(atoms1.size(), atoms.size());
    std::unordered_set<Atom, AtomHash> s(atoms.begin(), atoms.end()), s1(atoms1.begin(), atoms1.end());
    for (const auto& a : atoms1)
        EXPECT_FALSE(s.count(a));
    for (const auto& a : atoms2) {
        EXPECT_FALSE(s.count(a));
        EXPECT_FALSE(s1.count(a));
    }
    EXPECT_EQ(r1(ex.x).name(), "x'");
    EXPECT_FALSE(r1(ex.x) == r2(ex.x));
    EXPECT_EQ(to_string(r1.apply(Term(ex.x) <= Term(1))), "(<= x' 1)");
}

TEST(Renaming, StructureIsPreserved)
{
    fixtures::UnitSquareExample ex;
    Formula d = ex.delta();
    Renaming r;
    Formula d1 = r.apply(d);
    std::string s = to_string(d), s1 = to_string(d1);
    EXPECT_EQ(s1, "(and (not (< x' 0)) (<= x' 1) (not (< y' 0)) (<= y' 1) (=> A' (<= (+ x' y') 1)))");
    EXPECT_EQ(s, "(and (not (< x 0)) (<= x 1) (not (< y 0)) (<= y 1) (=> A (<= (+ x y) 1)))");
}

TEST(Printing, MixedFormula)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    Variable A = Variable::boolean("A"), B = Variable::boolean("B");
    Formula f = (Term(x) + Term(y) <= Term(1)) && (Formula::variable(A) || !Formula::variable(B));
    EXPECT_EQ(to_string(f), "(and (<= (+ x y) 1) (or A (not B)))");
    EXPECT_EQ(to_string(Rational(1, 2) * Term(x) <= Term(Rational(1, 3))), "(<= x 2/3)");
    EXPECT_EQ(to_string(Rational(-1, 2) * Term(x) + Term(y) < Term(Rational(1, 3))), "(not (<= (+ x (* -2 y)) -2/3))");
}

TEST(Assignment, RejectsDoubleAssignment)
{
    Variable A = Variable::boolean("A");
    Assignment mu;
    mu.set(Atom::boolean(A), true);
    EXPECT_THROW(mu.set(Atom::boolean(A), false), Error);
}

TEST(Assignment, PartialEvaluation)
{
    fixtures::UnitSquareExample ex;
    Assignment mu;
    mu.set(Atom::boolean(ex.A), false);
    Formula f = Formula::implies(Formula::variable(ex.A), ex.sum_le_one());
    EXPECT_EQ(evaluate_partial(f, mu), std::optional<bool>(true));
    Assignment nu;
    nu.set(Atom::boolean(ex.A), true);
    EXPECT_EQ(evaluate_partial(f, nu), std::nullopt);
}

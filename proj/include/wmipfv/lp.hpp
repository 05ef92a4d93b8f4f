/**
 * Dense exact-rational linear programming: two-phase primal simplex with
 * Bland's rule over free (sign-unrestricted) variables.
 */
#ifndef WMIPFV_LP_HPP
#define WMIPFV_LP_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "logic.hpp"
#include "rational.hpp"

namespace wmipfv {

enum class LpStatus { infeasible, unbounded, optimal };

struct LpResult
{
    LpStatus status = LpStatus::infeasible;
    Rational value;
    std::vector<Rational> point;
};

namespace detail {

/** Tableau for max c·x s.t. Ax = b, x ≥ 0, b ≥ 0. The last row is the objective. */
class Tableau
{
    public:
        Tableau(std::vector<std::vector<Rational>> rows, std::vector<Rational> rhs)
            : m_(rows.size()), n_(rows.empty() ? 0 : rows[0].size())
        {
            t_.resize(m_ + 1, std::vector<Rational>(n_ + m_ + 1));
            for (std::size_t i = 0; i < m_; ++i) {
                for (std::size_t j = 0; j < n_; ++j)
                    t_[i][j] = rows[i][j];
                t_[i][n_ + i] = 1;
                t_[i][n_ + m_] = rhs[i];
                basis_.push_back(n_ + i);
            }
        }

        /** Runs both phases; returns status and the structural solution. */
        LpResult solve(const std::vector<Rational>& c)
        {
            LpResult result;
            std::size_t width = n_ + m_;
            // phase 1: maximise -Σ artificials
            auto& obj = t_[m_];
            for (std::size_t j = 0; j <= width; ++j)
                obj[j] = 0;
            for (std::size_t i = 0; i < m_; ++i)
                for (std::size_t j = 0; j < n_; ++j)
                    if (t_[i][j] != 0)
                        obj[j] -= t_[i][j];
            for (std::size_t i = 0; i < m_; ++i)
                obj[width] -= t_[i][width];
            optimize(width);
            if (obj[width] != 0) {
                result.status = LpStatus::infeasible;
                return result;
            }
            drive_out_artificials();
            // phase 2
            for (std::size_t j = 0; j <= width; ++j)
                obj[j] = 0;
            for (std::size_t j = 0; j < n_; ++j)
                obj[j] = -c[j];
            for (std::size_t i = 0; i < m_; ++i) {
                std::size_t b = basis_[i];
                if (b < n_ && obj[b] != 0) {
                    Rational f = obj[b];
                    for (std::size_t j = 0; j <= width; ++j)
                        if (t_[i][j] != 0)
                            obj[j] -= f * t_[i][j];
                }
            }
            if (!optimize(n_)) {
                result.status = LpStatus::unbounded;
                return result;
            }
            result.status = LpStatus::optimal;
            result.value = obj[width];
            result.point.assign(n_, Rational(0));
            for (std::size_t i = 0; i < m_; ++i)
                if (basis_[i] < n_)
                    result.point[basis_[i]] = t_[i][width];
            return result;
        }

    private:
        void pivot(std::size_t r, std::size_t c)
        {
            std::size_t width = n_ + m_;
            Rational p = t_[r][c];
            for (std::size_t j = 0; j <= width; ++j)
                if (t_[r][j] != 0)
                    t_[r][j] /= p;
            for (std::size_t i = 0; i <= m_; ++i) {
                if (i == r || t_[i][c] == 0)
                    continue;
                Rational f = t_[i][c];
                for (std::size_t j = 0; j <= width; ++j)
                    if (t_[r][j] != 0)
                        t_[i][j] -= f * t_[r][j];
            }
            basis_[r] = c;
        }

        /** Bland's rule over columns < `limit`; false when unbounded. */
        bool optimize(std::size_t limit)
        {
            std::size_t width = n_ + m_;
            for (;;) {
                std::size_t enter = limit;
                for (std::size_t j = 0; j < limit; ++j)
                    if (t_[m_][j] < 0) {
                        enter = j;
                        break;
                    }
                if (enter == limit)
                    return true;
                std::optional<std::size_t> leave;
                Rational best;
                for (std::size_t i = 0; i < m_; ++i) {
                    if (t_[i][enter] <= 0)
                        continue;
                    Rational ratio = t_[i][width] / t_[i][enter];
                    if (!leave || ratio < best || (ratio == best && basis_[i] < basis_[*leave])) {
                        leave = i;
                        best = ratio;
                    }
                }
                if (!leave)
                    return false;
                pivot(*leave, enter);
            }
        }

        void drive_out_artificials()
        {
            for (std::size_t i = 0; i < m_; ++i) {
                if (basis_[i] < n_)
                    continue;
                for (std::size_t j = 0; j < n_; ++j)
                    if (t_[i][j] != 0) {
                        pivot(i, j);
                        break;
                    }
                // a row left with an artificial basic is redundant; its artificial stays at 0
            }
        }

        std::size_t m_, n_;
        std::vector<std::vector<Rational>> t_;
        std::vector<std::size_t> basis_;
};

} // namespace detail

/**
 * Linear program over `n` free real variables with constraints `a·x ⋈ b`,
 * ⋈ ∈ {≤,<,=}. Optimization works on the closure; `feasible` honors strict
 * constraints exactly by maximizing a common slack ε.
 */
class LinearProgram
{
    public:
        explicit LinearProgram(std::size_t n) : n_(n) {}

        std::size_t dimension() const { return n_; }

        void add(std::vector<Rational> a, Relation rel, const Rational& b)
        {
            if (a.size() != n_)
                throw ArityError("constraint width does not match program dimension");
            rows_.push_back({std::move(a), rel, b});
        }

        /** max c·x over the closure of the constraints. */
        LpResult maximize(const std::vector<Rational>& c) const { return solve(c, false); }

        LpResult minimize(const std::vector<Rational>& c) const
        {
            std::vector<Rational> neg(c.size());
            for (std::size_t i = 0; i < c.size(); ++i)
                neg[i] = -c[i];
            LpResult r = solve(neg, false);
            r.value = -r.value;
            return r;
        }

        /** Satisfiability with strict inequalities honored. */
        bool feasible() const
        {
            bool strict = false;
            for (const auto& r : rows_)
                strict |= r.rel == Relation::lt;
            if (!strict)
                return solve(std::vector<Rational>(n_), false).status == LpStatus::optimal;
            LpResult r = solve({}, true);
            return r.status == LpStatus::optimal && r.value > 0;
        }

    private:
        struct Row
        {
            std::vector<Rational> a;
            Relation rel;
            Rational b;
        };

        // Columns: x⁺ (n), x⁻ (n), slacks (one per inequality), ε (when requested).
        LpResult solve(const std::vector<Rational>& c, bool epsilon) const
        {
            std::size_t slacks = 0;
            for (const auto& r : rows_)
                slacks += r.rel != Relation::eq;
            std::size_t width = 2 * n_ + slacks + (epsilon ? 1 : 0);
            std::vector<std::vector<Rational>> A;
            std::vector<Rational> b;
            std::size_t s = 2 * n_;
            for (const auto& r : rows_) {
                std::vector<Rational> row(width);
                for (std::size_t j = 0; j < n_; ++j) {
                    row[j] = r.a[j];
                    row[n_ + j] = -r.a[j];
                }
                if (r.rel != Relation::eq)
                    row[s++] = 1;
                if (epsilon && r.rel == Relation::lt)
                    row[width - 1] = 1;
                Rational rhs = r.b;
                if (rhs < 0) {
                    for (auto& v : row)
                        v = -v;
                    rhs = -rhs;
                }
                A.push_back(std::move(row));
                b.push_back(rhs);
            }
            std::vector<Rational> cost(width);
            if (epsilon) {
                // ε ≤ 1 keeps the program bounded
                std::vector<Rational> row(width + 0);
                row[width - 1] = 1;
                A.push_back(row);
                b.push_back(1);
                // the cap needs its own slack column
                for (auto& r : A)
                    r.push_back(0);
                A.back().back() = 1;
                cost.push_back(0);
                cost[width - 1] = 1;
            } else {
                for (std::size_t j = 0; j < n_; ++j) {
                    cost[j] = c[j];
                    cost[n_ + j] = -c[j];
                }
            }
            LpResult r;
            if (A.empty()) {
                bool zero = std::all_of(cost.begin(), cost.end(), [](const Rational& v) { return v == 0; });
                r.status = zero ? LpStatus::optimal : LpStatus::unbounded;
                r.value = 0;
                r.point.assign(n_, Rational(0));
                return r;
            }
            detail::Tableau t(std::move(A), std::move(b));
            LpResult raw = t.solve(cost);
            r.status = raw.status;
            r.value = raw.value;
            if (raw.status == LpStatus::optimal) {
                r.point.resize(n_);
                for (std::size_t j = 0; j < n_; ++j)
                    r.point[j] = raw.point[j] - raw.point[n_ + j];
                if (epsilon)
                    r.value = raw.point[width - 1];
            }
            return r;
        }

        std::size_t n_;
        std::vector<Row> rows_;
};

/** LP over the real variables of a literal conjunction, indexed by `variables`. */
inline LinearProgram program_from_literals(const std::vector<Literal>& literals, const std::vector<Variable>& variables)
{
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t i = 0; i < variables.size(); ++i)
        index[variables[i].id()] = i;
    LinearProgram lp(variables.size());
    for (const auto& lit : literals) {
        if (lit.atom.is_boolean())
            continue;
        std::vector<Rational> a(variables.size());
        for (const auto& [v, c] : lit.atom.lhs()) {
            auto it = index.find(v.id());
            if (it == index.end())
                throw Error("variable '" + v.name() + "' missing from program index");
            a[it->second] = c;
        }
        const Rational& b = lit.atom.rhs();
        if (lit.positive) {
            lp.add(std::move(a), lit.atom.relation(), b);
        } else if (lit.atom.relation() == Relation::le) {
            for (auto& v : a)
                v = -v;
            lp.add(std::move(a), Relation::lt, -b);
        } else if (lit.atom.relation() == Relation::lt) {
            for (auto& v : a)
                v = -v;
            lp.add(std::move(a), Relation::le, -b);
        }
        // negated equalities are handled by the caller
    }
    return lp;
}

/** Real variables of a literal conjunction in id order. */
inline std::vector<Variable> real_variables_of(const std::vector<Literal>& literals)
{
    std::vector<Variable> vs;
    VariableSet seen;
    for (const auto& l : literals)
        if (l.atom.is_lra())
            for (const auto& [v, c] : l.atom.lhs())
                if (seen.insert(v).second)
                    vs.push_back(v);
    std::sort(vs.begin(), vs.end());
    return vs;
}

/**
 * Exact satisfiability of a conjunction of LRA literals over the reals.
 * A negated equality `¬(e = b)` is satisfiable alongside the rest iff either
 * `e < b` or `e > b` is; each one is split independently, which is exact
 * because the remaining set is convex.
 */
inline bool check_lra_sat(const std::vector<Literal>& literals)
{
    std::vector<Literal> base;
    std::vector<Literal> disequalities;
    for (const auto& l : literals) {
        if (l.atom.is_boolean())
            continue;
        if (!l.positive && l.atom.relation() == Relation::eq)
            disequalities.push_back(l);
        else
            base.push_back(l);
    }
    auto vars = real_variables_of(literals);
    if (!program_from_literals(base, vars).feasible())
        return false;
    // A convex set avoids a finite union of hyperplanes unless it lies inside one of them.
    for (const auto& d : disequalities) {
        auto below = base;
        auto lt = Atom::canonical(d.atom.lhs_expr() - LinearExpr(d.atom.rhs()), Relation::lt);
        below.push_back(*lt);
        if (program_from_literals(below, vars).feasible())
            continue;
        auto above = base;
        auto le = Atom::canonical(d.atom.lhs_expr() - LinearExpr(d.atom.rhs()), Relation::le);
        above.push_back(le->negated());
        if (!program_from_literals(above, vars).feasible())
            return false;
    }
    return true;
}

} // namespace wmipfv

#endif

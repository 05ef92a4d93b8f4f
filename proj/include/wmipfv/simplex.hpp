/**
 * Incremental general simplex for conjunctions of bounds on linear forms,
 * with backtrackable bound assertions. Strict bounds are represented with
 * δ-rationals c + kδ for an infinitesimal δ > 0.
 */
#ifndef WMIPFV_SIMPLEX_HPP
#define WMIPFV_SIMPLEX_HPP

#include <optional>
#include <vector>

#include "rational.hpp"

namespace wmipfv {

struct DeltaRational
{
    Rational c;
    Rational k;

    friend bool operator<(const DeltaRational& a, const DeltaRational& b) { return a.c < b.c || (a.c == b.c && a.k < b.k); }
    friend bool operator>(const DeltaRational& a, const DeltaRational& b) { return b < a; }
    friend bool operator<=(const DeltaRational& a, const DeltaRational& b) { return !(b < a); }
    friend bool operator>=(const DeltaRational& a, const DeltaRational& b) { return !(a < b); }
    friend bool operator==(const DeltaRational& a, const DeltaRational& b) { return a.c == b.c && a.k == b.k; }
    friend DeltaRational operator+(const DeltaRational& a, const DeltaRational& b) { return {a.c + b.c, a.k + b.k}; }
    friend DeltaRational operator-(const DeltaRational& a, const DeltaRational& b) { return {a.c - b.c, a.k - b.k}; }
    friend DeltaRational operator*(const Rational& s, const DeltaRational& a) { return {s * a.c, s * a.k}; }
};

/**
 * Tableau over variables 0..n-1. Rows define slack variables as linear
 * combinations of earlier ones. Bounds are asserted between `push` and `pop`.
 */
class IncrementalSimplex
{
    public:
        /** New structural variable; returns its index. */
        std::size_t add_variable()
        {
            std::size_t v = lower_.size();
            lower_.emplace_back();
            upper_.emplace_back();
            value_.push_back({0, 0});
            row_of_.push_back(-1);
            for (auto& r : rows_)
                r.push_back(0);
            return v;
        }

        /**
         * New slack variable s = Σ coef·var. Must be called before any bound
         * is asserted.
         */
        std::size_t add_row(const std::vector<std::pair<std::size_t, Rational>>& combination)
        {
            std::size_t s = add_variable();
            std::vector<Rational> row(lower_.size());
            DeltaRational val{0, 0};
            for (const auto& [v, c] : combination) {
                if (row_of_[v] >= 0) {
                    // substitute the basic variable's row
                    const auto& br = rows_[row_of_[v]];
                    for (std::size_t j = 0; j < br.size(); ++j)
                        if (br[j] != 0)
                            row[j] += c * br[j];
                } else {
                    row[v] += c;
                }
                val = val + c * value_[v];
            }
            row_of_[s] = static_cast<long>(rows_.size());
            basic_.push_back(s);
            rows_.push_back(std::move(row));
            value_[s] = val;
            return s;
        }

        std::size_t size() const { return lower_.size(); }

        void push() { marks_.push_back(trail_.size()); }

        void pop()
        {
            std::size_t mark = marks_.back();
            marks_.pop_back();
            while (trail_.size() > mark) {
                auto& e = trail_.back();
                lower_[e.var] = std::move(e.lower);
                upper_[e.var] = std::move(e.upper);
                trail_.pop_back();
            }
        }

        /** false on an immediate conflict with the opposite bound. */
        bool assert_upper(std::size_t v, const DeltaRational& u)
        {
            if (upper_[v] && *upper_[v] <= u)
                return true;
            if (lower_[v] && u < *lower_[v])
                return false;
            record(v);
            upper_[v] = u;
            if (row_of_[v] < 0 && value_[v] > u)
                update(v, u);
            return true;
        }

        bool assert_lower(std::size_t v, const DeltaRational& l)
        {
            if (lower_[v] && *lower_[v] >= l)
                return true;
            if (upper_[v] && l > *upper_[v])
                return false;
            record(v);
            lower_[v] = l;
            if (row_of_[v] < 0 && value_[v] < l)
                update(v, l);
            return true;
        }

        /** Feasibility of the asserted bounds (Bland's rule; terminates). */
        bool check()
        {
            for (;;) {
                std::optional<std::size_t> bad;
                for (std::size_t v = 0; v < lower_.size(); ++v)
                    if (row_of_[v] >= 0 && violates(v)) {
                        bad = v;
                        break;
                    }
                if (!bad)
                    return true;
                std::size_t b = *bad;
                const auto& row = rows_[row_of_[b]];
                bool raise = lower_[b] && value_[b] < *lower_[b];
                std::optional<std::size_t> enter;
                for (std::size_t j = 0; j < row.size(); ++j) {
                    if (row[j] == 0 || row_of_[j] >= 0)
                        continue;
                    bool can_increase = !upper_[j] || value_[j] < *upper_[j];
                    bool can_decrease = !lower_[j] || value_[j] > *lower_[j];
                    bool ok = raise ? ((row[j] > 0 && can_increase) || (row[j] < 0 && can_decrease))
                                    : ((row[j] < 0 && can_increase) || (row[j] > 0 && can_decrease));
                    if (ok) {
                        enter = j;
                        break;
                    }
                }
                if (!enter)
                    return false;
                pivot_and_update(b, *enter, raise ? *lower_[b] : *upper_[b]);
            }
        }

        const DeltaRational& value(std::size_t v) const { return value_[v]; }

    private:
        struct TrailEntry
        {
            std::size_t var;
            std::optional<DeltaRational> lower, upper;
        };

        bool violates(std::size_t v) const
        {
            return (lower_[v] && value_[v] < *lower_[v]) || (upper_[v] && value_[v] > *upper_[v]);
        }

        void record(std::size_t v) { trail_.push_back({v, lower_[v], upper_[v]}); }

        void update(std::size_t j, const DeltaRational& target)
        {
            DeltaRational diff = target - value_[j];
            for (std::size_t r = 0; r < rows_.size(); ++r)
                if (rows_[r][j] != 0)
                    value_[basic_[r]] = value_[basic_[r]] + rows_[r][j] * diff;
            value_[j] = target;
        }

        void pivot_and_update(std::size_t b, std::size_t j, const DeltaRational& target)
        {
            std::size_t r = static_cast<std::size_t>(row_of_[b]);
            Rational a = rows_[r][j];
            DeltaRational theta = Rational(1 / a) * (target - value_[b]);
            value_[b] = target;
            value_[j] = value_[j] + theta;
            for (std::size_t k = 0; k < rows_.size(); ++k)
                if (k != r && rows_[k][j] != 0)
                    value_[basic_[k]] = value_[basic_[k]] + rows_[k][j] * theta;
            pivot(r, b, j);
        }

        // b = a·j + rest  ⇒  j = (b − rest)/a
        void pivot(std::size_t r, std::size_t b, std::size_t j)
        {
            auto& row = rows_[r];
            Rational a = row[j];
            Rational inv = 1 / a;
            for (auto& x : row)
                if (x != 0)
                    x = -x * inv;
            row[j] = 0;
            row[b] = inv;
            for (std::size_t k = 0; k < rows_.size(); ++k) {
                if (k == r || rows_[k][j] == 0)
                    continue;
                Rational f = rows_[k][j];
                rows_[k][j] = 0;
                for (std::size_t c = 0; c < row.size(); ++c)
                    if (row[c] != 0)
                        rows_[k][c] += f * row[c];
            }
            row_of_[j] = static_cast<long>(r);
            row_of_[b] = -1;
            basic_[r] = j;
        }

        std::vector<std::optional<DeltaRational>> lower_, upper_;
        std::vector<DeltaRational> value_;
        std::vector<long> row_of_;
        std::vector<std::size_t> basic_;
        std::vector<std::vector<Rational>> rows_;
        std::vector<TrailEntry> trail_;
        std::vector<std::size_t> marks_;
};

} // namespace wmipfv

#endif

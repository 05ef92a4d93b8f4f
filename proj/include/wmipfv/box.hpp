/**
 * Axis-aligned boxes: a closed interval per real variable, with missing
 * endpoints meaning unbounded.
 */
#ifndef WMIPFV_BOX_HPP
#define WMIPFV_BOX_HPP

#include <optional>
#include <unordered_map>
#include <vector>

#include "logic.hpp"

namespace wmipfv {

struct Interval
{
    std::optional<Rational> lo, hi;

    static Interval point(const Rational& v) { return {v, v}; }
    static Interval closed(const Rational& l, const Rational& h)
    {
        if (l > h)
            throw EmptyIntervalError("interval [" + to_string(l) + ", " + to_string(h) + "] is empty");
        return {l, h};
    }

    bool bounded() const { return lo && hi; }
    bool contains(const Rational& v) const { return (!lo || *lo <= v) && (!hi || v <= *hi); }
    bool contains(const Interval& o) const
    {
        return (!lo || (o.lo && *lo <= *o.lo)) && (!hi || (o.hi && *o.hi <= *hi));
    }

    Interval intersect(const Interval& o) const
    {
        Interval r = *this;
        if (o.lo && (!r.lo || *o.lo > *r.lo))
            r.lo = o.lo;
        if (o.hi && (!r.hi || *o.hi < *r.hi))
            r.hi = o.hi;
        return r;
    }

    Interval hull(const Interval& o) const
    {
        Interval r;
        if (lo && o.lo)
            r.lo = std::min(*lo, *o.lo);
        if (hi && o.hi)
            r.hi = std::max(*hi, *o.hi);
        return r;
    }

    /** k·[lo, hi]. */
    Interval scaled(const Rational& k) const
    {
        if (k == 0)
            return point(0);
        Interval r;
        if (k > 0) {
            if (lo)
                r.lo = *lo * k;
            if (hi)
                r.hi = *hi * k;
        } else {
            if (hi)
                r.lo = *hi * k;
            if (lo)
                r.hi = *lo * k;
        }
        return r;
    }

    friend Interval operator+(const Interval& a, const Interval& b)
    {
        Interval r;
        if (a.lo && b.lo)
            r.lo = *a.lo + *b.lo;
        if (a.hi && b.hi)
            r.hi = *a.hi + *b.hi;
        return r;
    }

    friend bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }
};

inline std::string to_string(const Interval& i)
{
    return "[" + (i.lo ? to_string(*i.lo) : std::string("-inf")) + ", " + (i.hi ? to_string(*i.hi) : std::string("+inf")) + "]";
}

class Box
{
    public:
        void set(const Variable& v, const Interval& i)
        {
            if (i.lo && i.hi && *i.lo > *i.hi)
                throw EmptyIntervalError("empty interval for '" + v.name() + "'");
            auto [it, inserted] = index_.emplace(v.id(), vars_.size());
            if (inserted) {
                vars_.push_back(v);
                intervals_.push_back(i);
            } else {
                intervals_[it->second] = i;
            }
        }

        /** Intersects the current interval of v with i. */
        void tighten(const Variable& v, const Interval& i) { set(v, get(v).intersect(i)); }

        Interval get(const Variable& v) const
        {
            auto it = index_.find(v.id());
            return it == index_.end() ? Interval{} : intervals_[it->second];
        }
        bool has(const Variable& v) const { return index_.count(v.id()) > 0; }

        const std::vector<Variable>& variables() const { return vars_; }

        bool bounded() const
        {
            for (const auto& i : intervals_)
                if (!i.bounded())
                    return false;
            return true;
        }

        /** Interval of a linear expression by interval arithmetic. */
        Interval range(const LinearExpr& e) const
        {
            Interval r = Interval::point(e.constant());
            for (const auto& [v, c] : e.terms())
                r = r + get(v).scaled(c);
            return r;
        }

    private:
        std::vector<Variable> vars_;
        std::vector<Interval> intervals_;
        std::unordered_map<std::uint64_t, std::size_t> index_;
};

} // namespace wmipfv

#endif

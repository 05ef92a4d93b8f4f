/**
 * Sparse multivariate polynomials with rational coefficients over real
 * variables.
 */
#ifndef WMIPFV_POLYNOMIAL_HPP
#define WMIPFV_POLYNOMIAL_HPP

#include <map>
#include <unordered_map>
#include <vector>

#include "logic.hpp"

namespace wmipfv {

/** Product of powers, sorted by variable id, exponents positive. */
using Monomial = std::vector<std::pair<Variable, unsigned>>;

struct MonomialLess
{
    bool operator()(const Monomial& a, const Monomial& b) const
    {
        for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
            if (a[i].first.id() != b[i].first.id())
                return a[i].first.id() < b[i].first.id();
            if (a[i].second != b[i].second)
                return a[i].second < b[i].second;
        }
        return a.size() < b.size();
    }
};

inline Monomial multiply(const Monomial& a, const Monomial& b)
{
    Monomial out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first.id() < b[j].first.id())) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first.id() < a[i].first.id()) {
            out.push_back(b[j++]);
        } else {
            out.emplace_back(a[i].first, a[i].second + b[j].second);
            ++i;
            ++j;
        }
    }
    return out;
}

class Polynomial
{
    public:
        using Terms = std::map<Monomial, Rational, MonomialLess>;

        Polynomial() = default;
        Polynomial(const Rational& c)
        {
            if (c != 0)
                terms_.emplace(Monomial{}, c);
        }
        Polynomial(int c) : Polynomial(Rational(c)) {}

        static Polynomial variable(const Variable& v, unsigned exponent = 1)
        {
            if (!v.is_real())
                throw ArityError("polynomial over boolean variable '" + v.name() + "'");
            Polynomial p;
            if (exponent == 0)
                return Polynomial(1);
            p.terms_.emplace(Monomial{{v, exponent}}, Rational(1));
            return p;
        }

        static Polynomial from_linear(const LinearExpr& e)
        {
            Polynomial p(e.constant());
            for (const auto& [v, c] : e.terms())
                p.add_term(Monomial{{v, 1}}, c);
            return p;
        }

        const Terms& terms() const { return terms_; }
        bool is_zero() const { return terms_.empty(); }
        bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }

        Rational constant_term() const
        {
            auto it = terms_.find(Monomial{});
            return it == terms_.end() ? Rational(0) : it->second;
        }

        unsigned degree() const
        {
            unsigned d = 0;
            for (const auto& [m, c] : terms_) {
                unsigned k = 0;
                for (const auto& f : m)
                    k += f.second;
                d = std::max(d, k);
            }
            return d;
        }

        std::vector<Variable> variables() const
        {
            std::vector<Variable> vs;
            VariableSet seen;
            for (const auto& [m, c] : terms_)
                for (const auto& f : m)
                    if (seen.insert(f.first).second)
                        vs.push_back(f.first);
            std::sort(vs.begin(), vs.end());
            return vs;
        }

        void add_term(const Monomial& m, const Rational& c)
        {
            if (c == 0)
                return;
            auto [it, inserted] = terms_.emplace(m, c);
            if (!inserted) {
                it->second += c;
                if (it->second == 0)
                    terms_.erase(it);
            }
        }

        Polynomial& operator+=(const Polynomial& o)
        {
            for (const auto& [m, c] : o.terms_)
                add_term(m, c);
            return *this;
        }
        Polynomial& operator-=(const Polynomial& o)
        {
            for (const auto& [m, c] : o.terms_)
                add_term(m, -c);
            return *this;
        }
        friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
        friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
        friend Polynomial operator*(const Polynomial& a, const Polynomial& b)
        {
            if (a.is_constant() && !a.is_zero())
                return b.scaled(a.constant_term());
            if (b.is_constant() && !b.is_zero())
                return a.scaled(b.constant_term());
            Polynomial p;
            for (const auto& [ma, ca] : a.terms_)
                for (const auto& [mb, cb] : b.terms_)
                    p.add_term(multiply(ma, mb), ca * cb);
            return p;
        }
        Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

        Polynomial scaled(const Rational& k) const
        {
            Polynomial p;
            if (k == 0)
                return p;
            p.terms_ = terms_;
            for (auto& t : p.terms_)
                t.second *= k;
            return p;
        }

        Polynomial pow(unsigned e) const
        {
            Polynomial result(1), base = *this;
            while (e) {
                if (e & 1)
                    result *= base;
                e >>= 1;
                if (e)
                    base *= base;
            }
            return result;
        }

        Rational evaluate(Valuation& point) const
        {
            Rational s = 0;
            for (const auto& [m, c] : terms_) {
                Rational t = c;
                for (const auto& [v, e] : m) {
                    Rational x = point.real(v);
                    for (unsigned i = 0; i < e; ++i)
                        t *= x;
                }
                s += t;
            }
            return s;
        }

        /** Replaces each variable in `subst` by its linear expression. */
        Polynomial substitute(const std::unordered_map<std::uint64_t, LinearExpr>& subst) const
        {
            bool touched = false;
            for (const auto& [m, c] : terms_)
                for (const auto& f : m)
                    touched |= subst.count(f.first.id()) > 0;
            if (!touched)
                return *this;
            Polynomial out;
            for (const auto& [m, c] : terms_) {
                Polynomial t(c);
                Monomial rest;
                for (const auto& [v, e] : m) {
                    auto it = subst.find(v.id());
                    if (it == subst.end())
                        rest.emplace_back(v, e);
                    else
                        t *= from_linear(it->second).pow(e);
                }
                Polynomial r;
                r.terms_.emplace(rest, Rational(1));
                out += t * r;
            }
            return out;
        }

        friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }
        friend bool operator!=(const Polynomial& a, const Polynomial& b) { return !(a == b); }

    private:
        Terms terms_;
};

inline std::string to_string(const Polynomial& p)
{
    if (p.is_zero())
        return "0";
    std::vector<std::string> items;
    for (const auto& [m, c] : p.terms()) {
        std::vector<std::string> factors;
        if (c != 1 || m.empty())
            factors.push_back(to_string(c));
        for (const auto& [v, e] : m)
            for (unsigned i = 0; i < e; ++i)
                factors.push_back(v.name());
        if (factors.size() == 1) {
            items.push_back(factors[0]);
        } else {
            std::string s = "(*";
            for (const auto& f : factors)
                s += " " + f;
            items.push_back(s + ")");
        }
    }
    if (items.size() == 1)
        return items[0];
    std::string s = "(+";
    for (const auto& i : items)
        s += " " + i;
    return s + ")";
}

} // namespace wmipfv

#endif

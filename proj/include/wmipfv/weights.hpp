/**
 * Piecewise-polynomial weight functions: DAGs of ite/sum/product nodes over
 * polynomial leaves, paired with a support formula χ.
 */
#ifndef WMIPFV_WEIGHTS_HPP
#define WMIPFV_WEIGHTS_HPP

#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "polynomial.hpp"
#include "printing.hpp"

namespace wmipfv {

enum class WeightKind { poly, ite, sum, product };

struct WeightNode;
using WeightNodePtr = std::shared_ptr<const WeightNode>;

struct WeightNode
{
    WeightKind kind = WeightKind::poly;
    Polynomial poly;
    Formula cond;
    std::vector<WeightNodePtr> children;
};

/** Weight DAG with its support. Immutable; nodes are shared between copies. */
class WeightDag
{
    public:
        WeightDag() : WeightDag(Polynomial(1)) {}
        WeightDag(const Polynomial& p) : root_(leaf(p)) {}
        WeightDag(const Rational& c) : WeightDag(Polynomial(c)) {}
        WeightDag(int c) : WeightDag(Polynomial(c)) {}

        static WeightDag ite(const Formula& cond, const WeightDag& then_w, const WeightDag& else_w)
        {
            if (has_ite_terms(cond))
                throw Error("weight condition contains ite terms");
            if (cond.is_true())
                return then_w.with_support(then_w.support_ && else_w.support_);
            if (cond.is_false())
                return else_w.with_support(then_w.support_ && else_w.support_);
            auto n = std::make_shared<WeightNode>();
            n->kind = WeightKind::ite;
            n->cond = cond;
            n->children = {then_w.root_, else_w.root_};
            return WeightDag(n, then_w.support_ && else_w.support_);
        }

        static WeightDag sum(const std::vector<WeightDag>& parts) { return combine(WeightKind::sum, parts); }
        static WeightDag product(const std::vector<WeightDag>& parts) { return combine(WeightKind::product, parts); }

        WeightDag with_support(const Formula& chi) const { return WeightDag(root_, chi); }

        const WeightNodePtr& root() const { return root_; }
        const Formula& support() const { return support_; }

        friend WeightDag operator*(const WeightDag& a, const WeightDag& b) { return product({a, b}); }
        friend WeightDag operator+(const WeightDag& a, const WeightDag& b) { return sum({a, b}); }

        WeightDag scaled(const Rational& k) const { return product({WeightDag(k), *this}).with_support(support_); }

        /** Constant value if the root is a constant leaf. */
        std::optional<Rational> as_constant() const
        {
            if (root_->kind == WeightKind::poly && root_->poly.is_constant())
                return root_->poly.constant_term();
            return std::nullopt;
        }

    private:
        WeightDag(WeightNodePtr root, Formula support) : root_(std::move(root)), support_(std::move(support)) {}

        static WeightNodePtr leaf(const Polynomial& p)
        {
            auto n = std::make_shared<WeightNode>();
            n->poly = p;
            return n;
        }

        static WeightDag combine(WeightKind kind, const std::vector<WeightDag>& parts)
        {
            std::vector<WeightNodePtr> children;
            std::vector<Formula> supports;
            Polynomial folded = kind == WeightKind::sum ? Polynomial(0) : Polynomial(1);
            for (const auto& w : parts) {
                supports.push_back(w.support_);
                const WeightNode& r = *w.root_;
                if (r.kind == WeightKind::poly && r.poly.is_constant()) {
                    if (kind == WeightKind::sum)
                        folded += r.poly;
                    else
                        folded *= r.poly;
                } else if (r.kind == kind) {
                    children.insert(children.end(), r.children.begin(), r.children.end());
                } else {
                    children.push_back(w.root_);
                }
            }
            Formula chi = Formula::conjunction(supports);
            if (kind == WeightKind::product && folded.is_zero())
                return WeightDag(leaf(folded), chi);
            if (kind == WeightKind::sum ? !folded.is_zero() : folded != Polynomial(1))
                children.insert(children.begin(), leaf(folded));
            if (children.empty())
                return WeightDag(leaf(folded), chi);
            if (children.size() == 1)
                return WeightDag(children[0], chi);
            auto n = std::make_shared<WeightNode>();
            n->kind = kind;
            n->children = std::move(children);
            return WeightDag(n, chi);
        }

        WeightNodePtr root_;
        Formula support_ = Formula::top();
};

/** Per-literal weights; a literal absent from the map weighs 1. */
using LiteralWeightMap = std::vector<std::pair<Literal, Polynomial>>;

/** ∏ over entries of ite(atom; w; 1) for positive literals, ite(atom; 1; w) for negative ones. */
inline WeightDag from_literal_weights(const LiteralWeightMap& m)
{
    std::vector<WeightDag> factors;
    for (const auto& [lit, p] : m) {
        Formula a = Formula::atom(lit.atom);
        factors.push_back(lit.positive ? WeightDag::ite(a, p, 1) : WeightDag::ite(a, 1, p));
    }
    return WeightDag::product(factors);
}

namespace detail {

template <typename Visit>
void visit_weight(const WeightNodePtr& n, std::unordered_set<const WeightNode*>& seen, Visit& visit)
{
    if (!seen.insert(n.get()).second)
        return;
    visit(*n);
    for (const auto& c : n->children)
        visit_weight(c, seen, visit);
}

} // namespace detail

/** Atoms occurring in ite conditions, in first-appearance order. */
inline std::vector<Atom> condition_atoms(const WeightDag& w)
{
    std::vector<Atom> out;
    std::unordered_set<Atom, AtomHash> have;
    std::unordered_set<const WeightNode*> seen;
    auto visit = [&](const WeightNode& n) {
        if (n.kind != WeightKind::ite)
            return;
        for (const auto& a : atoms_of(n.cond))
            if (have.insert(a).second)
                out.push_back(a);
    };
    detail::visit_weight(w.root(), seen, visit);
    return out;
}

/** Ite conditions of the DAG, in first-appearance order. */
inline std::vector<Formula> weight_conditions(const WeightDag& w)
{
    std::vector<Formula> out;
    std::unordered_set<const WeightNode*> seen;
    auto visit = [&](const WeightNode& n) {
        if (n.kind == WeightKind::ite)
            out.push_back(n.cond);
    };
    detail::visit_weight(w.root(), seen, visit);
    return out;
}

/** Real variables occurring in polynomial leaves. */
inline std::vector<Variable> polynomial_variables(const WeightDag& w)
{
    std::vector<Variable> out;
    VariableSet have;
    std::unordered_set<const WeightNode*> seen;
    auto visit = [&](const WeightNode& n) {
        if (n.kind != WeightKind::poly)
            return;
        for (const auto& v : n.poly.variables())
            if (have.insert(v).second)
                out.push_back(v);
    };
    detail::visit_weight(w.root(), seen, visit);
    return out;
}

/** Number of distinct DAG nodes. */
inline std::size_t node_count(const WeightDag& w)
{
    std::size_t n = 0;
    std::unordered_set<const WeightNode*> seen;
    auto visit = [&](const WeightNode&) { ++n; };
    detail::visit_weight(w.root(), seen, visit);
    return n;
}

namespace detail {

template <typename Condition>
Polynomial restrict_node(const WeightNodePtr& n, Condition& cond, std::unordered_map<const WeightNode*, Polynomial>& memo)
{
    auto it = memo.find(n.get());
    if (it != memo.end())
        return it->second;
    Polynomial out;
    switch (n->kind) {
        case WeightKind::poly: out = n->poly; break;
        case WeightKind::ite: out = restrict_node(n->children[cond(n->cond) ? 0 : 1], cond, memo); break;
        case WeightKind::sum:
            for (const auto& c : n->children)
                out += restrict_node(c, cond, memo);
            break;
        case WeightKind::product:
            out = Polynomial(1);
            for (const auto& c : n->children) {
                out *= restrict_node(c, cond, memo);
                if (out.is_zero())
                    break;
            }
            break;
    }
    memo.emplace(n.get(), out);
    return out;
}

} // namespace detail

/** w_[μ]: every ite resolved by μ, collapsed into one polynomial. */
inline Polynomial restrict_to_assignment(const WeightDag& w, const Assignment& mu)
{
    std::unordered_map<const WeightNode*, Polynomial> memo;
    auto cond = [&](const Formula& c) {
        auto v = evaluate_partial(c, mu);
        if (!v)
            throw IncompleteAssignmentError("assignment leaves a weight condition undetermined");
        return *v;
    };
    return detail::restrict_node(w.root(), cond, memo);
}

/** w evaluated at a point assigning all variables it mentions. */
inline Rational evaluate_at(const WeightDag& w, Valuation& point)
{
    std::unordered_map<const WeightNode*, Rational> memo;
    std::function<Rational(const WeightNodePtr&)> rec = [&](const WeightNodePtr& n) -> Rational {
        auto it = memo.find(n.get());
        if (it != memo.end())
            return it->second;
        Rational out = 0;
        switch (n->kind) {
            case WeightKind::poly: out = n->poly.evaluate(point); break;
            case WeightKind::ite: out = rec(n->children[evaluate(n->cond, point) ? 0 : 1]); break;
            case WeightKind::sum:
                for (const auto& c : n->children)
                    out += rec(c);
                break;
            case WeightKind::product:
                out = 1;
                for (const auto& c : n->children) {
                    out *= rec(c);
                    if (out == 0)
                        break;
                }
                break;
        }
        memo.emplace(n.get(), out);
        return out;
    };
    return rec(w.root());
}

inline WeightDag product_of(const std::vector<WeightDag>& ws) { return WeightDag::product(ws); }

inline Polynomial rename(const Polynomial& p, Renaming& r)
{
    Polynomial out;
    for (const auto& [m, c] : p.terms()) {
        Polynomial t(c);
        for (const auto& [v, e] : m)
            t *= Polynomial::variable(r(v), e);
        out += t;
    }
    return out;
}

/** Copy of w (and its support) with variables mapped by `r`. */
inline WeightDag rename(const WeightDag& w, Renaming& r)
{
    std::unordered_map<const WeightNode*, WeightDag> memo;
    std::function<WeightDag(const WeightNodePtr&)> rec = [&](const WeightNodePtr& n) -> WeightDag {
        auto it = memo.find(n.get());
        if (it != memo.end())
            return it->second;
        WeightDag out;
        switch (n->kind) {
            case WeightKind::poly: out = WeightDag(rename(n->poly, r)); break;
            case WeightKind::ite: out = WeightDag::ite(r.apply(n->cond), rec(n->children[0]), rec(n->children[1])); break;
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
    return rec(w.root()).with_support(r.apply(w.support()));
}

/** sc(w) = w · w[v ← v′] with support χ ∧ χ[v ← v′]; `r` receives the renaming. */
inline WeightDag self_compose(const WeightDag& w, Renaming& r)
{
    WeightDag copy = rename(w, r);
    return WeightDag::product({w, copy});
}

inline WeightDag self_compose(const WeightDag& w)
{
    Renaming r;
    return self_compose(w, r);
}

inline std::string to_string(const WeightDag& w)
{
    std::function<std::string(const WeightNodePtr&)> rec = [&](const WeightNodePtr& n) -> std::string {
        switch (n->kind) {
            case WeightKind::poly: return "(poly " + to_string(n->poly) + ")";
            case WeightKind::ite: return "(ite " + to_string(n->cond) + " " + rec(n->children[0]) + " " + rec(n->children[1]) + ")";
            case WeightKind::sum:
            case WeightKind::product: {
                std::string s = n->kind == WeightKind::sum ? "(+" : "(*";
                for (const auto& c : n->children)
                    s += " " + rec(c);
                return s + ")";
            }
        }
        return "?";
    };
    return rec(w.root());
}

} // namespace wmipfv

#endif

/**
 * Quantifier-free SMT(LRA) formulas: variables, rational linear expressions,
 * canonical atoms, if-then-else terms and the formula DAG.
 *
 * Everything here is immutable after construction and may be shared between
 * threads. Fresh variables draw their identifiers from one atomic counter.
 */
#ifndef WMIPFV_LOGIC_HPP
#define WMIPFV_LOGIC_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <boost/functional/hash.hpp>

#include "errors.hpp"
#include "rational.hpp"

namespace wmipfv {

enum class Sort { boolean, real };

struct TermNode;
struct FormulaNode;
class Term;
class Formula;

namespace detail {
inline std::uint64_t next_variable_id()
{
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}
} // namespace detail

struct VariableData
{
    std::uint64_t id;
    std::string name;
    Sort sort;
    // Non-null for auxiliary real variables that are a function of others.
    std::shared_ptr<const TermNode> definition;
};

/**
 * A boolean or real symbol. Real variables are either *free* (integrated
 * over) or *defined*, i.e. functionally determined by a definition term over
 * earlier variables. Identity is the creation id, never the name.
 */
class Variable
{
    public:
        Variable() = default;

        static Variable real(std::string name) { return make(std::move(name), Sort::real, nullptr); }
        static Variable boolean(std::string name) { return make(std::move(name), Sort::boolean, nullptr); }
        static Variable defined(std::string name, const Term& definition);

        /** A new variable named `base#id`. */
        static Variable fresh(const std::string& base, Sort sort)
        {
            auto id = detail::next_variable_id();
            return Variable(std::make_shared<const VariableData>(
                VariableData{id, base + "#" + std::to_string(id), sort, nullptr}));
        }

        bool valid() const { return data_ != nullptr; }
        std::uint64_t id() const { return data_->id; }
        const std::string& name() const { return data_->name; }
        Sort sort() const { return data_->sort; }
        bool is_real() const { return data_->sort == Sort::real; }
        bool is_boolean() const { return data_->sort == Sort::boolean; }
        bool is_defined() const { return data_->definition != nullptr; }
        Term definition() const;

        friend bool operator==(const Variable& a, const Variable& b) { return a.data_ == b.data_ || (a.data_ && b.data_ && a.id() == b.id()); }
        friend bool operator!=(const Variable& a, const Variable& b) { return !(a == b); }
        friend bool operator<(const Variable& a, const Variable& b) { return a.id() < b.id(); }

    private:
        explicit Variable(std::shared_ptr<const VariableData> d) : data_(std::move(d)) {}

        static Variable make(std::string name, Sort sort, std::shared_ptr<const TermNode> def)
        {
            return Variable(std::make_shared<const VariableData>(
                VariableData{detail::next_variable_id(), std::move(name), sort, std::move(def)}));
        }

        std::shared_ptr<const VariableData> data_;
};

struct VariableHash
{
    std::size_t operator()(const Variable& v) const { return std::hash<std::uint64_t>()(v.id()); }
};

using VariableSet = std::unordered_set<Variable, VariableHash>;

/** Sparse rational linear combination Σ aᵢxᵢ + c over real variables. */
class LinearExpr
{
    public:
        using TermList = std::vector<std::pair<Variable, Rational>>;

        LinearExpr() = default;
        LinearExpr(const Rational& constant) : constant_(constant) {}
        LinearExpr(int constant) : constant_(constant) {}
        LinearExpr(const Variable& v, const Rational& coefficient = 1) { add(v, coefficient); }

        const TermList& terms() const { return terms_; }
        const Rational& constant() const { return constant_; }
        bool is_constant() const { return terms_.empty(); }

        Rational coefficient(const Variable& v) const
        {
            auto it = find(v);
            return (it != terms_.end() && it->first == v) ? it->second : Rational(0);
        }

        void add(const Variable& v, const Rational& coefficient)
        {
            if (!v.is_real())
                throw ArityError("boolean variable '" + v.name() + "' used in an arithmetic term");
            if (coefficient == 0)
                return;
            auto it = find(v);
            if (it != terms_.end() && it->first == v) {
                it->second += coefficient;
                if (it->second == 0)
                    terms_.erase(it);
            } else {
                terms_.insert(it, {v, coefficient});
            }
        }

        void add_constant(const Rational& c) { constant_ += c; }

        LinearExpr& operator+=(const LinearExpr& o)
        {
            for (const auto& [v, c] : o.terms_)
                add(v, c);
            constant_ += o.constant_;
            return *this;
        }
        LinearExpr& operator-=(const LinearExpr& o)
        {
            for (const auto& [v, c] : o.terms_)
                add(v, -c);
            constant_ -= o.constant_;
            return *this;
        }
        LinearExpr& operator*=(const Rational& k)
        {
            if (k == 0) {
                terms_.clear();
                constant_ = 0;
                return *this;
            }
            for (auto& t : terms_)
                t.second *= k;
            constant_ *= k;
            return *this;
        }
        friend LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
        friend LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
        friend LinearExpr operator*(LinearExpr a, const Rational& k) { return a *= k; }
        friend LinearExpr operator*(const Rational& k, LinearExpr a) { return a *= k; }
        friend LinearExpr operator-(LinearExpr a) { return a *= Rational(-1); }

        /** Replaces `v` by `replacement`. */
        LinearExpr substitute(const Variable& v, const LinearExpr& replacement) const
        {
            Rational c = coefficient(v);
            if (c == 0)
                return *this;
            LinearExpr out = *this;
            out.add(v, -c);
            out += replacement * c;
            return out;
        }

        friend bool operator==(const LinearExpr& a, const LinearExpr& b)
        {
            return a.constant_ == b.constant_ && a.terms_ == b.terms_;
        }

    private:
        TermList::iterator find(const Variable& v)
        {
            return std::lower_bound(terms_.begin(), terms_.end(), v,
                                    [](const auto& t, const Variable& x) { return t.first.id() < x.id(); });
        }
        TermList::const_iterator find(const Variable& v) const
        {
            return std::lower_bound(terms_.begin(), terms_.end(), v,
                                    [](const auto& t, const Variable& x) { return t.first.id() < x.id(); });
        }

        TermList terms_;
        Rational constant_ = 0;
};

/** Canonical relations. ≥, > and ≠ are rewritten through negation. */
enum class Relation { le, lt, eq };

/** Relations accepted by the comparison builders. */
enum class Comparison { le, lt, eq, ge, gt, ne };

struct AtomData
{
    bool boolean = false;
    Variable variable;            // boolean atoms
    LinearExpr::TermList lhs;     // LRA atoms: coprime integers, positive leading coefficient
    Relation relation = Relation::le;
    Rational rhs;
    std::size_t hash = 0;
};

struct Literal;

/**
 * A boolean proposition or a canonical LRA atom `Σ aᵢxᵢ ⋈ b` with ⋈ ∈ {≤,<,=}.
 * Structurally equal atoms compare equal, so (x+y ≤ 1) and (2x+2y ≤ 2) are
 * the same atom.
 */
class Atom
{
    public:
        Atom() = default;

        static Atom boolean(const Variable& v)
        {
            if (!v.is_boolean())
                throw ArityError("real variable '" + v.name() + "' used as a proposition");
            auto d = std::make_shared<AtomData>();
            d->boolean = true;
            d->variable = v;
            d->hash = std::hash<std::uint64_t>()(v.id()) * 31 + 7;
            return Atom(std::move(d));
        }

        /**
         * Canonical literal for `e ⋈ 0`. Returns nullopt when `e` is constant;
         * use `constant_truth` for that case.
         */
        static std::optional<Literal> canonical(const LinearExpr& e, Relation rel);

        static bool constant_truth(const Rational& value, Relation rel)
        {
            switch (rel) {
                case Relation::le: return value <= 0;
                case Relation::lt: return value < 0;
                case Relation::eq: return value == 0;
            }
            return false;
        }

        bool valid() const { return data_ != nullptr; }
        bool is_boolean() const { return data_->boolean; }
        bool is_lra() const { return !data_->boolean; }
        const Variable& variable() const { return data_->variable; }
        const LinearExpr::TermList& lhs() const { return data_->lhs; }
        LinearExpr lhs_expr() const
        {
            LinearExpr e;
            for (const auto& [v, c] : data_->lhs)
                e.add(v, c);
            return e;
        }
        Relation relation() const { return data_->relation; }
        const Rational& rhs() const { return data_->rhs; }
        std::size_t hash() const { return data_->hash; }

        /** Variables of the atom in id order. */
        std::vector<Variable> variables() const
        {
            if (is_boolean())
                return {data_->variable};
            std::vector<Variable> vs;
            for (const auto& t : data_->lhs)
                vs.push_back(t.first);
            return vs;
        }

        friend bool operator==(const Atom& a, const Atom& b)
        {
            if (a.data_ == b.data_)
                return true;
            if (!a.data_ || !b.data_ || a.hash() != b.hash() || a.is_boolean() != b.is_boolean())
                return false;
            if (a.is_boolean())
                return a.variable() == b.variable();
            return a.relation() == b.relation() && a.rhs() == b.rhs() && a.lhs() == b.lhs();
        }
        friend bool operator!=(const Atom& a, const Atom& b) { return !(a == b); }

        /** Total order; booleans sort before LRA atoms. */
        friend bool operator<(const Atom& a, const Atom& b)
        {
            if (a.is_boolean() != b.is_boolean())
                return a.is_boolean();
            if (a.is_boolean())
                return a.variable().id() < b.variable().id();
            const auto &l = a.lhs(), &r = b.lhs();
            for (std::size_t i = 0; i < std::min(l.size(), r.size()); ++i) {
                if (l[i].first.id() != r[i].first.id())
                    return l[i].first.id() < r[i].first.id();
                if (l[i].second != r[i].second)
                    return l[i].second < r[i].second;
            }
            if (l.size() != r.size())
                return l.size() < r.size();
            if (a.relation() != b.relation())
                return a.relation() < b.relation();
            return a.rhs() < b.rhs();
        }

    private:
        explicit Atom(std::shared_ptr<const AtomData> d) : data_(std::move(d)) {}
        std::shared_ptr<const AtomData> data_;
};

struct AtomHash
{
    std::size_t operator()(const Atom& a) const { return a.hash(); }
};

struct Literal
{
    Atom atom;
    bool positive = true;

    Literal negated() const { return {atom, !positive}; }
    friend bool operator==(const Literal& a, const Literal& b) { return a.positive == b.positive && a.atom == b.atom; }
};

inline std::optional<Literal> Atom::canonical(const LinearExpr& e, Relation rel)
{
    if (e.is_constant())
        return std::nullopt;
    Integer den_lcm = 1, num_gcd = 0;
    for (const auto& [v, c] : e.terms()) {
        den_lcm = lcm(den_lcm, denominator_of(c));
        num_gcd = gcd(num_gcd, numerator_of(c));
    }
    Rational scale = Rational(den_lcm) / Rational(num_gcd);
    bool flip = e.terms().front().second < 0;
    if (flip)
        scale = -scale;
    auto d = std::make_shared<AtomData>();
    std::size_t h = 17;
    for (const auto& [v, c] : e.terms()) {
        Rational k = c * scale;
        d->lhs.emplace_back(v, k);
        boost::hash_combine(h, v.id());
        boost::hash_combine(h, hash_of(k));
    }
    d->rhs = -e.constant() * scale;
    boost::hash_combine(h, hash_of(d->rhs));
    bool positive = true;
    // -e ⋈ b  ⇔  e ⋈' -b with ≤ ↦ ¬<, < ↦ ¬≤ (after moving to canonical sign)
    if (flip && rel != Relation::eq) {
        positive = false;
        rel = rel == Relation::le ? Relation::lt : Relation::le;
    }
    d->relation = rel;
    boost::hash_combine(h, static_cast<int>(rel));
    d->hash = h;
    return Literal{Atom(std::move(d)), positive};
}

enum class TermKind { linear, sum, ite };

/**
 * Real-valued term: a linear expression, a linear combination of terms, or
 * `ite(cond, then, else)`.
 */
class Term
{
    public:
        Term() : Term(LinearExpr()) {}
        Term(const LinearExpr& e);
        Term(const Variable& v) : Term(LinearExpr(v)) {}
        Term(const Rational& c) : Term(LinearExpr(c)) {}
        Term(int c) : Term(LinearExpr(c)) {}

        static Term ite(const Formula& cond, const Term& then_term, const Term& else_term);

        TermKind kind() const;
        /** The expression when the term contains no ite. */
        std::optional<LinearExpr> as_linear() const;
        const TermNode* node() const { return node_.get(); }
        std::shared_ptr<const TermNode> shared() const { return node_; }

        friend Term operator+(const Term& a, const Term& b);
        friend Term operator-(const Term& a, const Term& b);
        friend Term operator-(const Term& a);
        friend Term operator*(const Rational& k, const Term& a);
        friend Term operator*(const Term& a, const Rational& k) { return k * a; }

        explicit Term(std::shared_ptr<const TermNode> n) : node_(std::move(n)) {}

    private:
        std::shared_ptr<const TermNode> node_;
};

enum class FormulaKind { truth, falsity, atom, compare, negation, conjunction, disjunction, implication, equivalence, ite };

/** Quantifier-free formula DAG over boolean and LRA atoms. */
class Formula
{
    public:
        Formula();

        static Formula top();
        static Formula bottom();
        static Formula constant(bool value) { return value ? top() : bottom(); }
        static Formula atom(const Atom& a);
        static Formula literal(const Literal& l);
        static Formula variable(const Variable& boolean_variable) { return atom(Atom::boolean(boolean_variable)); }
        /** Comparison of two terms; canonical atom when both are linear. */
        static Formula compare(const Term& lhs, Comparison cmp, const Term& rhs);
        static Formula conjunction(std::vector<Formula> fs);
        static Formula disjunction(std::vector<Formula> fs);
        static Formula implies(const Formula& a, const Formula& b);
        static Formula iff(const Formula& a, const Formula& b);
        static Formula ite(const Formula& c, const Formula& t, const Formula& e);

        FormulaKind kind() const;
        bool is_true() const { return kind() == FormulaKind::truth; }
        bool is_false() const { return kind() == FormulaKind::falsity; }
        const FormulaNode* node() const { return node_.get(); }
        const Atom& atom() const;
        const std::vector<Formula>& children() const;

        friend Formula operator!(const Formula& f);
        friend Formula operator&&(const Formula& a, const Formula& b) { return conjunction({a, b}); }
        friend Formula operator||(const Formula& a, const Formula& b) { return disjunction({a, b}); }

        explicit Formula(std::shared_ptr<const FormulaNode> n) : node_(std::move(n)) {}

    private:
        std::shared_ptr<const FormulaNode> node_;
};

struct TermNode
{
    TermKind kind = TermKind::linear;
    LinearExpr linear;                              // linear value, or the linear part of a sum
    std::vector<std::pair<Rational, Term>> parts;   // sum: Σ coef·term (non-linear terms)
    Formula cond;                                   // ite
    std::vector<Term> branches;                     // ite: then, else
};

struct FormulaNode
{
    FormulaKind kind = FormulaKind::truth;
    Atom atom;
    std::vector<Formula> children;
    std::optional<Term> lhs, rhs;  // compare
    Comparison comparison = Comparison::le;
};

inline Variable Variable::defined(std::string name, const Term& definition)
{
    return make(std::move(name), Sort::real, definition.shared());
}

inline Term Variable::definition() const
{
    if (!data_->definition)
        throw Error("variable '" + name() + "' has no definition");
    return Term(data_->definition);
}

inline Term::Term(const LinearExpr& e)
{
    auto n = std::make_shared<TermNode>();
    n->kind = TermKind::linear;
    n->linear = e;
    node_ = std::move(n);
}

inline TermKind Term::kind() const { return node_->kind; }

inline std::optional<LinearExpr> Term::as_linear() const
{
    if (node_->kind == TermKind::linear)
        return node_->linear;
    return std::nullopt;
}

namespace detail {
inline void accumulate_term(const Rational& k, const Term& t, LinearExpr& linear,
                            std::vector<std::pair<Rational, Term>>& parts)
{
    if (k == 0)
        return;
    const TermNode* n = t.node();
    if (n->kind == TermKind::linear) {
        linear += n->linear * k;
    } else if (n->kind == TermKind::sum) {
        linear += n->linear * k;
        for (const auto& [c, p] : n->parts)
            accumulate_term(k * c, p, linear, parts);
    } else {
        for (auto& [c, p] : parts)
            if (p.node() == n) {
                c += k;
                return;
            }
        parts.emplace_back(k, t);
    }
}

inline Term make_sum(const std::vector<std::pair<Rational, Term>>& items)
{
    LinearExpr linear;
    std::vector<std::pair<Rational, Term>> parts;
    for (const auto& [k, t] : items)
        accumulate_term(k, t, linear, parts);
    parts.erase(std::remove_if(parts.begin(), parts.end(), [](const auto& p) { return p.first == 0; }), parts.end());
    if (parts.empty())
        return Term(linear);
    if (parts.size() == 1 && parts[0].first == 1 && linear.is_constant() && linear.constant() == 0)
        return parts[0].second;
    auto n = std::make_shared<TermNode>();
    n->kind = TermKind::sum;
    n->linear = std::move(linear);
    n->parts = std::move(parts);
    return Term(std::shared_ptr<const TermNode>(std::move(n)));
}
} // namespace detail

inline Term operator+(const Term& a, const Term& b) { return detail::make_sum({{1, a}, {1, b}}); }
inline Term operator-(const Term& a, const Term& b) { return detail::make_sum({{1, a}, {-1, b}}); }
inline Term operator-(const Term& a) { return detail::make_sum({{-1, a}}); }
inline Term operator*(const Rational& k, const Term& a) { return detail::make_sum({{k, a}}); }

inline Term Term::ite(const Formula& cond, const Term& then_term, const Term& else_term)
{
    if (cond.is_true())
        return then_term;
    if (cond.is_false())
        return else_term;
    if (then_term.node() == else_term.node())
        return then_term;
    auto n = std::make_shared<TermNode>();
    n->kind = TermKind::ite;
    n->cond = cond;
    n->branches = {then_term, else_term};
    return Term(std::shared_ptr<const TermNode>(std::move(n)));
}

inline Formula::Formula() : Formula(top()) {}

inline Formula Formula::top()
{
    static const Formula t(std::make_shared<FormulaNode>(FormulaNode{FormulaKind::truth, {}, {}, {}, {}, {}}));
    return t;
}

inline Formula Formula::bottom()
{
    static const Formula f(std::make_shared<FormulaNode>(FormulaNode{FormulaKind::falsity, {}, {}, {}, {}, {}}));
    return f;
}

inline FormulaKind Formula::kind() const { return node_->kind; }
inline const Atom& Formula::atom() const { return node_->atom; }
inline const std::vector<Formula>& Formula::children() const { return node_->children; }

inline Formula Formula::atom(const Atom& a)
{
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaKind::atom;
    n->atom = a;
    return Formula(std::shared_ptr<const FormulaNode>(std::move(n)));
}

inline Formula Formula::literal(const Literal& l) { return l.positive ? atom(l.atom) : !atom(l.atom); }

inline Formula operator!(const Formula& f)
{
    switch (f.kind()) {
        case FormulaKind::truth: return Formula::bottom();
        case FormulaKind::falsity: return Formula::top();
        case FormulaKind::negation: return f.children()[0];
        default: break;
    }
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaKind::negation;
    n->children = {f};
    return Formula(std::shared_ptr<const FormulaNode>(std::move(n)));
}

inline Formula Formula::conjunction(std::vector<Formula> fs)
{
    std::vector<Formula> kept;
    for (auto& f : fs) {
        if (f.is_false())
            return bottom();
        if (f.is_true())
            continue;
        if (f.kind() == FormulaKind::conjunction)
            kept.insert(kept.end(), f.children().begin(), f.children().end());
        else
            kept.push_back(std::move(f));
    }
    if (kept.empty())
        return top();
    if (kept.size() == 1)
        return kept[0];
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaKind::conjunction;
    n->children = std::move(kept);
    return Formula(std::shared_ptr<const FormulaNode>(std::move(n)));
}

inline Formula Formula::disjunction(std::vector<Formula> fs)
{
    std::vector<Formula> kept;
    for (auto& f : fs) {
        if (f.is_true())
            return top();
        if (f.is_false())
            continue;
        if (f.kind() == FormulaKind::disjunction)
            kept.insert(kept.end(), f.children().begin(), f.children().end());
        else
            kept.push_back(std::move(f));
    }
    if (kept.empty())
        return bottom();
    if (kept.size() == 1)
        return kept[0];
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaKind::disjunction;
    n->children = std::move(kept);
    return Formula(std::shared_ptr<const FormulaNode>(std::move(n)));
}

inline Formula Formula::implies(const Formula& a, const Formula& b)
{
    if (a.is_false() || b.is_true())
        return top();
    if (a.is_true())
        return b;
    if (b.is_false())
        return !a;
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaKind::implication;
    n->children = {a, b};
    return Formula(std::shared_ptr<const FormulaNode>(std::move(n)));
}

inline Formula Formula::iff(const Formula& a, const Formula& b)
{
    if (a.is_true())
        return b;
    if (b.is_true())
        return a;
    if (a.is_false())
        return !b;
    if (b.is_false())
        return !a;
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaKind::equivalence;
    n->children = {a, b};
    return Formula(std::shared_ptr<const FormulaNode>(std::move(n)));
}

inline Formula Formula::ite(const Formula& c, const Formula& t, const Formula& e)
{
    if (c.is_true())
        return t;
    if (c.is_false())
        return e;
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaKind::ite;
    n->children = {c, t, e};
    return Formula(std::shared_ptr<const FormulaNode>(std::move(n)));
}

namespace detail {
inline Formula linear_compare(const LinearExpr& e, Relation rel)
{
    auto lit = Atom::canonical(e, rel);
    if (!lit)
        return Formula::constant(Atom::constant_truth(e.constant(), rel));
    return Formula::literal(*lit);
}
} // namespace detail

/** `e ⋈ 0` for any comparison, with ≥, > and ≠ rewritten via negation. */
inline Formula compare_zero(const LinearExpr& e, Comparison cmp)
{
    using detail::linear_compare;
    switch (cmp) {
        case Comparison::le: return linear_compare(e, Relation::le);
        case Comparison::lt: return linear_compare(e, Relation::lt);
        case Comparison::eq: return linear_compare(e, Relation::eq);
        case Comparison::ge: return !linear_compare(e, Relation::lt);
        case Comparison::gt: return !linear_compare(e, Relation::le);
        case Comparison::ne: return linear_compare(e, Relation::lt) || !linear_compare(e, Relation::le);
    }
    return Formula::bottom();
}

inline Formula Formula::compare(const Term& lhs, Comparison cmp, const Term& rhs)
{
    auto l = lhs.as_linear(), r = rhs.as_linear();
    if (l && r)
        return compare_zero(*l - *r, cmp);
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaKind::compare;
    n->lhs = lhs;
    n->rhs = rhs;
    n->comparison = cmp;
    return Formula(std::shared_ptr<const FormulaNode>(std::move(n)));
}

inline Formula operator<=(const Term& a, const Term& b) { return Formula::compare(a, Comparison::le, b); }
inline Formula operator<(const Term& a, const Term& b) { return Formula::compare(a, Comparison::lt, b); }
inline Formula operator>=(const Term& a, const Term& b) { return Formula::compare(a, Comparison::ge, b); }
inline Formula operator>(const Term& a, const Term& b) { return Formula::compare(a, Comparison::gt, b); }
inline Formula eq(const Term& a, const Term& b) { return Formula::compare(a, Comparison::eq, b); }
inline Formula ne(const Term& a, const Term& b) { return Formula::compare(a, Comparison::ne, b); }

/** `(l ≤ x) ∧ (x ≤ u)`. Closed at both ends. */
inline Formula interval(const Variable& x, const Rational& l, const Rational& u)
{
    if (!x.is_real())
        throw ArityError("interval over non-real variable '" + x.name() + "'");
    if (l > u)
        throw EmptyIntervalError("empty interval [" + to_string(l) + ", " + to_string(u) + "] for '" + x.name() + "'");
    return (Term(l) <= Term(x)) && (Term(x) <= Term(u));
}

namespace detail {
template <typename Visit>
void visit_formula(const Formula& f, std::unordered_set<const FormulaNode*>& seen, std::unordered_set<const TermNode*>& seen_terms,
                   Visit&& visit);

template <typename Visit>
void visit_term(const Term& t, std::unordered_set<const FormulaNode*>& seen, std::unordered_set<const TermNode*>& seen_terms,
                Visit&& visit)
{
    if (!seen_terms.insert(t.node()).second)
        return;
    const TermNode* n = t.node();
    visit.term(*n);
    if (n->kind == TermKind::sum)
        for (const auto& p : n->parts)
            visit_term(p.second, seen, seen_terms, visit);
    if (n->kind == TermKind::ite) {
        visit_formula(n->cond, seen, seen_terms, visit);
        visit_term(n->branches[0], seen, seen_terms, visit);
        visit_term(n->branches[1], seen, seen_terms, visit);
    }
}

template <typename Visit>
void visit_formula(const Formula& f, std::unordered_set<const FormulaNode*>& seen, std::unordered_set<const TermNode*>& seen_terms,
                   Visit&& visit)
{
    if (!seen.insert(f.node()).second)
        return;
    const FormulaNode* n = f.node();
    if (n->kind == FormulaKind::atom)
        visit.atom(n->atom);
    if (n->kind == FormulaKind::compare) {
        visit_term(*n->lhs, seen, seen_terms, visit);
        visit_term(*n->rhs, seen, seen_terms, visit);
    }
    for (const auto& c : n->children)
        visit_formula(c, seen, seen_terms, visit);
}
} // namespace detail

/**
 * Atoms syntactically present in `f`, deduplicated, in order of first
 * appearance (depth first, left to right).
 */
inline std::vector<Atom> atoms_of(const Formula& f)
{
    struct Collector
    {
        std::vector<Atom> out;
        std::unordered_set<Atom, AtomHash> seen;
        void atom(const Atom& a)
        {
            if (seen.insert(a).second)
                out.push_back(a);
        }
        void term(const TermNode&) {}
    } c;
    std::unordered_set<const FormulaNode*> seen;
    std::unordered_set<const TermNode*> seen_terms;
    detail::visit_formula(f, seen, seen_terms, c);
    return c.out;
}

/** Variables of `f` (including those inside ite terms) in first-appearance order. */
inline std::vector<Variable> variables_of(const Formula& f)
{
    struct Collector
    {
        std::vector<Variable> out;
        VariableSet seen;
        void add(const Variable& v)
        {
            if (seen.insert(v).second)
                out.push_back(v);
        }
        void atom(const Atom& a)
        {
            for (const auto& v : a.variables())
                add(v);
        }
        void term(const TermNode& n)
        {
            for (const auto& t : n.linear.terms())
                add(t.first);
        }
    } c;
    std::unordered_set<const FormulaNode*> seen;
    std::unordered_set<const TermNode*> seen_terms;
    detail::visit_formula(f, seen, seen_terms, c);
    return c.out;
}

/**
 * Point assignment to variables. Values of defined variables are derived from
 * their definitions on first access and cached.
 */
class Valuation
{
    public:
        void set(const Variable& v, const Rational& value)
        {
            if (!v.is_real())
                throw ArityError("real value for boolean variable '" + v.name() + "'");
            reals_[v.id()] = value;
        }
        void set(const Variable& v, bool value)
        {
            if (!v.is_boolean())
                throw ArityError("boolean value for real variable '" + v.name() + "'");
            bools_[v.id()] = value;
        }
        bool has(const Variable& v) const { return v.is_real() ? reals_.count(v.id()) > 0 : bools_.count(v.id()) > 0; }

        Rational real(const Variable& v);
        bool boolean(const Variable& v) const
        {
            auto it = bools_.find(v.id());
            if (it == bools_.end())
                throw Error("no value for boolean variable '" + v.name() + "'");
            return it->second;
        }

    private:
        std::unordered_map<std::uint64_t, Rational> reals_;
        std::unordered_map<std::uint64_t, bool> bools_;
};

Rational evaluate(const Term& t, Valuation& point);
bool evaluate(const Formula& f, Valuation& point);

inline Rational evaluate(const LinearExpr& e, Valuation& point)
{
    Rational s = e.constant();
    for (const auto& [v, c] : e.terms())
        s += c * point.real(v);
    return s;
}

inline bool evaluate(const Atom& a, Valuation& point)
{
    if (a.is_boolean())
        return point.boolean(a.variable());
    Rational s = 0;
    for (const auto& [v, c] : a.lhs())
        s += c * point.real(v);
    return Atom::constant_truth(s - a.rhs(), a.relation());
}

inline Rational Valuation::real(const Variable& v)
{
    auto it = reals_.find(v.id());
    if (it != reals_.end())
        return it->second;
    if (!v.is_defined())
        throw Error("no value for real variable '" + v.name() + "'");
    Rational value = evaluate(v.definition(), *this);
    reals_[v.id()] = value;
    return value;
}

inline Rational evaluate(const Term& t, Valuation& point)
{
    const TermNode* n = t.node();
    switch (n->kind) {
        case TermKind::linear: return evaluate(n->linear, point);
        case TermKind::sum: {
            Rational s = evaluate(n->linear, point);
            for (const auto& [c, p] : n->parts)
                s += c * evaluate(p, point);
            return s;
        }
        case TermKind::ite: return evaluate(n->branches[evaluate(n->cond, point) ? 0 : 1], point);
    }
    return 0;
}

inline bool compare_values(const Rational& a, Comparison cmp, const Rational& b)
{
    switch (cmp) {
        case Comparison::le: return a <= b;
        case Comparison::lt: return a < b;
        case Comparison::eq: return a == b;
        case Comparison::ge: return a >= b;
        case Comparison::gt: return a > b;
        case Comparison::ne: return a != b;
    }
    return false;
}

inline bool evaluate(const Formula& f, Valuation& point)
{
    const FormulaNode* n = f.node();
    switch (n->kind) {
        case FormulaKind::truth: return true;
        case FormulaKind::falsity: return false;
        case FormulaKind::atom: return evaluate(n->atom, point);
        case FormulaKind::compare: return compare_values(evaluate(*n->lhs, point), n->comparison, evaluate(*n->rhs, point));
        case FormulaKind::negation: return !evaluate(n->children[0], point);
        case FormulaKind::conjunction:
            for (const auto& c : n->children)
                if (!evaluate(c, point))
                    return false;
            return true;
        case FormulaKind::disjunction:
            for (const auto& c : n->children)
                if (evaluate(c, point))
                    return true;
            return false;
        case FormulaKind::implication: return !evaluate(n->children[0], point) || evaluate(n->children[1], point);
        case FormulaKind::equivalence: return evaluate(n->children[0], point) == evaluate(n->children[1], point);
        case FormulaKind::ite:
            return evaluate(n->children[0], point) ? evaluate(n->children[1], point) : evaluate(n->children[2], point);
    }
    return false;
}

/** Truth assignment μ over atoms, kept in insertion order. */
class Assignment
{
    public:
        void set(const Atom& a, bool value)
        {
            auto [it, inserted] = index_.emplace(a, literals_.size());
            if (!inserted)
                throw Error("atom assigned twice");
            literals_.push_back({a, value});
        }
        std::optional<bool> value(const Atom& a) const
        {
            auto it = index_.find(a);
            if (it == index_.end())
                return std::nullopt;
            return literals_[it->second].positive;
        }
        const std::vector<Literal>& literals() const { return literals_; }
        std::size_t size() const { return literals_.size(); }

        /** μ^LRA: the literals over arithmetic atoms. */
        std::vector<Literal> lra_literals() const
        {
            std::vector<Literal> out;
            for (const auto& l : literals_)
                if (l.atom.is_lra())
                    out.push_back(l);
            return out;
        }

        /** Whether every atom of `universe` is assigned. */
        bool is_total(const std::vector<Atom>& universe) const
        {
            return std::all_of(universe.begin(), universe.end(), [&](const Atom& a) { return index_.count(a) > 0; });
        }

        /** The assignment as a conjunction of literals. */
        Formula to_formula() const
        {
            std::vector<Formula> fs;
            for (const auto& l : literals_)
                fs.push_back(Formula::literal(l));
            return Formula::conjunction(std::move(fs));
        }

    private:
        std::vector<Literal> literals_;
        std::unordered_map<Atom, std::size_t, AtomHash> index_;
};

/**
 * Three-valued evaluation under a partial assignment. `nullopt` means
 * undetermined. Comparison nodes (unelaborated terms) are undetermined.
 */
inline std::optional<bool> evaluate_partial(const Formula& f, const Assignment& mu)
{
    const FormulaNode* n = f.node();
    switch (n->kind) {
        case FormulaKind::truth: return true;
        case FormulaKind::falsity: return false;
        case FormulaKind::atom: return mu.value(n->atom);
        case FormulaKind::compare: return std::nullopt;
        case FormulaKind::negation: {
            auto v = evaluate_partial(n->children[0], mu);
            return v ? std::optional<bool>(!*v) : std::nullopt;
        }
        case FormulaKind::conjunction: {
            bool unknown = false;
            for (const auto& c : n->children) {
                auto v = evaluate_partial(c, mu);
                if (v && !*v)
                    return false;
                unknown |= !v;
            }
            return unknown ? std::nullopt : std::optional<bool>(true);
        }
        case FormulaKind::disjunction: {
            bool unknown = false;
            for (const auto& c : n->children) {
                auto v = evaluate_partial(c, mu);
                if (v && *v)
                    return true;
                unknown |= !v;
            }
            return unknown ? std::nullopt : std::optional<bool>(false);
        }
        case FormulaKind::implication: {
            auto a = evaluate_partial(n->children[0], mu), b = evaluate_partial(n->children[1], mu);
            if ((a && !*a) || (b && *b))
                return true;
            if (a && b)
                return false;
            return std::nullopt;
        }
        case FormulaKind::equivalence: {
            auto a = evaluate_partial(n->children[0], mu), b = evaluate_partial(n->children[1], mu);
            if (a && b)
                return *a == *b;
            return std::nullopt;
        }
        case FormulaKind::ite: {
            auto c = evaluate_partial(n->children[0], mu);
            if (c)
                return evaluate_partial(n->children[*c ? 1 : 2], mu);
            auto t = evaluate_partial(n->children[1], mu), e = evaluate_partial(n->children[2], mu);
            if (t && e && *t == *e)
                return t;
            return std::nullopt;
        }
    }
    return std::nullopt;
}

/**
 * Removes ite terms by introducing one fresh defined variable per distinct ite
 * node: `t = ite(c; a; b)` becomes `(c → t = a) ∧ (¬c → t = b)`. The guards
 * are conjoined at top level since each fresh variable is total.
 */
class Elaborator
{
    public:
        /** Pure formula equivalent to `f` with its ite terms elaborated. */
        Formula elaborate(const Formula& f)
        {
            Formula body = rewrite(f);
            Formula guards = take_guards();
            return guards.is_true() ? body : Formula::conjunction({body, guards});
        }

        /** Defining constraints for an existing variable `v = t`. */
        Formula define(const Variable& v, const Term& t)
        {
            if (t.kind() == TermKind::ite) {
                const TermNode* n = t.node();
                Formula c = rewrite(n->cond);
                LinearExpr a = linearize(n->branches[0]);
                LinearExpr b = linearize(n->branches[1]);
                Formula def = Formula::implies(c, compare_zero(LinearExpr(v) - a, Comparison::eq)) &&
                              Formula::implies(!c, compare_zero(LinearExpr(v) - b, Comparison::eq));
                return Formula::conjunction({def, take_guards()});
            }
            LinearExpr e = linearize(t);
            return Formula::conjunction({compare_zero(LinearExpr(v) - e, Comparison::eq), take_guards()});
        }

        /** Fresh variables introduced so far, in creation order. */
        const std::vector<Variable>& fresh_variables() const { return fresh_; }

        /** Linear expression for `t`, introducing fresh variables for its ite nodes. */
        LinearExpr linearize(const Term& t)
        {
            const TermNode* n = t.node();
            switch (n->kind) {
                case TermKind::linear: return n->linear;
                case TermKind::sum: {
                    LinearExpr e = n->linear;
                    for (const auto& [c, p] : n->parts)
                        e += linearize(p) * c;
                    return e;
                }
                case TermKind::ite: {
                    auto it = ite_vars_.find(n);
                    if (it != ite_vars_.end())
                        return LinearExpr(it->second);
                    Formula c = rewrite(n->cond);
                    LinearExpr a = linearize(n->branches[0]);
                    LinearExpr b = linearize(n->branches[1]);
                    Variable fresh = Variable::defined("ite#" + std::to_string(fresh_.size()), t);
                    fresh_.push_back(fresh);
                    ite_vars_.emplace(n, fresh);
                    guards_.push_back(Formula::implies(c, compare_zero(LinearExpr(fresh) - a, Comparison::eq)));
                    guards_.push_back(Formula::implies(!c, compare_zero(LinearExpr(fresh) - b, Comparison::eq)));
                    return LinearExpr(fresh);
                }
            }
            return {};
        }

    private:
        Formula take_guards()
        {
            Formula g = Formula::conjunction(guards_);
            guards_.clear();
            return g;
        }

        Formula rewrite(const Formula& f)
        {
            auto it = memo_.find(f.node());
            if (it != memo_.end())
                return it->second;
            const FormulaNode* n = f.node();
            Formula out = f;
            switch (n->kind) {
                case FormulaKind::truth:
                case FormulaKind::falsity:
                case FormulaKind::atom: break;
                case FormulaKind::compare: out = compare_zero(linearize(*n->lhs) - linearize(*n->rhs), n->comparison); break;
                default: {
                    std::vector<Formula> cs;
                    bool changed = false;
                    for (const auto& c : n->children) {
                        cs.push_back(rewrite(c));
                        changed |= cs.back().node() != c.node();
                    }
                    if (!changed)
                        break;
                    switch (n->kind) {
                        case FormulaKind::negation: out = !cs[0]; break;
                        case FormulaKind::conjunction: out = Formula::conjunction(cs); break;
                        case FormulaKind::disjunction: out = Formula::disjunction(cs); break;
                        case FormulaKind::implication: out = Formula::implies(cs[0], cs[1]); break;
                        case FormulaKind::equivalence: out = Formula::iff(cs[0], cs[1]); break;
                        default: out = Formula::ite(cs[0], cs[1], cs[2]); break;
                    }
                    break;
                }
            }
            memo_.emplace(n, out);
            return out;
        }

        std::unordered_map<const FormulaNode*, Formula> memo_;
        std::unordered_map<const TermNode*, Variable> ite_vars_;
        std::vector<Formula> guards_;
        std::vector<Variable> fresh_;
};

/** One-shot elaboration of every ite term in `f`. */
inline Formula elaborate_terms(const Formula& f)
{
    Elaborator e;
    return e.elaborate(f);
}

/** Whether `f` still contains comparison nodes over ite terms. */
inline bool has_ite_terms(const Formula& f)
{
    struct Finder
    {
        bool found = false;
        void atom(const Atom&) {}
        void term(const TermNode& n) { found |= n.kind == TermKind::ite; }
    } finder;
    std::unordered_set<const FormulaNode*> seen;
    std::unordered_set<const TermNode*> seen_terms;
    detail::visit_formula(f, seen, seen_terms, finder);
    return finder.found;
}

/**
 * Variable substitution. Unmapped variables are either kept or, in fresh
 * mode, replaced by new copies of the same sort whose definitions are renamed
 * as well.
 */
class Renaming
{
    public:
        explicit Renaming(bool fresh_for_unmapped = true) : fresh_(fresh_for_unmapped) {}

        void map(const Variable& from, const Variable& to)
        {
            if (from.sort() != to.sort())
                throw ArityError("renaming '" + from.name() + "' to a variable of another sort");
            map_[from.id()] = to;
        }

        Variable operator()(const Variable& v)
        {
            auto it = map_.find(v.id());
            if (it != map_.end())
                return it->second;
            if (!fresh_)
                return v;
            Variable copy;
            if (v.is_defined())
                copy = Variable::defined(v.name() + "'", apply(v.definition()));
            else if (v.is_real())
                copy = Variable::real(v.name() + "'");
            else
                copy = Variable::boolean(v.name() + "'");
            map_[v.id()] = copy;
            return copy;
        }

        /** Pairs (original, image) recorded so far. */
        std::vector<std::pair<std::uint64_t, Variable>> entries() const { return {map_.begin(), map_.end()}; }
        std::optional<Variable> image(const Variable& v) const
        {
            auto it = map_.find(v.id());
            if (it == map_.end())
                return std::nullopt;
            return it->second;
        }

        LinearExpr apply(const LinearExpr& e)
        {
            LinearExpr out(e.constant());
            for (const auto& [v, c] : e.terms())
                out.add((*this)(v), c);
            return out;
        }

        Term apply(const Term& t)
        {
            auto it = term_memo_.find(t.node());
            if (it != term_memo_.end())
                return it->second;
            const TermNode* n = t.node();
            Term out;
            switch (n->kind) {
                case TermKind::linear: out = Term(apply(n->linear)); break;
                case TermKind::sum: {
                    std::vector<std::pair<Rational, Term>> items{{1, Term(apply(n->linear))}};
                    for (const auto& [c, p] : n->parts)
                        items.emplace_back(c, apply(p));
                    out = detail::make_sum(items);
                    break;
                }
                case TermKind::ite: out = Term::ite(apply(n->cond), apply(n->branches[0]), apply(n->branches[1])); break;
            }
            term_memo_.emplace(n, out);
            return out;
        }

        Formula apply(const Atom& a)
        {
            if (a.is_boolean())
                return Formula::variable((*this)(a.variable()));
            LinearExpr e = apply(a.lhs_expr());
            e.add_constant(-a.rhs());
            return detail::linear_compare(e, a.relation());
        }

        Formula apply(const Formula& f)
        {
            auto it = memo_.find(f.node());
            if (it != memo_.end())
                return it->second;
            const FormulaNode* n = f.node();
            Formula out = f;
            switch (n->kind) {
                case FormulaKind::truth:
                case FormulaKind::falsity: break;
                case FormulaKind::atom: out = apply(n->atom); break;
                case FormulaKind::compare: out = Formula::compare(apply(*n->lhs), n->comparison, apply(*n->rhs)); break;
                case FormulaKind::negation: out = !apply(n->children[0]); break;
                case FormulaKind::conjunction:
                case FormulaKind::disjunction: {
                    std::vector<Formula> cs;
                    for (const auto& c : n->children)
                        cs.push_back(apply(c));
                    out = n->kind == FormulaKind::conjunction ? Formula::conjunction(cs) : Formula::disjunction(cs);
                    break;
                }
                case FormulaKind::implication: out = Formula::implies(apply(n->children[0]), apply(n->children[1])); break;
                case FormulaKind::equivalence: out = Formula::iff(apply(n->children[0]), apply(n->children[1])); break;
                case FormulaKind::ite: out = Formula::ite(apply(n->children[0]), apply(n->children[1]), apply(n->children[2])); break;
            }
            memo_.emplace(n, out);
            return out;
        }

    private:
        bool fresh_;
        std::unordered_map<std::uint64_t, Variable> map_;
        std::unordered_map<const FormulaNode*, Formula> memo_;
        std::unordered_map<const TermNode*, Term> term_memo_;
};

/**
 * Replaces atoms by constants wherever `decide` returns a value, folding the
 * surrounding connectives.
 */
template <typename Decide>
Formula simplify_atoms(const Formula& f, Decide&& decide, std::unordered_map<const FormulaNode*, Formula>& memo)
{
    auto it = memo.find(f.node());
    if (it != memo.end())
        return it->second;
    const FormulaNode* n = f.node();
    Formula out = f;
    switch (n->kind) {
        case FormulaKind::truth:
        case FormulaKind::falsity:
        case FormulaKind::compare: break;
        case FormulaKind::atom:
            if (auto v = decide(n->atom))
                out = Formula::constant(*v);
            break;
        case FormulaKind::negation: out = !simplify_atoms(n->children[0], decide, memo); break;
        case FormulaKind::conjunction:
        case FormulaKind::disjunction: {
            std::vector<Formula> cs;
            for (const auto& c : n->children)
                cs.push_back(simplify_atoms(c, decide, memo));
            out = n->kind == FormulaKind::conjunction ? Formula::conjunction(cs) : Formula::disjunction(cs);
            break;
        }
        case FormulaKind::implication:
            out = Formula::implies(simplify_atoms(n->children[0], decide, memo), simplify_atoms(n->children[1], decide, memo));
            break;
        case FormulaKind::equivalence:
            out = Formula::iff(simplify_atoms(n->children[0], decide, memo), simplify_atoms(n->children[1], decide, memo));
            break;
        case FormulaKind::ite:
            out = Formula::ite(simplify_atoms(n->children[0], decide, memo), simplify_atoms(n->children[1], decide, memo),
                               simplify_atoms(n->children[2], decide, memo));
            break;
    }
    memo.emplace(n, out);
    return out;
}

template <typename Decide>
Formula simplify_atoms(const Formula& f, Decide&& decide)
{
    std::unordered_map<const FormulaNode*, Formula> memo;
    return simplify_atoms(f, decide, memo);
}

/** Top-level conjuncts of `f` (f itself when it is not a conjunction). */
inline std::vector<Formula> conjuncts_of(const Formula& f)
{
    if (f.kind() == FormulaKind::conjunction)
        return f.children();
    if (f.is_true())
        return {};
    return {f};
}

/** The literal `f` denotes, if `f` is an atom or a negated atom. */
inline std::optional<Literal> as_literal(const Formula& f)
{
    if (f.kind() == FormulaKind::atom)
        return Literal{f.atom(), true};
    if (f.kind() == FormulaKind::negation && f.children()[0].kind() == FormulaKind::atom)
        return Literal{f.children()[0].atom(), false};
    return std::nullopt;
}

} // namespace wmipfv

#endif

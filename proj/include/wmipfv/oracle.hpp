/**
 * Floating-point Monte Carlo ground truth: formulas, terms and weights are
 * compiled to a double evaluator and sampled uniformly over a box times the
 * boolean cube. Independent of the enumeration and integration code.
 */
#ifndef WMIPFV_ORACLE_HPP
#define WMIPFV_ORACLE_HPP

#include <cmath>
#include <random>
#include <unordered_map>
#include <vector>

#include "box.hpp"
#include "weights.hpp"

namespace wmipfv {

/** Evaluates formulas, terms and weights at one point at a time, in doubles. */
class DoubleEvaluator
{
    public:
        std::size_t add_formula(const Formula& f) { return formula_index(f); }
        std::size_t add_weight(const WeightDag& w) { return weight_index(w.root()); }
        std::size_t add_term(const Term& t) { return term_index(t); }

        /** Registered reals without a definition (the sampling coordinates). */
        std::vector<Variable> free_reals() const
        {
            std::vector<Variable> out;
            for (std::size_t i = 0; i < reals_.size(); ++i)
                if (defs_[i] < 0)
                    out.push_back(reals_[i]);
            return out;
        }
        const std::vector<Variable>& booleans() const { return bools_; }

        /** Starts a new point; all free values must be set again. */
        void next_point()
        {
            ++generation_;
            if (generation_ == 0) {
                std::fill(real_stamp_.begin(), real_stamp_.end(), 0);
                std::fill(fstamp_.begin(), fstamp_.end(), 0);
                std::fill(tstamp_.begin(), tstamp_.end(), 0);
                std::fill(wstamp_.begin(), wstamp_.end(), 0);
                generation_ = 1;
            }
        }

        void set(const Variable& v, double value)
        {
            std::size_t s = real_slot(v);
            real_values_[s] = value;
            real_stamp_[s] = generation_;
        }
        void set(const Variable& v, bool value) { bool_values_[bool_slot(v)] = value ? 1 : 0; }

        double real(const Variable& v) { return real_at(real_slot(v)); }
        bool formula(std::size_t i) { return eval_formula(static_cast<int>(i)); }
        double weight(std::size_t i) { return eval_weight(static_cast<int>(i)); }
        double term(std::size_t i) { return eval_term(static_cast<int>(i)); }

    private:
        using Linear = std::vector<std::pair<int, double>>;

        struct TNode
        {
            TermKind kind;
            Linear linear;
            double constant = 0;
            std::vector<std::pair<double, int>> parts;
            int cond = -1, then_t = -1, else_t = -1;
        };
        struct FNode
        {
            FormulaKind kind;
            bool boolean = false;
            int bslot = -1;
            Linear linear;
            double rhs = 0;
            Relation rel = Relation::le;
            std::vector<int> children;
            int lhs = -1, rhs_term = -1;
            Comparison cmp = Comparison::le;
        };
        struct WNode
        {
            WeightKind kind;
            std::vector<std::pair<double, std::vector<std::pair<int, unsigned>>>> poly;
            int cond = -1;
            std::vector<int> children;
        };

        std::size_t real_slot(const Variable& v)
        {
            auto it = real_index_.find(v.id());
            if (it != real_index_.end())
                return it->second;
            std::size_t s = reals_.size();
            real_index_.emplace(v.id(), s);
            reals_.push_back(v);
            defs_.push_back(-1);
            real_values_.push_back(0);
            real_stamp_.push_back(0);
            if (v.is_defined()) {
                int t = term_index(v.definition());
                defs_[s] = t;
            }
            return s;
        }

        std::size_t bool_slot(const Variable& v)
        {
            auto it = bool_index_.find(v.id());
            if (it != bool_index_.end())
                return it->second;
            std::size_t s = bools_.size();
            bool_index_.emplace(v.id(), s);
            bools_.push_back(v);
            bool_values_.push_back(0);
            return s;
        }

        Linear linear(const LinearExpr& e)
        {
            Linear out;
            for (const auto& [v, c] : e.terms())
                out.emplace_back(static_cast<int>(real_slot(v)), to_double(c));
            return out;
        }

        int term_index(const Term& t)
        {
            auto it = term_memo_.find(t.node());
            if (it != term_memo_.end())
                return it->second;
            const TermNode* n = t.node();
            TNode node;
            node.kind = n->kind;
            node.linear = linear(n->linear);
            node.constant = to_double(n->linear.constant());
            if (n->kind == TermKind::sum)
                for (const auto& [c, p] : n->parts)
                    node.parts.emplace_back(to_double(c), term_index(p));
            if (n->kind == TermKind::ite) {
                node.cond = formula_index(n->cond);
                node.then_t = term_index(n->branches[0]);
                node.else_t = term_index(n->branches[1]);
            }
            int idx = static_cast<int>(terms_.size());
            terms_.push_back(std::move(node));
            tvalue_.push_back(0);
            tstamp_.push_back(0);
            term_memo_.emplace(n, idx);
            return idx;
        }

        int formula_index(const Formula& f)
        {
            auto it = formula_memo_.find(f.node());
            if (it != formula_memo_.end())
                return it->second;
            const FormulaNode* n = f.node();
            FNode node;
            node.kind = n->kind;
            if (n->kind == FormulaKind::atom) {
                if (n->atom.is_boolean()) {
                    node.boolean = true;
                    node.bslot = static_cast<int>(bool_slot(n->atom.variable()));
                } else {
                    node.linear = linear(n->atom.lhs_expr());
                    node.rhs = to_double(n->atom.rhs());
                    node.rel = n->atom.relation();
                }
            } else if (n->kind == FormulaKind::compare) {
                node.lhs = term_index(*n->lhs);
                node.rhs_term = term_index(*n->rhs);
                node.cmp = n->comparison;
            } else {
                for (const auto& c : n->children)
                    node.children.push_back(formula_index(c));
            }
            int idx = static_cast<int>(formulas_.size());
            formulas_.push_back(std::move(node));
            fvalue_.push_back(0);
            fstamp_.push_back(0);
            formula_memo_.emplace(n, idx);
            return idx;
        }

        int weight_index(const WeightNodePtr& w)
        {
            auto it = weight_memo_.find(w.get());
            if (it != weight_memo_.end())
                return it->second;
            WNode node;
            node.kind = w->kind;
            if (w->kind == WeightKind::poly)
                for (const auto& [m, c] : w->poly.terms()) {
                    std::vector<std::pair<int, unsigned>> f;
                    for (const auto& [v, e] : m)
                        f.emplace_back(static_cast<int>(real_slot(v)), e);
                    node.poly.emplace_back(to_double(c), std::move(f));
                }
            if (w->kind == WeightKind::ite)
                node.cond = formula_index(w->cond);
            for (const auto& c : w->children)
                node.children.push_back(weight_index(c));
            int idx = static_cast<int>(weights_.size());
            weights_.push_back(std::move(node));
            wvalue_.push_back(0);
            wstamp_.push_back(0);
            weight_memo_.emplace(w.get(), idx);
            return idx;
        }

        double real_at(std::size_t s)
        {
            if (real_stamp_[s] == generation_)
                return real_values_[s];
            if (defs_[s] < 0)
                throw Error("no sample value for '" + reals_[s].name() + "'");
            double v = eval_term(defs_[s]);
            real_values_[s] = v;
            real_stamp_[s] = generation_;
            return v;
        }

        double eval_linear(const Linear& l)
        {
            double s = 0;
            for (const auto& [slot, c] : l)
                s += c * real_at(static_cast<std::size_t>(slot));
            return s;
        }

        double eval_term(int i)
        {
            if (tstamp_[i] == generation_)
                return tvalue_[i];
            const TNode& n = terms_[i];
            double v = 0;
            switch (n.kind) {
                case TermKind::linear: v = eval_linear(n.linear) + n.constant; break;
                case TermKind::sum:
                    v = eval_linear(n.linear) + n.constant;
                    for (const auto& [c, p] : n.parts)
                        v += c * eval_term(p);
                    break;
                case TermKind::ite: v = eval_formula(n.cond) ? eval_term(n.then_t) : eval_term(n.else_t); break;
            }
            tvalue_[i] = v;
            tstamp_[i] = generation_;
            return v;
        }

        static bool compare(double a, Comparison c, double b)
        {
            switch (c) {
                case Comparison::le: return a <= b;
                case Comparison::lt: return a < b;
                case Comparison::eq: return a == b;
                case Comparison::ge: return a >= b;
                case Comparison::gt: return a > b;
                case Comparison::ne: return a != b;
            }
            return false;
        }

        bool eval_formula(int i)
        {
            if (fstamp_[i] == generation_)
                return fvalue_[i];
            const FNode& n = formulas_[i];
            bool v = false;
            switch (n.kind) {
                case FormulaKind::truth: v = true; break;
                case FormulaKind::falsity: v = false; break;
                case FormulaKind::atom:
                    if (n.boolean) {
                        v = bool_values_[n.bslot];
                    } else {
                        double s = eval_linear(n.linear);
                        v = n.rel == Relation::le ? s <= n.rhs : n.rel == Relation::lt ? s < n.rhs : s == n.rhs;
                    }
                    break;
                case FormulaKind::compare: v = compare(eval_term(n.lhs), n.cmp, eval_term(n.rhs_term)); break;
                case FormulaKind::negation: v = !eval_formula(n.children[0]); break;
                case FormulaKind::conjunction:
                    v = true;
                    for (int c : n.children)
                        if (!eval_formula(c)) {
                            v = false;
                            break;
                        }
                    break;
                case FormulaKind::disjunction:
                    v = false;
                    for (int c : n.children)
                        if (eval_formula(c)) {
                            v = true;
                            break;
                        }
                    break;
                case FormulaKind::implication: v = !eval_formula(n.children[0]) || eval_formula(n.children[1]); break;
                case FormulaKind::equivalence: v = eval_formula(n.children[0]) == eval_formula(n.children[1]); break;
                case FormulaKind::ite:
                    v = eval_formula(n.children[0]) ? eval_formula(n.children[1]) : eval_formula(n.children[2]);
                    break;
            }
            fvalue_[i] = v;
            fstamp_[i] = generation_;
            return v;
        }

        double eval_weight(int i)
        {
            if (wstamp_[i] == generation_)
                return wvalue_[i];
            const WNode& n = weights_[i];
            double v = 0;
            switch (n.kind) {
                case WeightKind::poly:
                    for (const auto& [c, f] : n.poly) {
                        double t = c;
                        for (const auto& [slot, e] : f)
                            t *= std::pow(real_at(static_cast<std::size_t>(slot)), static_cast<double>(e));
                        v += t;
                    }
                    break;
                case WeightKind::ite: v = eval_weight(n.children[eval_formula(n.cond) ? 0 : 1]); break;
                case WeightKind::sum:
                    for (int c : n.children)
                        v += eval_weight(c);
                    break;
                case WeightKind::product:
                    v = 1;
                    for (int c : n.children) {
                        v *= eval_weight(c);
                        if (v == 0)
                            break;
                    }
                    break;
            }
            wvalue_[i] = v;
            wstamp_[i] = generation_;
            return v;
        }

        std::vector<Variable> reals_, bools_;
        std::unordered_map<std::uint64_t, std::size_t> real_index_, bool_index_;
        std::vector<int> defs_;
        std::vector<double> real_values_;
        std::vector<std::uint32_t> real_stamp_;
        std::vector<char> bool_values_;

        std::vector<TNode> terms_;
        std::vector<FNode> formulas_;
        std::vector<WNode> weights_;
        std::unordered_map<const TermNode*, int> term_memo_;
        std::unordered_map<const FormulaNode*, int> formula_memo_;
        std::unordered_map<const WeightNode*, int> weight_memo_;
        std::vector<double> tvalue_, wvalue_;
        std::vector<char> fvalue_;
        std::vector<std::uint32_t> tstamp_, fstamp_, wstamp_;
        std::uint32_t generation_ = 1;
};

struct McEstimate
{
    double mean = 0;
    double lo = 0, hi = 0;
    std::size_t samples = 0;
    /** No sample satisfied the conditioning event. */
    bool inconclusive = false;

    bool contains(double v) const { return !inconclusive && lo <= v && v <= hi; }
};

namespace detail {

constexpr double z99 = 2.5758293035489004;

/** Uniform sampler over the box of the evaluator's free reals and all its booleans. */
class UniformPointSampler
{
    public:
        UniformPointSampler(DoubleEvaluator& ev, const Box& box, std::uint64_t seed) : ev_(ev), rng_(seed)
        {
            for (const auto& v : ev.free_reals()) {
                Interval i = box.get(v);
                if (!i.bounded())
                    throw UnboundedRegionError("sampling box does not bound '" + v.name() + "'");
                reals_.push_back(v);
                dists_.emplace_back(to_double(*i.lo), to_double(*i.hi));
                volume_ *= to_double(*i.hi - *i.lo);
            }
            bools_ = ev.booleans();
            volume_ *= std::ldexp(1.0, static_cast<int>(bools_.size()));
        }

        void draw()
        {
            ev_.next_point();
            for (std::size_t i = 0; i < reals_.size(); ++i)
                ev_.set(reals_[i], dists_[i](rng_));
            for (const auto& b : bools_)
                ev_.set(b, (rng_() & 1) != 0);
        }

        double volume() const { return volume_; }

    private:
        DoubleEvaluator& ev_;
        std::mt19937_64 rng_;
        std::vector<Variable> reals_, bools_;
        std::vector<std::uniform_real_distribution<double>> dists_;
        double volume_ = 1;
};

} // namespace detail

/**
 * Evaluates w at uniform samples of the box; throws ModelError at the first
 * sample inside the support where w < −tolerance. Returns the number of
 * samples that fell inside the support.
 */
inline std::size_t check_nonnegative(const WeightDag& w, const Box& box, std::size_t samples = 1000, std::uint64_t seed = 0,
                                     double tolerance = 1e-9)
{
    DoubleEvaluator ev;
    std::size_t f = ev.add_formula(w.support());
    std::size_t wi = ev.add_weight(w);
    detail::UniformPointSampler sampler(ev, box, seed);
    std::size_t inside = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        sampler.draw();
        if (!ev.formula(f))
            continue;
        ++inside;
        double v = ev.weight(wi);
        if (v < -tolerance)
            throw ModelError("weight is negative (" + std::to_string(v) + ") at a sampled point of its support");
    }
    return inside;
}

/** MC estimate of WMI(Δ ∧ χ, w) with a 99% normal-approximation interval. */
inline McEstimate mc_integrate(const Formula& delta, const WeightDag& w, const Box& box, std::size_t samples,
                               std::uint64_t seed)
{
    DoubleEvaluator ev;
    std::size_t f = ev.add_formula(delta && w.support());
    std::size_t wi = ev.add_weight(w);
    McEstimate est;
    est.samples = samples;
    if (delta.is_false() || samples == 0)
        return est;
    detail::UniformPointSampler sampler(ev, box, seed);
    double sum = 0, sq = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        sampler.draw();
        double v = ev.formula(f) ? ev.weight(wi) * sampler.volume() : 0.0;
        sum += v;
        sq += v * v;
    }
    double n = static_cast<double>(samples);
    est.mean = sum / n;
    double var = std::max(0.0, sq / n - est.mean * est.mean) * n / std::max(1.0, n - 1);
    double half = detail::z99 * std::sqrt(var / n);
    est.lo = est.mean - half;
    est.hi = est.mean + half;
    return est;
}

/** MC ratio estimate of WMI(Γ ∧ Δ, w) / WMI(Δ, w) with a delta-method 99% interval. */
inline McEstimate mc_probability(const Formula& gamma, const Formula& delta, const WeightDag& w, const Box& box,
                                 std::size_t samples, std::uint64_t seed)
{
    DoubleEvaluator ev;
    std::size_t fd = ev.add_formula(delta && w.support());
    std::size_t fg = ev.add_formula(gamma);
    std::size_t wi = ev.add_weight(w);
    McEstimate est;
    est.samples = samples;
    detail::UniformPointSampler sampler(ev, box, seed);
    std::vector<std::pair<double, double>> ab;
    ab.reserve(samples);
    double sa = 0, sb = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        sampler.draw();
        double b = ev.formula(fd) ? ev.weight(wi) : 0.0;
        double a = b != 0 && ev.formula(fg) ? b : 0.0;
        ab.emplace_back(a, b);
        sa += a;
        sb += b;
    }
    if (sb == 0) {
        est.inconclusive = true;
        return est;
    }
    double r = sa / sb;
    double n = static_cast<double>(samples);
    double mb = sb / n, acc = 0;
    for (const auto& [a, b] : ab)
        acc += (a - r * b) * (a - r * b);
    double var = acc / std::max(1.0, n - 1) / (mb * mb) / n;
    double half = detail::z99 * std::sqrt(var);
    est.mean = r;
    est.lo = r - half;
    est.hi = r + half;
    return est;
}

} // namespace wmipfv

#endif

/**
 * Enumeration of the LRA-satisfiable total truth assignments of a formula,
 * by depth-first search over its atoms with an incremental theory check.
 */
#ifndef WMIPFV_ENUMERATION_HPP
#define WMIPFV_ENUMERATION_HPP

#include <cstdint>
#include <map>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "lp.hpp"
#include "logic.hpp"
#include "printing.hpp"
#include "simplex.hpp"

namespace wmipfv {

/**
 * Equalities `e = 0` kept in solved form: each pivot variable maps to an
 * expression over non-pivot variables. Defined variables are preferred as
 * pivots, so free variables stay as coordinates of the integration domain.
 */
class AffineSystem
{
    public:
        enum class Status { implied, contradicts, free_only, solvable };

        LinearExpr reduce(const LinearExpr& e) const
        {
            LinearExpr out(e.constant());
            for (const auto& [v, c] : e.terms()) {
                auto it = solved_.find(v.id());
                if (it != solved_.end())
                    out += it->second * c;
                else
                    out.add(v, c);
            }
            return out;
        }

        /** How `e = 0` relates to the current equalities. */
        Status classify(const LinearExpr& e) const
        {
            LinearExpr r = reduce(e);
            if (r.is_constant())
                return r.constant() == 0 ? Status::implied : Status::contradicts;
            for (const auto& t : r.terms())
                if (t.first.is_defined())
                    return Status::solvable;
            return Status::free_only;
        }

        /** Adds `e = 0`; the equation must not be implied or contradictory. */
        void add(const LinearExpr& e)
        {
            LinearExpr r = reduce(e);
            if (r.is_constant())
                throw Error("affine system: equation has no variable to solve for");
            const auto* pivot = &r.terms().back();
            for (auto it = r.terms().rbegin(); it != r.terms().rend(); ++it)
                if (it->first.is_defined()) {
                    pivot = &*it;
                    break;
                }
            Variable v = pivot->first;
            Rational a = pivot->second;
            LinearExpr rest = r;
            rest.add(v, -a);
            LinearExpr solution = rest * Rational(-1 / a);
            for (auto& [id, expr] : solved_)
                expr = expr.substitute(v, solution);
            solved_.emplace(v.id(), std::move(solution));
        }

        std::optional<LinearExpr> expression(const Variable& v) const
        {
            auto it = solved_.find(v.id());
            if (it == solved_.end())
                return std::nullopt;
            return it->second;
        }

        bool empty() const { return solved_.empty(); }
        const std::unordered_map<std::uint64_t, LinearExpr>& solved() const { return solved_; }

        void push() { stack_.push_back(solved_); }
        void pop()
        {
            solved_ = std::move(stack_.back());
            stack_.pop_back();
        }

    private:
        std::unordered_map<std::uint64_t, LinearExpr> solved_;
        std::vector<std::unordered_map<std::uint64_t, LinearExpr>> stack_;
};

struct EnumerationOptions
{
    /** Check LRA feasibility at every search node rather than only at leaves. */
    bool theory_pruning = true;
    /**
     * Integration mode: an equality that reduces to a constraint over free
     * variables only is assumed false (its true branch has measure zero), and
     * disequalities are not checked at leaves.
     */
    bool measure_zero_pruning = false;
    /** When set, every yielded assignment is written here, one per line. */
    std::ostream* dump = nullptr;
};

struct EnumerationStats
{
    std::size_t assignments = 0;
    std::size_t search_nodes = 0;
    std::size_t theory_checks = 0;
};

/**
 * Depth-first enumeration of TTA(Δ) over atoms_of(Δ) ∪ extra atoms.
 * Boolean atoms are branched first, then arithmetic atoms in universe order;
 * each atom is tried true before false.
 */
class Enumerator
{
    public:
        Enumerator(const Formula& delta, const std::vector<Atom>& extra_atoms = {}, EnumerationOptions options = {})
            : options_(options)
        {
            universe_ = atoms_of(delta);
            std::unordered_set<Atom, AtomHash> seen(universe_.begin(), universe_.end());
            for (const auto& a : extra_atoms)
                if (seen.insert(a).second)
                    universe_.push_back(a);
            for (std::size_t i = 0; i < universe_.size(); ++i)
                index_.emplace(universe_[i], i);
            root_ = compile(delta);
            for (std::size_t i = 0; i < universe_.size(); ++i)
                if (universe_[i].is_boolean())
                    order_.push_back(i);
            for (std::size_t i = 0; i < universe_.size(); ++i)
                if (universe_[i].is_lra())
                    order_.push_back(i);
            setup_theory();
            values_.assign(universe_.size(), -1);
        }

        const std::vector<Atom>& universe() const { return universe_; }
        const EnumerationStats& stats() const { return stats_; }

        /**
         * Calls `visit(mu, equalities)` for each assignment; stops early when
         * it returns false. `equalities` holds the solved equalities of μ
         * (only maintained in integration mode).
         */
        template <typename Visit>
        void run(Visit&& visit)
        {
            stop_ = false;
            search(0, visit);
        }

        std::vector<Assignment> all()
        {
            std::vector<Assignment> out;
            run([&](const Assignment& mu, const AffineSystem&) {
                out.push_back(mu);
                return true;
            });
            return out;
        }

    private:
        struct Node
        {
            FormulaKind kind;
            std::size_t atom = 0;
            std::vector<std::size_t> children;
        };

        std::size_t compile(const Formula& f)
        {
            auto it = compiled_.find(f.node());
            if (it != compiled_.end())
                return it->second;
            const FormulaNode* fn = f.node();
            if (fn->kind == FormulaKind::compare)
                throw Error("enumeration requires an elaborated formula (ite terms present)");
            Node n{fn->kind, 0, {}};
            if (fn->kind == FormulaKind::atom)
                n.atom = index_.at(fn->atom);
            for (const auto& c : fn->children)
                n.children.push_back(compile(c));
            nodes_.push_back(std::move(n));
            std::size_t id = nodes_.size() - 1;
            compiled_.emplace(fn, id);
            return id;
        }

        // Three-valued: -1 unknown, 0 false, 1 true.
        int eval(std::size_t id)
        {
            if (stamp_[id] == generation_)
                return cache_[id];
            const Node& n = nodes_[id];
            int r = -1;
            switch (n.kind) {
                case FormulaKind::truth: r = 1; break;
                case FormulaKind::falsity: r = 0; break;
                case FormulaKind::atom: r = values_[n.atom]; break;
                case FormulaKind::compare: break;
                case FormulaKind::negation: {
                    int v = eval(n.children[0]);
                    r = v < 0 ? -1 : 1 - v;
                    break;
                }
                case FormulaKind::conjunction: {
                    r = 1;
                    for (auto c : n.children) {
                        int v = eval(c);
                        if (v == 0) {
                            r = 0;
                            break;
                        }
                        if (v < 0)
                            r = -1;
                    }
                    break;
                }
                case FormulaKind::disjunction: {
                    r = 0;
                    for (auto c : n.children) {
                        int v = eval(c);
                        if (v == 1) {
                            r = 1;
                            break;
                        }
                        if (v < 0)
                            r = -1;
                    }
                    break;
                }
                case FormulaKind::implication: {
                    int a = eval(n.children[0]), b = eval(n.children[1]);
                    if (a == 0 || b == 1)
                        r = 1;
                    else if (a == 1 && b == 0)
                        r = 0;
                    break;
                }
                case FormulaKind::equivalence: {
                    int a = eval(n.children[0]), b = eval(n.children[1]);
                    if (a >= 0 && b >= 0)
                        r = a == b;
                    break;
                }
                case FormulaKind::ite: {
                    int c = eval(n.children[0]);
                    if (c >= 0) {
                        r = eval(n.children[c == 1 ? 1 : 2]);
                    } else {
                        int t = eval(n.children[1]), e = eval(n.children[2]);
                        if (t >= 0 && t == e)
                            r = t;
                    }
                    break;
                }
            }
            stamp_[id] = generation_;
            cache_[id] = static_cast<signed char>(r);
            return r;
        }

        int evaluate_root()
        {
            ++generation_;
            if (stamp_.size() != nodes_.size()) {
                stamp_.assign(nodes_.size(), 0);
                cache_.assign(nodes_.size(), -1);
            }
            return eval(root_);
        }

        void setup_theory()
        {
            std::map<std::vector<std::pair<std::uint64_t, Rational>>, std::size_t> rows;
            target_.assign(universe_.size(), 0);
            for (std::size_t i = 0; i < universe_.size(); ++i) {
                const Atom& a = universe_[i];
                if (a.is_boolean())
                    continue;
                for (const auto& [v, c] : a.lhs())
                    if (!columns_.count(v.id()))
                        columns_.emplace(v.id(), simplex_.add_variable());
            }
            for (std::size_t i = 0; i < universe_.size(); ++i) {
                const Atom& a = universe_[i];
                if (a.is_boolean())
                    continue;
                if (a.lhs().size() == 1) {
                    target_[i] = columns_.at(a.lhs()[0].first.id());
                    continue;
                }
                std::vector<std::pair<std::uint64_t, Rational>> key;
                std::vector<std::pair<std::size_t, Rational>> combination;
                for (const auto& [v, c] : a.lhs()) {
                    key.emplace_back(v.id(), c);
                    combination.emplace_back(columns_.at(v.id()), c);
                }
                auto it = rows.find(key);
                if (it == rows.end())
                    it = rows.emplace(key, simplex_.add_row(combination)).first;
                target_[i] = it->second;
            }
        }

        bool assert_literal(std::size_t i, bool value)
        {
            const Atom& a = universe_[i];
            std::size_t v = target_[i];
            const Rational& b = a.rhs();
            switch (a.relation()) {
                case Relation::le: return value ? simplex_.assert_upper(v, {b, 0}) : simplex_.assert_lower(v, {b, 1});
                case Relation::lt: return value ? simplex_.assert_upper(v, {b, -1}) : simplex_.assert_lower(v, {b, 0});
                case Relation::eq:
                    if (!value)
                        return true;
                    return simplex_.assert_upper(v, {b, 0}) && simplex_.assert_lower(v, {b, 0});
            }
            return true;
        }

        bool theory_check()
        {
            ++stats_.theory_checks;
            return simplex_.check();
        }

        // Whether the current (already checked) set stays satisfiable with every asserted disequality.
        bool disequalities_hold()
        {
            for (std::size_t i = 0; i < universe_.size(); ++i) {
                const Atom& a = universe_[i];
                if (a.is_boolean() || a.relation() != Relation::eq || values_[i] != 0)
                    continue;
                simplex_.push();
                bool ok = simplex_.assert_upper(target_[i], {a.rhs(), -1}) && theory_check();
                simplex_.pop();
                if (ok)
                    continue;
                simplex_.push();
                ok = simplex_.assert_lower(target_[i], {a.rhs(), 1}) && theory_check();
                simplex_.pop();
                if (!ok)
                    return false;
            }
            return true;
        }

        // No equality assigned false is implied by the equalities collected further down the branch.
        bool falsified_equalities_open() const
        {
            for (std::size_t i = 0; i < universe_.size(); ++i) {
                const Atom& a = universe_[i];
                if (a.is_boolean() || a.relation() != Relation::eq || values_[i] != 0)
                    continue;
                LinearExpr e = a.lhs_expr();
                e.add_constant(-a.rhs());
                if (equalities_.classify(e) == AffineSystem::Status::implied)
                    return false;
            }
            return true;
        }

        template <typename Visit>
        void leaf(Visit& visit)
        {
            if (!options_.theory_pruning) {
                simplex_.push();
                bool ok = true;
                for (std::size_t i = 0; i < universe_.size() && ok; ++i)
                    if (universe_[i].is_lra())
                        ok = assert_literal(i, values_[i] == 1);
                ok = ok && theory_check();
                if (ok && !options_.measure_zero_pruning)
                    ok = disequalities_hold();
                simplex_.pop();
                if (!ok)
                    return;
            } else if (!options_.measure_zero_pruning && !disequalities_hold()) {
                return;
            }
            if (options_.measure_zero_pruning && !falsified_equalities_open())
                return;
            Assignment mu;
            for (std::size_t i = 0; i < universe_.size(); ++i)
                mu.set(universe_[i], values_[i] == 1);
            ++stats_.assignments;
            if (options_.dump)
                *options_.dump << to_string(mu) << '\n';
            if (!visit(static_cast<const Assignment&>(mu), static_cast<const AffineSystem&>(equalities_)))
                stop_ = true;
        }

        template <typename Visit>
        void search(std::size_t depth, Visit& visit)
        {
            ++stats_.search_nodes;
            if (evaluate_root() == 0)
                return;
            if (depth == order_.size()) {
                leaf(visit);
                return;
            }
            std::size_t i = order_[depth];
            const Atom& a = universe_[i];
            bool try_value[2] = {true, true};
            bool track_equality = false;
            if (a.is_lra() && a.relation() == Relation::eq && (options_.measure_zero_pruning || options_.theory_pruning)) {
                LinearExpr e = a.lhs_expr();
                e.add_constant(-a.rhs());
                switch (equalities_.classify(e)) {
                    case AffineSystem::Status::implied: try_value[1] = false; break;
                    case AffineSystem::Status::contradicts: try_value[0] = false; break;
                    case AffineSystem::Status::free_only:
                        if (options_.measure_zero_pruning)
                            try_value[0] = false;
                        else
                            track_equality = true;
                        break;
                    case AffineSystem::Status::solvable: track_equality = true; break;
                }
            }
            for (int b = 0; b < 2 && !stop_; ++b) {
                if (!try_value[b])
                    continue;
                bool value = b == 0;
                values_[i] = value ? 1 : 0;
                bool pushed_equality = value && track_equality;
                if (pushed_equality) {
                    equalities_.push();
                    LinearExpr e = a.lhs_expr();
                    e.add_constant(-a.rhs());
                    equalities_.add(e);
                }
                bool feasible = true;
                bool theory = a.is_lra() && options_.theory_pruning;
                if (theory) {
                    simplex_.push();
                    feasible = assert_literal(i, value) && theory_check();
                }
                if (feasible)
                    search(depth + 1, visit);
                if (theory)
                    simplex_.pop();
                if (pushed_equality)
                    equalities_.pop();
                values_[i] = -1;
            }
        }

        EnumerationOptions options_;
        std::vector<Atom> universe_;
        std::unordered_map<Atom, std::size_t, AtomHash> index_;
        std::vector<std::size_t> order_;
        std::vector<Node> nodes_;
        std::unordered_map<const FormulaNode*, std::size_t> compiled_;
        std::size_t root_ = 0;
        std::vector<signed char> values_;
        std::vector<std::uint32_t> stamp_;
        std::vector<signed char> cache_;
        std::uint32_t generation_ = 0;
        IncrementalSimplex simplex_;
        std::unordered_map<std::uint64_t, std::size_t> columns_;
        std::vector<std::size_t> target_;
        AffineSystem equalities_;
        EnumerationStats stats_;
        bool stop_ = false;
};

/** All LRA-satisfiable total truth assignments of `delta` over its atoms and `extra_atoms`. */
inline std::vector<Assignment> enumerate_tta(const Formula& delta, const std::vector<Atom>& extra_atoms = {},
                                             EnumerationOptions options = {})
{
    Enumerator e(delta, extra_atoms, options);
    return e.all();
}

} // namespace wmipfv

#endif

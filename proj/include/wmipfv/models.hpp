/**
 * Machine-learning models and their WMI artifacts: density estimation trees
 * and sum-product networks as weight DAGs, ReLU networks, DET forest
 * classifiers and ensembles as support formulas.
 */
#ifndef WMIPFV_MODELS_HPP
#define WMIPFV_MODELS_HPP

#include <optional>
#include <string>
#include <vector>

#include "box.hpp"
#include "weights.hpp"
#include "wmi.hpp"

namespace wmipfv {

/** χ_S, w_S and the output symbols of an encoded system. */
struct SystemEncoding
{
    std::vector<Variable> inputs;
    Formula chi = Formula::top();
    WeightDag weight;
    /** Real output f(x), when the system has one. */
    std::optional<Term> output;
    /** Decision c(x). */
    Formula decision = Formula::top();
    /** Introduced variables in dependency order. */
    std::vector<Variable> introduced;
    /** Single-atom ite conditions eligible for partitioning. */
    std::vector<Formula> conditions;
};

// ---------------------------------------------------------------- DETs

struct DetFeature
{
    Variable var;
    /** Bounding interval; unused for boolean features. */
    Rational lo = 0, hi = 0;
};

struct DetNode
{
    bool leaf = true;
    std::size_t feature = 0;
    /** Real feature: left iff x ≤ threshold. Boolean feature: left iff true. */
    Rational threshold = 0;
    std::size_t left = 0, right = 0;
    Rational mass = 0;
};

/** Cell of a DET leaf: the bounding box cut by the root path. */
struct DetCell
{
    std::vector<Rational> lo, hi;
    std::vector<std::optional<bool>> fixed;
    std::vector<Formula> path;
};

class DensityTree
{
    public:
        std::vector<DetFeature> features;
        /** nodes[0] is the root. */
        std::vector<DetNode> nodes;

        void validate() const
        {
            if (nodes.empty())
                throw ModelError("density tree without nodes");
            for (const auto& f : features)
                if (f.var.is_real() && !(f.lo < f.hi))
                    throw ModelError("density tree feature '" + f.var.name() + "' has an empty bounding interval");
            Rational total = 0;
            std::vector<int> seen(nodes.size(), 0);
            std::vector<std::size_t> stack{0};
            while (!stack.empty()) {
                std::size_t i = stack.back();
                stack.pop_back();
                if (i >= nodes.size() || seen[i]++)
                    throw ModelError("density tree node structure is not a tree");
                const DetNode& n = nodes[i];
                if (n.leaf) {
                    if (n.mass < 0)
                        throw ModelError("negative leaf mass");
                    total += n.mass;
                    continue;
                }
                if (n.feature >= features.size())
                    throw ModelError("split on unknown feature");
                stack.push_back(n.left);
                stack.push_back(n.right);
            }
            if (total != 1)
                throw ModelError("leaf masses sum to " + to_string(total) + ", not 1");
        }

        std::size_t leaf_count() const
        {
            std::size_t n = 0;
            for (const auto& node : nodes)
                n += node.leaf;
            return n;
        }

        Formula split_condition(const DetNode& n) const
        {
            const Variable& v = features[n.feature].var;
            if (v.is_boolean())
                return Formula::variable(v);
            return Term(v) <= Term(n.threshold);
        }

        /** Leaf indices with their cells, in depth-first order (left first). */
        std::vector<std::pair<std::size_t, DetCell>> cells() const
        {
            DetCell root;
            for (const auto& f : features) {
                root.lo.push_back(f.lo);
                root.hi.push_back(f.hi);
                root.fixed.push_back(std::nullopt);
            }
            std::vector<std::pair<std::size_t, DetCell>> out;
            std::function<void(std::size_t, DetCell)> rec = [&](std::size_t i, DetCell c) {
                const DetNode& n = nodes[i];
                if (n.leaf) {
                    out.emplace_back(i, std::move(c));
                    return;
                }
                DetCell l = c, r = c;
                Formula cond = split_condition(n);
                l.path.push_back(cond);
                r.path.push_back(!cond);
                if (features[n.feature].var.is_boolean()) {
                    l.fixed[n.feature] = true;
                    r.fixed[n.feature] = false;
                } else {
                    l.hi[n.feature] = std::min(l.hi[n.feature], n.threshold);
                    r.lo[n.feature] = std::max(r.lo[n.feature], n.threshold);
                }
                rec(n.left, std::move(l));
                rec(n.right, std::move(r));
            };
            rec(0, root);
            return out;
        }

        /** Lebesgue × counting measure of a cell. */
        Rational volume(const DetCell& c) const
        {
            Rational v = 1;
            for (std::size_t j = 0; j < features.size(); ++j) {
                if (features[j].var.is_boolean())
                    v *= c.fixed[j] ? 1 : 2;
                else
                    v *= c.hi[j] > c.lo[j] ? Rational(c.hi[j] - c.lo[j]) : Rational(0);
            }
            return v;
        }

        /** Leaf index reached by a point. Points outside the box follow the splits. */
        std::size_t leaf_of(Valuation& point) const
        {
            std::size_t i = 0;
            while (!nodes[i].leaf)
                i = evaluate(split_condition(nodes[i]), point) ? nodes[i].left : nodes[i].right;
            return i;
        }

        /** Leaf density: leaf mass over leaf cell volume, for every node index. */
        std::vector<Rational> leaf_densities() const
        {
            std::vector<Rational> d(nodes.size());
            for (const auto& [i, c] : cells()) {
                Rational v = volume(c);
                if (v == 0)
                    throw ModelError("density tree leaf with zero-volume cell");
                d[i] = nodes[i].mass / v;
            }
            return d;
        }

        /** Density at a point inside the box; 0 outside. */
        Rational density(Valuation& point) const
        {
            for (const auto& f : features)
                if (f.var.is_real()) {
                    Rational x = point.real(f.var);
                    if (x < f.lo || x > f.hi)
                        return 0;
                }
            return leaf_densities()[leaf_of(point)];
        }

        /** Bounding box of the real features, with b ∨ ¬b for boolean ones. */
        Formula support() const
        {
            std::vector<Formula> parts;
            for (const auto& f : features) {
                if (f.var.is_real())
                    parts.push_back(interval(f.var, f.lo, f.hi));
                else
                    parts.push_back(Formula::variable(f.var) || !Formula::variable(f.var));
            }
            return Formula::conjunction(parts);
        }

        Box box() const
        {
            Box b;
            for (const auto& f : features)
                if (f.var.is_real())
                    b.set(f.var, Interval::closed(f.lo, f.hi));
            return b;
        }
};

/** Ite DAG with leaf densities as constants; support = bounding box. */
inline WeightDag encode_det_weight(const DensityTree& t)
{
    t.validate();
    std::vector<Rational> density = t.leaf_densities();
    std::function<WeightDag(std::size_t)> rec = [&](std::size_t i) -> WeightDag {
        const DetNode& n = t.nodes[i];
        if (n.leaf)
            return WeightDag(density[i]);
        return WeightDag::ite(t.split_condition(n), rec(n.left), rec(n.right));
    };
    return rec(0).with_support(t.support());
}

/** Real ite term evaluating to the tree's leaf density. */
inline Term det_density_term(const DensityTree& t)
{
    t.validate();
    std::vector<Rational> density = t.leaf_densities();
    std::function<Term(std::size_t)> rec = [&](std::size_t i) -> Term {
        const DetNode& n = t.nodes[i];
        if (n.leaf)
            return Term(density[i]);
        return Term::ite(t.split_condition(n), rec(n.left), rec(n.right));
    };
    return rec(0);
}

/** Distinct split conditions of a tree. */
inline std::vector<Formula> det_split_conditions(const DensityTree& t)
{
    std::vector<Formula> out;
    std::unordered_set<const FormulaNode*> seen;
    for (const auto& n : t.nodes)
        if (!n.leaf) {
            Formula c = t.split_condition(n);
            bool dup = false;
            for (const auto& o : out)
                if (o.kind() == FormulaKind::atom && c.kind() == FormulaKind::atom && o.atom() == c.atom())
                    dup = true;
            if (!dup)
                out.push_back(c);
        }
    return out;
}

// ---------------------------------------------------------------- ReLU networks

enum class Activation { relu, identity };

struct Layer
{
    /** weights[i][j]: input j to unit i. */
    std::vector<std::vector<Rational>> weights;
    std::vector<Rational> bias;
    Activation activation = Activation::relu;
};

struct NeuralNet
{
    std::size_t input_dim = 0;
    std::vector<Layer> layers;

    void validate() const
    {
        if (layers.empty())
            throw ModelError("network without layers");
        std::size_t width = input_dim;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const Layer& layer = layers[l];
            if (layer.weights.empty() || layer.weights.size() != layer.bias.size())
                throw ModelError("layer " + std::to_string(l) + ": weight rows and bias length differ");
            for (const auto& row : layer.weights)
                if (row.size() != width)
                    throw ModelError("layer " + std::to_string(l) + ": expected " + std::to_string(width) + " inputs per unit, got " +
                                     std::to_string(row.size()));
            width = layer.weights.size();
        }
        if (width != 1)
            throw ModelError("network output is not scalar");
    }

    std::size_t unit_count() const
    {
        std::size_t n = 0;
        for (const auto& l : layers)
            n += l.weights.size();
        return n;
    }

    /** Exact logit. */
    Rational forward(const std::vector<Rational>& x) const
    {
        if (x.size() != input_dim)
            throw ArityError("network expects " + std::to_string(input_dim) + " inputs, got " + std::to_string(x.size()));
        std::vector<Rational> a = x;
        for (const auto& layer : layers) {
            std::vector<Rational> next(layer.weights.size());
            for (std::size_t i = 0; i < next.size(); ++i) {
                Rational h = layer.bias[i];
                for (std::size_t j = 0; j < a.size(); ++j)
                    h += layer.weights[i][j] * a[j];
                next[i] = layer.activation == Activation::relu && h <= 0 ? Rational(0) : h;
            }
            a = std::move(next);
        }
        return a[0];
    }

    bool classify(const std::vector<Rational>& x) const { return forward(x) >= 0; }
};

/**
 * Per unit: (h = w·x + b) ∧ (y = ite(h > 0, h, 0)) with the ite elaborated
 * into guarded equalities; identity units use y = h. Every unit contributes
 * the two defined variables h and y. Output f = y of the last unit.
 */
inline SystemEncoding encode_relu_nn(const NeuralNet& nn, const std::vector<Variable>& inputs, const std::string& prefix = "nn")
{
    nn.validate();
    if (inputs.size() != nn.input_dim)
        throw ArityError("network expects " + std::to_string(nn.input_dim) + " inputs, got " + std::to_string(inputs.size()));
    SystemEncoding sys;
    sys.inputs = inputs;
    std::vector<Variable> prev = inputs;
    std::vector<Formula> parts;
    for (std::size_t l = 0; l < nn.layers.size(); ++l) {
        const Layer& layer = nn.layers[l];
        std::vector<Variable> out;
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            LinearExpr pre(layer.bias[i]);
            for (std::size_t j = 0; j < prev.size(); ++j)
                pre.add(prev[j], layer.weights[i][j]);
            std::string tag = prefix + "." + std::to_string(l) + "." + std::to_string(i);
            Variable h = Variable::defined(tag + ".h", Term(pre));
            parts.push_back(eq(Term(h), Term(pre)));
            Variable y;
            if (layer.activation == Activation::relu) {
                Formula active = Term(h) > Term(0);
                y = Variable::defined(tag + ".y", Term::ite(active, Term(h), Term(0)));
                parts.push_back(Formula::implies(active, eq(Term(y), Term(h))));
                parts.push_back(Formula::implies(!active, eq(Term(y), Term(0))));
                sys.conditions.push_back(active);
            } else {
                y = Variable::defined(tag + ".y", Term(h));
                parts.push_back(eq(Term(y), Term(h)));
            }
            sys.introduced.push_back(h);
            sys.introduced.push_back(y);
            out.push_back(y);
        }
        prev = std::move(out);
    }
    sys.chi = Formula::conjunction(parts);
    sys.output = Term(prev[0]);
    sys.decision = *sys.output >= Term(0);
    return sys;
}

// ---------------------------------------------------------------- DET forests

/** c(x) ⟺ Σ_i DET_i^⊤(x) ≥ Σ_i DET_i^⊥(x). */
struct DetForestClassifier
{
    std::vector<DensityTree> positive, negative;

    void validate() const
    {
        if (positive.empty() || positive.size() != negative.size())
            throw ModelError("forest needs the same nonzero number of trees per class");
        for (const auto& t : positive)
            t.validate();
        for (const auto& t : negative)
            t.validate();
    }

    std::size_t size() const { return positive.size(); }

    /** Σ positive densities − Σ negative densities (leaf densities, no box cut-off). */
    Rational margin(Valuation& point) const
    {
        Rational m = 0;
        for (const auto& t : positive)
            m += t.leaf_densities()[t.leaf_of(point)];
        for (const auto& t : negative)
            m -= t.leaf_densities()[t.leaf_of(point)];
        return m;
    }

    bool classify(Valuation& point) const { return margin(point) >= 0; }
};

inline SystemEncoding encode_rf_classifier(const DetForestClassifier& rf, const std::vector<Variable>& inputs)
{
    rf.validate();
    SystemEncoding sys;
    sys.inputs = inputs;
    Term pos(0), neg(0);
    for (const auto& t : rf.positive)
        pos = pos + det_density_term(t);
    for (const auto& t : rf.negative)
        neg = neg + det_density_term(t);
    sys.output = pos - neg;
    sys.decision = pos >= neg;
    std::unordered_set<Atom, AtomHash> have;
    auto add = [&](const DensityTree& t) {
        for (const auto& c : det_split_conditions(t))
            if (c.kind() != FormulaKind::atom || have.insert(c.atom()).second)
                sys.conditions.push_back(c);
    };
    for (std::size_t i = 0; i < rf.size(); ++i) {
        add(rf.positive[i]);
        add(rf.negative[i]);
    }
    return sys;
}

// ---------------------------------------------------------------- SPNs

/** Polynomial density on [lo, hi]. */
struct SpnPiece
{
    Rational lo, hi;
    Polynomial density;
};

enum class SpnKind { sum, product, leaf };

struct Spn
{
    SpnKind kind = SpnKind::leaf;
    /** Sum: mixture weights; product: ignored. */
    std::vector<Rational> weights;
    std::vector<Spn> children;
    /** Leaf variable and pieces. */
    Variable var;
    std::vector<SpnPiece> pieces;

    static Spn leaf(const Variable& v, std::vector<SpnPiece> pieces)
    {
        Spn s;
        s.kind = SpnKind::leaf;
        s.var = v;
        s.pieces = std::move(pieces);
        return s;
    }
    static Spn uniform(const Variable& v, const Rational& lo, const Rational& hi)
    {
        if (!(lo < hi))
            throw EmptyIntervalError("uniform leaf over an empty interval");
        return leaf(v, {SpnPiece{lo, hi, Polynomial(Rational(1) / (hi - lo))}});
    }
    static Spn sum(std::vector<Rational> weights, std::vector<Spn> children)
    {
        Spn s;
        s.kind = SpnKind::sum;
        s.weights = std::move(weights);
        s.children = std::move(children);
        return s;
    }
    static Spn product(std::vector<Spn> children)
    {
        Spn s;
        s.kind = SpnKind::product;
        s.children = std::move(children);
        return s;
    }

    /** Variables in scope. */
    std::vector<Variable> scope() const
    {
        if (kind == SpnKind::leaf)
            return {var};
        std::vector<Variable> out;
        VariableSet seen;
        for (const auto& c : children)
            for (const auto& v : c.scope())
                if (seen.insert(v).second)
                    out.push_back(v);
        return out;
    }

    Rational density(Valuation& point) const
    {
        switch (kind) {
            case SpnKind::leaf: {
                Rational x = point.real(var);
                for (const auto& p : pieces)
                    if (p.lo <= x && x <= p.hi)
                        return p.density.evaluate(point);
                return 0;
            }
            case SpnKind::sum: {
                Rational s = 0;
                for (std::size_t i = 0; i < children.size(); ++i)
                    s += weights[i] * children[i].density(point);
                return s;
            }
            case SpnKind::product: {
                Rational p = 1;
                for (const auto& c : children)
                    p *= c.density(point);
                return p;
            }
        }
        return 0;
    }
};

/**
 * Sum/product DAG. Mixture components over different supports are gated by
 * their own support; sum supports are disjunctions, product supports
 * conjunctions.
 */
inline WeightDag encode_spn(const Spn& s)
{
    switch (s.kind) {
        case SpnKind::leaf: {
            if (!s.var.is_real())
                throw ModelError("SPN leaf over non-real variable '" + s.var.name() + "'");
            if (s.pieces.empty())
                throw ModelError("SPN leaf without pieces");
            std::vector<WeightDag> parts;
            Rational lo = s.pieces[0].lo, hi = s.pieces[0].hi;
            for (const auto& p : s.pieces) {
                if (!(p.lo < p.hi))
                    throw ModelError("SPN leaf piece with empty interval");
                for (const auto& v : p.density.variables())
                    if (v != s.var)
                        throw ModelError("SPN leaf piece mentions variable '" + v.name() + "' outside its scope");
                lo = std::min(lo, p.lo);
                hi = std::max(hi, p.hi);
                parts.push_back(WeightDag::ite(interval(s.var, p.lo, p.hi), p.density, 0));
            }
            WeightDag w = (s.pieces.size() == 1 ? WeightDag(s.pieces[0].density) : WeightDag::sum(parts))
                              .with_support(interval(s.var, lo, hi));
            if (wmi(Formula::top(), w).value != 1)
                throw ModelError("SPN leaf over '" + s.var.name() + "' does not integrate to 1");
            return w;
        }
        case SpnKind::sum: {
            if (s.children.empty() || s.children.size() != s.weights.size())
                throw ModelError("SPN sum node needs one weight per child");
            Rational total = 0;
            std::vector<WeightDag> parts;
            std::vector<Formula> supports;
            for (std::size_t i = 0; i < s.children.size(); ++i) {
                if (s.weights[i] < 0)
                    throw ModelError("negative SPN sum weight");
                total += s.weights[i];
                WeightDag c = encode_spn(s.children[i]);
                supports.push_back(c.support());
                parts.push_back(c.scaled(s.weights[i]));
            }
            if (total != 1)
                throw ModelError("SPN sum weights add to " + to_string(total) + ", not 1");
            bool shared = true;
            for (const auto& chi : supports)
                shared &= chi.node() == supports[0].node();
            if (shared)
                return WeightDag::sum(parts).with_support(supports[0]);
            // each component vanishes outside its own support
            for (std::size_t i = 0; i < parts.size(); ++i)
                parts[i] = WeightDag::ite(supports[i], parts[i], 0);
            return WeightDag::sum(parts).with_support(Formula::disjunction(supports));
        }
        case SpnKind::product: {
            if (s.children.empty())
                throw ModelError("SPN product node without children");
            VariableSet seen;
            std::vector<WeightDag> parts;
            for (const auto& c : s.children) {
                for (const auto& v : c.scope())
                    if (!seen.insert(v).second)
                        throw ModelError("SPN product children share variable '" + v.name() + "'");
                parts.push_back(encode_spn(c));
            }
            return WeightDag::product(parts);
        }
    }
    return {};
}

// ---------------------------------------------------------------- ensembles

enum class Aggregation { majority, average };

/**
 * Conjoined member supports plus the aggregation: majority counts 0/1 ite
 * votes (ties go to ⊤), average takes the mean output.
 */
inline SystemEncoding encode_ensemble(const std::vector<SystemEncoding>& members, Aggregation aggregation)
{
    if (members.empty())
        throw ModelError("empty ensemble");
    SystemEncoding sys;
    sys.inputs = members[0].inputs;
    std::vector<Formula> chis;
    std::vector<WeightDag> weights;
    std::unordered_set<const FormulaNode*> have;
    for (const auto& m : members) {
        if (m.inputs != sys.inputs)
            throw ArityError("ensemble members read different inputs");
        chis.push_back(m.chi);
        weights.push_back(m.weight);
        sys.introduced.insert(sys.introduced.end(), m.introduced.begin(), m.introduced.end());
        for (const auto& c : m.conditions)
            if (have.insert(c.node()).second)
                sys.conditions.push_back(c);
    }
    sys.chi = Formula::conjunction(chis);
    sys.weight = WeightDag::product(weights);
    Rational k(static_cast<long>(members.size()));
    switch (aggregation) {
        case Aggregation::majority: {
            Term votes(0);
            for (const auto& m : members)
                votes = votes + Term::ite(m.decision, Term(1), Term(0));
            sys.output = votes;
            sys.decision = Rational(2) * votes >= Term(k);
            break;
        }
        case Aggregation::average: {
            Term total(0);
            for (const auto& m : members) {
                if (!m.output)
                    throw UnsupportedError("average aggregation needs real member outputs");
                total = total + *m.output;
            }
            sys.output = (Rational(1) / k) * total;
            sys.decision = *sys.output >= Term(0);
            break;
        }
    }
    return sys;
}

} // namespace wmipfv

#endif

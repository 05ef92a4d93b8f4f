/**
 * Model training: greedy density estimation trees and a small SGD trainer for
 * ReLU binary classifiers. Training runs in floating point; the resulting
 * models carry exact rational parameters.
 */
#ifndef WMIPFV_TRAINING_HPP
#define WMIPFV_TRAINING_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "models.hpp"

namespace wmipfv {

/** Row-major numeric data; boolean columns hold 0/1. */
using Matrix = std::vector<std::vector<double>>;

/**
 * The decimal with the fewest digits strictly between a and b (a < b),
 * closest to their midpoint among those.
 */
inline Rational decimal_between(double a, double b)
{
    if (!(a < b))
        throw Error("decimal_between needs a < b");
    double mid = a + (b - a) / 2;
    Rational ra = from_double(a), rb = from_double(b);
    for (int digits = 0; digits <= 17; ++digits) {
        Rational scale = 1;
        for (int i = 0; i < digits; ++i)
            scale *= 10;
        double s = to_double(scale);
        std::optional<Rational> best;
        Rational rmid = from_double(mid);
        for (double cand : {std::floor(mid * s), std::ceil(mid * s), std::floor(mid * s) - 1, std::ceil(mid * s) + 1}) {
            Rational r = Rational(static_cast<long long>(cand)) / scale;
            if (ra < r && r < rb && (!best || abs(r - rmid) < abs(*best - rmid)))
                best = r;
        }
        if (best)
            return *best;
    }
    return (ra + rb) / 2;
}

struct DetTrainingOptions
{
    std::size_t n_min = 1000, n_max = 2000;
    /** Boolean feature the root splits on regardless of gain. */
    std::optional<std::size_t> root_feature;
};

namespace detail {

struct DetBuild
{
    const Matrix& data;
    const std::vector<Variable>& vars;
    std::size_t total;
    std::size_t n_min, n_max;
    std::optional<std::size_t> root_feature;
    DensityTree tree;

    void partition(const std::vector<std::size_t>& rows, std::size_t feature, const Rational& threshold, std::vector<std::size_t>& left,
                   std::vector<std::size_t>& right) const
    {
        left.clear();
        right.clear();
        for (auto r : rows) {
            bool l = vars[feature].is_boolean() ? data[r][feature] != 0 : from_double(data[r][feature]) <= threshold;
            (l ? left : right).push_back(r);
        }
    }

    /** Best split of `rows` in the cell (lo, hi, fixed); returns false when none is admissible. */
    bool best_split(const std::vector<std::size_t>& rows, const DetCell& cell, std::size_t& feature, Rational& threshold,
                    std::vector<std::size_t>& left, std::vector<std::size_t>& right)
    {
        double n = static_cast<double>(rows.size());
        double vol = to_double(tree.volume(cell));
        double base = n * n / vol;
        double best = 0;
        bool found = false;
        double cut_lo = 0, cut_hi = 0;
        for (std::size_t j = 0; j < vars.size(); ++j) {
            if (vars[j].is_boolean()) {
                if (cell.fixed[j])
                    continue;
                std::size_t ones = 0;
                for (auto r : rows)
                    ones += data[r][j] != 0;
                std::size_t zeros = rows.size() - ones;
                if (ones < n_min || zeros < n_min)
                    continue;
                double gain = (double(ones) * double(ones) + double(zeros) * double(zeros)) / (vol / 2) - base;
                if (!found || gain > best) {
                    found = true;
                    best = gain;
                    feature = j;
                    threshold = 0;
                }
                continue;
            }
            std::vector<double> values;
            values.reserve(rows.size());
            for (auto r : rows)
                values.push_back(data[r][j]);
            std::sort(values.begin(), values.end());
            double lo = to_double(cell.lo[j]), hi = to_double(cell.hi[j]);
            double width = hi - lo;
            // candidate split between values[i-1] and values[i]
            for (std::size_t i = n_min; i + n_min <= values.size(); ++i) {
                if (values[i - 1] == values[i])
                    continue;
                double t = values[i - 1] + (values[i] - values[i - 1]) / 2;
                double vl = vol * (t - lo) / width, vr = vol * (hi - t) / width;
                if (vl <= 0 || vr <= 0)
                    continue;
                double nl = double(i), nr = double(values.size() - i);
                double gain = nl * nl / vl + nr * nr / vr - base;
                if (!found || gain > best) {
                    found = true;
                    best = gain;
                    feature = j;
                    cut_lo = values[i - 1];
                    cut_hi = values[i];
                }
            }
        }
        if (!found)
            return false;
        if (vars[feature].is_real())
            threshold = decimal_between(cut_lo, cut_hi);
        partition(rows, feature, threshold, left, right);
        return true;
    }

    std::size_t grow(std::vector<std::size_t> rows, DetCell cell)
    {
        std::size_t index = tree.nodes.size();
        tree.nodes.emplace_back();
        std::size_t feature = 0;
        Rational threshold;
        std::vector<std::size_t> left, right;
        bool split = false;
        if (index == 0 && root_feature) {
            feature = *root_feature;
            partition(rows, feature, threshold, left, right);
            split = !left.empty() && !right.empty();
        } else {
            split = rows.size() > n_max && best_split(rows, cell, feature, threshold, left, right);
        }
        if (split) {
            DetCell lc = cell, rc = cell;
            if (vars[feature].is_boolean()) {
                lc.fixed[feature] = true;
                rc.fixed[feature] = false;
            } else {
                lc.hi[feature] = threshold;
                rc.lo[feature] = threshold;
            }
            rows.clear();
            std::size_t l = grow(std::move(left), std::move(lc));
            std::size_t r = grow(std::move(right), std::move(rc));
            DetNode& node = tree.nodes[index];
            node.leaf = false;
            node.feature = feature;
            node.threshold = threshold;
            node.left = l;
            node.right = r;
        } else {
            tree.nodes[index].mass = Rational(static_cast<long>(rows.size())) / Rational(static_cast<long>(total));
        }
        return index;
    }
};

} // namespace detail

/**
 * Greedy top-down DET: a leaf with more than n_max rows is split at the
 * admissible split (both sides ≥ n_min rows) of maximal ISE gain
 * n_l²/V_l + n_r²/V_r − n²/V; ties keep the lowest feature, then the lowest
 * threshold. Real thresholds are short decimals strictly between adjacent
 * distinct values. The bounding box is the integer hull of the data. With
 * `root_feature` the root splits on that boolean unconditionally.
 */
inline DensityTree train_det(const Matrix& data, const std::vector<Variable>& vars, const DetTrainingOptions& options = {})
{
    if (data.empty())
        throw ModelError("cannot train a density tree on empty data");
    if (!(options.n_min < options.n_max))
        throw ModelError("n_min must be smaller than n_max");
    for (const auto& row : data)
        if (row.size() != vars.size())
            throw ArityError("row width differs from the number of features");
    if (options.root_feature && (*options.root_feature >= vars.size() || !vars[*options.root_feature].is_boolean()))
        throw ModelError("forced root split needs a boolean feature");
    detail::DetBuild b{data, vars, data.size(), std::max<std::size_t>(options.n_min, 1), options.n_max, options.root_feature, {}};
    DetCell root;
    for (std::size_t j = 0; j < vars.size(); ++j) {
        DetFeature f{vars[j], 0, 0};
        if (vars[j].is_real()) {
            double lo = data[0][j], hi = data[0][j];
            for (const auto& row : data) {
                lo = std::min(lo, row[j]);
                hi = std::max(hi, row[j]);
            }
            f.lo = Rational(static_cast<long long>(std::floor(lo)));
            f.hi = Rational(static_cast<long long>(std::ceil(hi)));
            if (f.hi <= f.lo)
                f.hi = f.lo + 1;
        }
        b.tree.features.push_back(f);
        root.lo.push_back(f.lo);
        root.hi.push_back(f.hi);
        root.fixed.push_back(std::nullopt);
    }
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    b.grow(std::move(rows), std::move(root));
    return std::move(b.tree);
}

inline DensityTree train_det(const Matrix& data, const std::vector<Variable>& vars, std::size_t n_min, std::size_t n_max)
{
    return train_det(data, vars, DetTrainingOptions{n_min, n_max, std::nullopt});
}

/** One DET per class per disjoint chunk of the data, K chunks. */
inline DetForestClassifier train_det_forest(const Matrix& data, const std::vector<int>& labels, const std::vector<Variable>& vars,
                                            std::size_t k, const DetTrainingOptions& options)
{
    if (data.size() != labels.size())
        throw ArityError("labels and rows differ in number");
    if (k == 0)
        throw ModelError("forest needs at least one tree per class");
    DetForestClassifier rf;
    for (std::size_t i = 0; i < k; ++i) {
        Matrix pos, neg;
        for (std::size_t r = i; r < data.size(); r += k)
            (labels[r] ? pos : neg).push_back(data[r]);
        rf.positive.push_back(train_det(pos, vars, options));
        rf.negative.push_back(train_det(neg, vars, options));
    }
    return rf;
}

struct NetTrainingOptions
{
    std::vector<std::size_t> hidden{8, 8};
    std::size_t epochs = 100;
    std::size_t batch = 200;
    double learning_rate = 0.005;
    std::uint64_t seed = 0;
    /** Standardize inputs during training; the scaling is folded into the first layer. */
    bool standardize = true;
};

/**
 * Mini-batch SGD on binary cross-entropy of a ReLU network with a linear
 * logit output. Parameters are rounded to single precision and converted
 * exactly.
 */
inline NeuralNet train_relu_net(const Matrix& x, const std::vector<int>& y, const NetTrainingOptions& options = {})
{
    if (x.empty() || x.size() != y.size())
        throw ModelError("training data is empty or labels are missing");
    std::size_t dim = x[0].size();
    std::mt19937_64 rng(options.seed);

    std::vector<double> mean(dim, 0), scale(dim, 1);
    if (options.standardize) {
        for (const auto& r : x)
            for (std::size_t j = 0; j < dim; ++j)
                mean[j] += r[j];
        for (auto& m : mean)
            m /= double(x.size());
        std::vector<double> var(dim, 0);
        for (const auto& r : x)
            for (std::size_t j = 0; j < dim; ++j)
                var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
        for (std::size_t j = 0; j < dim; ++j) {
            scale[j] = std::sqrt(var[j] / double(x.size()));
            if (scale[j] == 0)
                scale[j] = 1;
        }
    }

    std::vector<std::size_t> widths{dim};
    widths.insert(widths.end(), options.hidden.begin(), options.hidden.end());
    widths.push_back(1);
    std::size_t nl = widths.size() - 1;
    std::vector<std::vector<std::vector<double>>> w(nl);
    std::vector<std::vector<double>> b(nl);
    for (std::size_t l = 0; l < nl; ++l) {
        std::normal_distribution<double> init(0, std::sqrt(2.0 / double(widths[l])));
        w[l].assign(widths[l + 1], std::vector<double>(widths[l]));
        for (auto& row : w[l])
            for (auto& v : row)
                v = init(rng);
        b[l].assign(widths[l + 1], 0);
    }

    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::vector<double>> act(nl + 1), pre(nl), delta(nl);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += options.batch) {
            std::size_t end = std::min(order.size(), start + options.batch);
            auto gw = w;
            auto gb = b;
            for (auto& m : gw)
                for (auto& row : m)
                    std::fill(row.begin(), row.end(), 0.0);
            for (auto& v : gb)
                std::fill(v.begin(), v.end(), 0.0);
            for (std::size_t s = start; s < end; ++s) {
                const auto& row = x[order[s]];
                act[0].resize(dim);
                for (std::size_t j = 0; j < dim; ++j)
                    act[0][j] = (row[j] - mean[j]) / scale[j];
                for (std::size_t l = 0; l < nl; ++l) {
                    pre[l].assign(widths[l + 1], 0);
                    act[l + 1].assign(widths[l + 1], 0);
                    for (std::size_t i = 0; i < widths[l + 1]; ++i) {
                        double h = b[l][i];
                        for (std::size_t j = 0; j < widths[l]; ++j)
                            h += w[l][i][j] * act[l][j];
                        pre[l][i] = h;
                        act[l + 1][i] = l + 1 == nl ? h : std::max(h, 0.0);
                    }
                }
                double p = 1 / (1 + std::exp(-act[nl][0]));
                delta[nl - 1] = {p - double(y[order[s]] != 0)};
                for (std::size_t l = nl; l-- > 0;) {
                    for (std::size_t i = 0; i < widths[l + 1]; ++i) {
                        gb[l][i] += delta[l][i];
                        for (std::size_t j = 0; j < widths[l]; ++j)
                            gw[l][i][j] += delta[l][i] * act[l][j];
                    }
                    if (l == 0)
                        break;
                    delta[l - 1].assign(widths[l], 0);
                    for (std::size_t j = 0; j < widths[l]; ++j) {
                        if (pre[l - 1][j] <= 0)
                            continue;
                        double g = 0;
                        for (std::size_t i = 0; i < widths[l + 1]; ++i)
                            g += w[l][i][j] * delta[l][i];
                        delta[l - 1][j] = g;
                    }
                }
            }
            double step = options.learning_rate / double(end - start);
            for (std::size_t l = 0; l < nl; ++l)
                for (std::size_t i = 0; i < widths[l + 1]; ++i) {
                    b[l][i] -= step * gb[l][i];
                    for (std::size_t j = 0; j < widths[l]; ++j)
                        w[l][i][j] -= step * gw[l][i][j];
                }
        }
    }

    // fold standardization into the first layer: w' = w/σ, b' = b − Σ w·μ/σ
    for (std::size_t i = 0; i < widths[1]; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            b[0][i] -= w[0][i][j] * mean[j] / scale[j];
            w[0][i][j] /= scale[j];
        }

    auto exact = [](double v) { return from_double(static_cast<double>(static_cast<float>(v))); };
    NeuralNet nn;
    nn.input_dim = dim;
    for (std::size_t l = 0; l < nl; ++l) {
        Layer layer;
        layer.activation = l + 1 == nl ? Activation::identity : Activation::relu;
        for (std::size_t i = 0; i < widths[l + 1]; ++i) {
            std::vector<Rational> row;
            for (std::size_t j = 0; j < widths[l]; ++j)
                row.push_back(exact(w[l][i][j]));
            layer.weights.push_back(std::move(row));
            layer.bias.push_back(exact(b[l][i]));
        }
        nn.layers.push_back(std::move(layer));
    }
    return nn;
}

/** Fraction of rows the network labels correctly (double-precision inference). */
inline double accuracy(const NeuralNet& nn, const Matrix& x, const std::vector<int>& y)
{
    std::size_t ok = 0;
    for (std::size_t r = 0; r < x.size(); ++r) {
        std::vector<double> a = x[r];
        for (const auto& layer : nn.layers) {
            std::vector<double> next(layer.weights.size());
            for (std::size_t i = 0; i < next.size(); ++i) {
                double h = to_double(layer.bias[i]);
                for (std::size_t j = 0; j < a.size(); ++j)
                    h += to_double(layer.weights[i][j]) * a[j];
                next[i] = layer.activation == Activation::relu ? std::max(h, 0.0) : h;
            }
            a = std::move(next);
        }
        ok += (a[0] >= 0) == (y[r] != 0);
    }
    return double(ok) / double(x.size());
}

} // namespace wmipfv

#endif

/**
 * Experiment drivers shared by the CLI and the acceptance binary: the
 * synthetic local-robustness benchmark and the income fairness study.
 */
#ifndef WMIPFV_BENCH_HPP
#define WMIPFV_BENCH_HPP

#include <chrono>

#include "generators.hpp"

namespace wmipfv {

struct BenchmarkConfig
{
    std::size_t n_inputs = 3, m = 10;
    std::vector<std::size_t> hidden{8, 8, 8};
    std::size_t forest_k = 5;
    std::size_t n_prior = 10000, n_train = 10000, n_test = 1000;
    DetTrainingOptions prior_det{1000, 2000, std::nullopt};
    DetTrainingOptions forest_det{100, 200, std::nullopt};
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
};

struct BenchmarkModels
{
    SyntheticBenchmark truth;
    Dataset prior_data, train, test;
    std::vector<Variable> inputs;
    DensityTree prior_tree;
    WeightDag prior;
    NeuralNet nn;
    DetForestClassifier forest;
    double nn_accuracy = 0, forest_accuracy = 0;
};

inline double forest_accuracy(const DetForestClassifier& rf, const std::vector<Variable>& inputs, const Matrix& x, const std::vector<int>& y)
{
    std::size_t ok = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Valuation v;
        for (std::size_t j = 0; j < inputs.size(); ++j)
            v.set(inputs[j], from_double(x[i][j]));
        ok += rf.classify(v) == (y[i] != 0);
    }
    return x.empty() ? 0.0 : double(ok) / double(x.size());
}

/** Ground truth, datasets, the DET prior, the ReLU net and the DET forest, all from one seed. */
inline BenchmarkModels build_benchmark(const BenchmarkConfig& cfg)
{
    BenchmarkModels b;
    b.truth = gen_synthetic_benchmark(cfg.n_inputs, cfg.m, cfg.n_prior, cfg.seed);
    b.prior_data = b.truth.data;
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    b.train = sample_benchmark(b.truth.m1, b.truth.m2, cfg.n_train, rng);
    b.test = sample_benchmark(b.truth.m1, b.truth.m2, cfg.n_test, rng);
    for (std::size_t i = 0; i < cfg.n_inputs; ++i)
        b.inputs.push_back(Variable::real("x" + std::to_string(i)));
    std::vector<std::size_t> cols(cfg.n_inputs);
    std::iota(cols.begin(), cols.end(), 0);
    b.prior_tree = train_det(b.prior_data.columns(cols), b.inputs, cfg.prior_det);
    b.prior = encode_det_weight(b.prior_tree);
    Matrix x = b.train.columns(cols);
    std::vector<int> y = b.train.labels(cfg.n_inputs);
    NetTrainingOptions no;
    no.hidden = cfg.hidden;
    no.epochs = cfg.epochs;
    no.seed = cfg.seed;
    b.nn = train_relu_net(x, y, no);
    b.forest = train_det_forest(x, y, b.inputs, cfg.forest_k, cfg.forest_det);
    Matrix tx = b.test.columns(cols);
    std::vector<int> ty = b.test.labels(cfg.n_inputs);
    b.nn_accuracy = accuracy(b.nn, tx, ty);
    b.forest_accuracy = forest_accuracy(b.forest, b.inputs, tx, ty);
    return b;
}

/** Test point i rounded to `digits` decimals. */
inline std::vector<Rational> benchmark_point(const BenchmarkModels& b, std::size_t i, int digits = 2)
{
    std::vector<Rational> x;
    for (std::size_t j = 0; j < b.inputs.size(); ++j)
        x.push_back(round_decimal(b.test.rows[i][j], digits));
    return x;
}

struct RobustnessRow
{
    std::string system;
    std::size_t point = 0;
    Rational eps;
    std::vector<Rational> x0;
    bool c0 = false;
    RobustnessResult result;
};

/** Decision of an encoded system at an input point. */
inline bool decision_at(const SystemEncoding& sys, const std::vector<Rational>& x)
{
    Valuation v;
    for (std::size_t i = 0; i < x.size(); ++i)
        v.set(sys.inputs[i], x[i]);
    return evaluate(sys.decision, v);
}

/** Local-robustness task of `sys` at x0 with the label it predicts there. */
inline PropertyEncoding robustness_task(const SystemEncoding& sys, const std::vector<Rational>& x0, const Rational& eps, const WeightDag& prior,
                                        Norm norm = Norm::linf)
{
    return local_robustness(sys, x0, decision_at(sys, x0), eps, prior, norm);
}

inline std::string csv_header_robustness()
{
    return "system,point,eps,x0,c0,class,violation,violation_float,complete,partitions_solved,assignments,integrations,search_nodes,seconds";
}

inline std::string csv_row(const RobustnessRow& r)
{
    std::string x;
    for (std::size_t i = 0; i < r.x0.size(); ++i)
        x += (i ? " " : "") + to_string(r.x0[i]);
    std::ostringstream ss;
    ss << r.system << "," << r.point << "," << to_string(r.eps) << "," << x << "," << (r.c0 ? 1 : 0) << "," << to_string(r.result.cls) << ","
       << to_string(r.result.violation) << "," << to_double(r.result.violation) << "," << (r.result.complete ? 1 : 0) << ","
       << r.result.partitions_solved << "," << r.result.counters.assignments << "," << r.result.counters.integrations << ","
       << r.result.counters.search_nodes << "," << r.result.seconds;
    return ss.str();
}

// ---------------------------------------------------------------- income study

struct IncomeRun
{
    bool biased = false;
    std::uint64_t seed = 0;
    double accuracy = 0;
    std::size_t prior_leaves = 0;
    ParityResult parity;
    double seconds = 0;
};

struct IncomeStudyOptions
{
    NetTrainingOptions net;
    DetTrainingOptions det{1000, 2000, std::nullopt};
    /** Root split of the population DET on the protected attribute. */
    bool split_protected = true;
    bool bound_propagation = true;
};

/** Variables of the income population in dataset column order female, hpw, yexp, hw. */
struct IncomeVariables
{
    Variable female = Variable::boolean("female");
    Variable hpw = Variable::real("hpw");
    Variable yexp = Variable::real("yexp");
    Variable hw = Variable::real("hw");

    /** Classifier inputs (hpw, hw, yexp). */
    std::vector<Variable> inputs() const { return {hpw, hw, yexp}; }
};

/** Trains the population DET and the 2×8 classifier on one generated population, then computes parity. */
inline IncomeRun income_parity_run(bool biased, std::uint64_t seed, const IncomeStudyOptions& options = {})
{
    auto start = std::chrono::steady_clock::now();
    IncomeConfig cfg;
    cfg.biased = biased;
    cfg.seed = seed;
    IncomeData d = gen_income_data(cfg);
    IncomeVariables v;
    DetTrainingOptions det = options.det;
    if (options.split_protected)
        det.root_feature = 0;
    DensityTree prior = train_det(d.prior_train.columns({0, 1, 2, 3}), {v.female, v.hpw, v.yexp, v.hw}, det);
    NetTrainingOptions net = options.net;
    net.seed = seed;
    NeuralNet nn = train_relu_net(d.system_train.columns({1, 3, 2}), d.system_train.labels(4), net);
    IncomeRun run;
    run.biased = biased;
    run.seed = seed;
    run.accuracy = accuracy(nn, d.test.columns({1, 3, 2}), d.test.labels(4));
    run.prior_leaves = prior.leaf_count();
    run.parity = demographic_parity(encode_relu_nn(nn, v.inputs()), Formula::variable(v.female), encode_det_weight(prior),
                                    options.bound_propagation);
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

/** Income proxy 48·hpw·hw linearized as hpw + hw + yexp/10 through a ReLU layer; monotone in every input. */
inline NeuralNet monotone_income_regressor()
{
    NeuralNet nn;
    nn.input_dim = 3;
    nn.layers.push_back({{{1, 0, 0}, {0, 1, 0}, {0, 0, Rational(1, 10)}}, {0, 0, 0}, Activation::relu});
    nn.layers.push_back({{{1, 1, 1}}, {-40}, Activation::identity});
    return nn;
}

} // namespace wmipfv

#endif

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <wmipfv/wmipfv.hpp>

#include "fixtures.hpp"

using namespace wmipfv;

namespace {

const std::filesystem::path samples_dir = std::filesystem::path(WMIPFV_SOURCE_DIR) / "samples";

std::string parse_error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

/** Welch statistic of column `col` between rows with the boolean column `group` set and unset. */
double welch(const Dataset& d, std::size_t group, std::size_t col, double& mean_in, double& mean_out)
{
    double s[2] = {0, 0}, sq[2] = {0, 0}, n[2] = {0, 0};
    for (const auto& r : d.rows) {
        int g = r[group] != 0;
        s[g] += r[col];
        sq[g] += r[col] * r[col];
        n[g] += 1;
    }
    double m[2], v[2];
    for (int g = 0; g < 2; ++g) {
        m[g] = s[g] / n[g];
        v[g] = (sq[g] - n[g] * m[g] * m[g]) / (n[g] - 1);
    }
    mean_in = m[1];
    mean_out = m[0];
    return (m[1] - m[0]) / std::sqrt(v[1] / n[1] + v[0] / n[0]);
}

} // namespace

// ---------------------------------------------------------------- s-expressions

TEST(SExpr, PrintedFormulasParseBack)
{
    std::mt19937_64 rng(11);
    std::vector<Variable> reals{Variable::real("x"), Variable::real("y"), Variable::real("z")};
    std::vector<Variable> bools{Variable::boolean("A"), Variable::boolean("B")};
    for (int i = 0; i < 200; ++i) {
        Formula f = fixtures::random_formula(rng, reals, bools, 3);
        SymbolTable symbols;
        for (const auto& v : reals)
            symbols.add(v);
        for (const auto& v : bools)
            symbols.add(v);
        Formula g = parse_formula(to_string(f), symbols);
        EXPECT_EQ(to_string(g), to_string(f));
    }
}

TEST(SExpr, WeightsRoundTripWithTheSameIntegral)
{
    std::mt19937_64 rng(12);
    for (int i = 0; i < 20; ++i) {
        fixtures::RandomProblem p = fixtures::random_problem(rng, 2, 1, 4, 2);
        SymbolTable symbols;
        for (const auto& v : p.reals)
            symbols.add(v);
        for (const auto& v : p.bools)
            symbols.add(v);
        std::string text = emit_weight(p.weight);
        WeightDag back = parse_weight(text, symbols);
        EXPECT_EQ(emit_weight(back), text);
        Formula delta = parse_formula(to_string(p.delta), symbols);
        EXPECT_EQ(wmi(delta, back).value, wmi(p.delta, p.weight).value);
    }
}

TEST(SExpr, TermsAndPolynomials)
{
    SymbolTable s;
    Term t = parse_term("(+ (* 2 x) (- y) 1/2 (ite (< x 0) 3 (* y -1)))", s);
    Valuation v;
    v.set(s.require("x"), Rational(-1));
    v.set(s.require("y"), Rational(4));
    EXPECT_EQ(evaluate(t, v), Rational(-2 - 4, 1) + Rational(1, 2) + 3);
    Polynomial p = parse_polynomial("(- (* 3 (^ x 2) y) 1.25)", s);
    EXPECT_EQ(p.evaluate(v), 3 * 4 - Rational(5, 4));
}

TEST(SExpr, Errors)
{
    SymbolTable s;
    EXPECT_NE(parse_error_of([&] { parse_formula("(<= x", s); }).find("1:1"), std::string::npos);
    EXPECT_NE(parse_error_of([&] { parse_formula("(xor A B)", s); }).find("unknown formula operator"), std::string::npos);
    EXPECT_NE(parse_error_of([&] { parse_term("(* x y)", s); }).find("nonlinear"), std::string::npos);
    EXPECT_NE(parse_error_of([&] { parse_formula("(and x (<= x 1))", s); }).find("both real and boolean"), std::string::npos);
    EXPECT_NE(parse_error_of([&] { parse_formula("(<= y 1) extra", s); }).find("trailing"), std::string::npos);
    EXPECT_NE(parse_error_of([&] { parse_term("1/0", s); }).find("zero denominator"), std::string::npos);
    EXPECT_THROW(parse_sexpr(")"), ParseError);
}

// ---------------------------------------------------------------- model files

TEST(ModelFiles, NetworkRoundTrip)
{
    NetTrainingOptions o;
    o.hidden = {4, 3};
    o.epochs = 3;
    Matrix x{{0, 1}, {1, 0}, {2, 2}, {-1, 0.5}};
    NeuralNet nn = train_relu_net(x, {1, 0, 1, 0}, o);
    Json j = nn_to_json(nn);
    NeuralNet back = nn_from_json(parse_json(j.dump()));
    EXPECT_EQ(nn_to_json(back).dump(), j.dump());
    std::vector<Rational> p{Rational(1, 3), Rational(-2, 7)};
    EXPECT_EQ(back.forward(p), nn.forward(p));
}

TEST(ModelFiles, MismatchedNetworkShapes)
{
    Json bad = parse_json(R"({"type":"nn","input_dim":2,"layers":[
        {"weights":[["1","2"],["3"]],"bias":["0","0"]},
        {"weights":[["1","1"]],"bias":["0"]}]})");
    EXPECT_NE(parse_error_of([&] { nn_from_json(bad); }).find("nn.layers[0].weights[1]: expected 2 entries, got 1"), std::string::npos);
    Json bias = parse_json(R"({"input_dim":1,"layers":[{"weights":[["1"]],"bias":["0","1"]}]})");
    EXPECT_NE(parse_error_of([&] { nn_from_json(bias); }).find("1 weight rows but 2 biases"), std::string::npos);
    Json wide = parse_json(R"({"input_dim":1,"layers":[{"weights":[["1"],["2"]],"bias":["0","1"]}]})");
    EXPECT_NE(parse_error_of([&] { nn_from_json(wide); }).find("final layer has 2 units"), std::string::npos);
    EXPECT_NE(parse_error_of([&] { parse_json("{\n  \"a\": [1,\n}", "net.json"); }).find("net.json:3"), std::string::npos);
}

TEST(ModelFiles, FloatsAreReadAsTheirExactBinaryValue)
{
    Json j = parse_json(R"({"input_dim":1,"layers":[{"weights":[[0.1]],"bias":[-0.5],"activation":"identity"}]})");
    NeuralNet nn = nn_from_json(j);
    EXPECT_EQ(nn.layers[0].weights[0][0], Rational(Integer("3602879701896397"), Integer("36028797018963968")));
    EXPECT_EQ(nn.layers[0].bias[0], Rational(-1, 2));
    EXPECT_EQ(nn_to_json(nn)["layers"][0]["weights"][0][0], "3602879701896397/36028797018963968");
}

TEST(ModelFiles, TrainedDetRoundTrip)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 1);
    std::bernoulli_distribution b(0.3);
    Matrix data;
    for (int i = 0; i < 3000; ++i)
        data.push_back({double(b(rng)), n(rng), 2 * n(rng)});
    std::vector<Variable> vars{Variable::boolean("g"), Variable::real("u"), Variable::real("v")};
    DetTrainingOptions o{200, 400, 0};
    DensityTree t = train_det(data, vars, o);
    ASSERT_GT(t.leaf_count(), 3u);
    SymbolTable s;
    DensityTree back = det_from_json(parse_json(det_to_json(t).dump()), s);
    EXPECT_EQ(det_to_json(back).dump(), det_to_json(t).dump());
    EXPECT_EQ(wmi(Formula::top(), encode_det_weight(back)).value, 1);
    for (int i = 0; i < 50; ++i) {
        Valuation a, c;
        bool g = b(rng);
        Rational u = fixtures::random_rational(rng, -3, 3, 8), v = fixtures::random_rational(rng, -6, 6, 8);
        a.set(vars[0], g);
        a.set(vars[1], u);
        a.set(vars[2], v);
        c.set(s.require("g"), g);
        c.set(s.require("u"), u);
        c.set(s.require("v"), v);
        EXPECT_EQ(back.density(c), t.density(a));
    }
}

TEST(ModelFiles, DetSchemaViolations)
{
    SymbolTable s;
    Json masses = parse_json(R"({"features":[{"name":"x","lo":"0","hi":"1"}],
        "tree":{"feature":"x","threshold":"1/2","left":{"mass":"1/2"},"right":{"mass":"1/3"}}})");
    EXPECT_NE(parse_error_of([&] { det_from_json(masses, s); }).find("sum to 5/6"), std::string::npos);
    Json unknown = parse_json(R"({"features":[{"name":"x","lo":"0","hi":"1"}],
        "tree":{"feature":"q","threshold":"1/2","left":{"mass":"1/2"},"right":{"mass":"1/2"}}})");
    EXPECT_NE(parse_error_of([&] { det_from_json(unknown, s); }).find("det.tree.feature: unknown feature 'q'"), std::string::npos);
    Json noth = parse_json(R"({"features":[{"name":"x","lo":"0","hi":"1"}],
        "tree":{"feature":"x","left":{"mass":"1/2"},"right":{"mass":"1/2"}}})");
    EXPECT_NE(parse_error_of([&] { det_from_json(noth, s); }).find("missing field 'threshold'"), std::string::npos);
}

TEST(ModelFiles, ForestAndSpnRoundTrip)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 4);
    Matrix x;
    std::vector<int> y;
    for (int i = 0; i < 800; ++i) {
        x.push_back({u(rng), u(rng)});
        y.push_back(x.back()[0] + x.back()[1] > 4);
    }
    std::vector<Variable> vars{Variable::real("p"), Variable::real("q")};
    DetForestClassifier rf = train_det_forest(x, y, vars, 2, DetTrainingOptions{40, 80, std::nullopt});
    SymbolTable s;
    DetForestClassifier back = forest_from_json(parse_json(forest_to_json(rf).dump()), s);
    EXPECT_EQ(forest_to_json(back).dump(), forest_to_json(rf).dump());

    Variable a = Variable::real("a"), b = Variable::real("b");
    Spn spn = Spn::sum({Rational(1, 3), Rational(2, 3)},
                       {Spn::product({Spn::uniform(a, 0, 1), Spn::uniform(b, 0, 2)}),
                        Spn::product({Spn::leaf(a, {SpnPiece{0, 1, Polynomial::variable(a).scaled(2)}}), Spn::uniform(b, 1, 3)})});
    SymbolTable t;
    Spn sback = spn_from_json(parse_json(spn_to_json(spn).dump()), t);
    EXPECT_EQ(spn_to_json(sback).dump(), spn_to_json(spn).dump());
    Formula q = Term(a) + Term(b) <= Term(2);
    Formula qb = Term(t.require("a")) + Term(t.require("b")) <= Term(2);
    EXPECT_EQ(wmi(qb, encode_spn(sback)).value, wmi(q, encode_spn(spn)).value);
}

// ---------------------------------------------------------------- datasets

TEST(Csv, RoundTripIsExact)
{
    Dataset d;
    d.names = {"x", "flag"};
    d.sorts = {Sort::real, Sort::boolean};
    d.rows = {{0.1, 1}, {-1e-300, 0}, {12345.678901234567, 1}, {std::nextafter(1.0, 2.0), 0}};
    Dataset back = parse_csv(write_csv(d));
    EXPECT_EQ(back.names, d.names);
    EXPECT_EQ(back.sorts, d.sorts);
    EXPECT_EQ(back.rows, d.rows);
    EXPECT_EQ(write_csv(back), write_csv(d));
}

TEST(Csv, Errors)
{
    EXPECT_NE(parse_error_of([] { parse_csv("x,y:real\n1,2\n"); }).find("lacks a ':real' or ':bool' type"), std::string::npos);
    EXPECT_NE(parse_error_of([] { parse_csv("x:real,y:int\n"); }).find("unknown column type 'int'"), std::string::npos);
    EXPECT_NE(parse_error_of([] { parse_csv("x:real,b:bool\n1,2\n", "d.csv"); }).find("d.csv:2: malformed boolean"), std::string::npos);
    EXPECT_NE(parse_error_of([] { parse_csv("x:real\n1\nabc\n"); }).find(":3: malformed number"), std::string::npos);
    EXPECT_NE(parse_error_of([] { parse_csv("x:real,y:real\n1\n"); }).find("expected 2 fields, got 1"), std::string::npos);
    EXPECT_THROW(parse_csv(""), ParseError);
}

// ---------------------------------------------------------------- task files

TEST(TaskFiles, ExampleTaskReproducesItsProbability)
{
    for (int run = 0; run < 2; ++run) {
        Task t = load_task(samples_dir / "unit_square.json");
        Verdict v = verify(t.property, t.options);
        EXPECT_EQ(v.z, Rational(13, 24));
        EXPECT_EQ(v.probability, Rational(4, 13));
        EXPECT_TRUE(v.passed);
    }
}

TEST(TaskFiles, SampleTasksLoadAndAreDeterministic)
{
    for (const auto& name : {"nn_robustness.json", "nn_classify.json", "monotonicity.json", "noise.json", "equivalence.json"}) {
        Task a = load_task(samples_dir / name), b = load_task(samples_dir / name);
        VerifierOptions o = a.options;
        o.early_exit = false;
        EXPECT_EQ(verify(a.property, o).probability, verify(b.property, o).probability) << name;
        EXPECT_EQ(verify(a.property, o).probability, conditional_probability(a.property)) << name;
    }
    Task noise = load_task(samples_dir / "noise.json");
    EXPECT_EQ(conditional_probability(noise.property), Rational(3, 4));
    Task parity = load_task(samples_dir / "parity.json");
    ASSERT_TRUE(parity.parity.has_value());
    ParityResult r = demographic_parity(parity.parity->system, parity.parity->minority, parity.parity->prior);
    EXPECT_EQ(demographic_parity(parity.parity->system, parity.parity->minority, parity.parity->prior, true).ratio, r.ratio);
}

TEST(TaskFiles, SchemaViolations)
{
    auto task = [](const std::string& text) { return task_from_json(parse_json(text), samples_dir); };
    const std::string prior = R"("prior":{"kind":"uniform","box":{"x":["0","1"]}})";
    EXPECT_NE(parse_error_of([&] { task(R"({"inputs":["x"],)" + prior + R"(,"property":{"kind":"local_robustness","x0":["0"],"epsilon":"1"}})"); })
                  .find("needs 1 system(s), task has 0"),
              std::string::npos);
    EXPECT_NE(parse_error_of([&] {
                  task(R"({"inputs":["x"],)" + prior + R"(,"systems":[{"kind":"function","output":"x"}],"property":{"kind":"telepathy"}})");
              }).find("unknown property kind 'telepathy'"),
              std::string::npos);
    EXPECT_NE(parse_error_of([&] {
                  task(R"({"inputs":["x"],)" + prior +
                       R"(,"systems":[{"kind":"function","output":"x"}],"property":{"kind":"local_robustness","x0":["0","1"],"epsilon":"1"}})");
              }).find("x0: expected 1 coordinates"),
              std::string::npos);
    EXPECT_NE(parse_error_of([&] {
                  task(R"({"inputs":["x"],)" + prior + R"(,"systems":[{"kind":"nn","file":"missing.json"}],"property":{"kind":"monotonicity","feature":"x"}})");
              }).find("cannot open"),
              std::string::npos);
    EXPECT_NE(parse_error_of([&] {
                  task(R"({"inputs":["a","b"],)" + prior + R"(,"systems":[{"kind":"nn","file":"models/small_nn.json"}],"property":{"kind":"monotonicity","feature":"a"},"verifier":{"heuristic":"psychic"}})");
              }).find("task.verifier.heuristic"),
              std::string::npos);
}

// ---------------------------------------------------------------- generators

TEST(Generators, IncomeRatesAndRanges)
{
    IncomeConfig cfg;
    cfg.seed = 7;
    IncomeData d = gen_income_data(cfg);
    ASSERT_EQ(d.prior_train.rows.size(), 10000u);
    double pos = 0;
    for (const auto& r : d.prior_train.rows) {
        pos += r[4];
        EXPECT_GE(r[1], 10);
        EXPECT_LE(r[1], 60);
        EXPECT_GE(r[2], 0);
        EXPECT_LE(r[2], 55);
    }
    double rate = pos / 10000;
    EXPECT_GT(rate, 0.3);
    EXPECT_LT(rate, 0.7);
    EXPECT_THROW(gen_income_data(IncomeConfig{false, 0, 1, 1, 0}), Error);
}

TEST(Generators, WagePenaltyOnlyWhenBiased)
{
    IncomeConfig cfg;
    cfg.seed = 3;
    double in = 0, out = 0;
    cfg.biased = true;
    double tb = welch(gen_income_data(cfg).prior_train, 0, 3, in, out);
    EXPECT_LT(in, out);
    EXPECT_LT(tb, -10);
    cfg.biased = false;
    double tu = welch(gen_income_data(cfg).prior_train, 0, 3, in, out);
    EXPECT_LT(std::abs(tu), 2.576);
}

TEST(Generators, Determinism)
{
    IncomeConfig cfg;
    cfg.seed = 21;
    cfg.n_train_prior = cfg.n_train_sys = cfg.n_test = 300;
    EXPECT_EQ(write_csv(gen_income_data(cfg).system_train), write_csv(gen_income_data(cfg).system_train));
    EXPECT_EQ(write_csv(gen_synthetic_benchmark(3, 10, 500, 4).data), write_csv(gen_synthetic_benchmark(3, 10, 500, 4).data));
    EXPECT_NE(write_csv(gen_synthetic_benchmark(3, 10, 500, 4).data), write_csv(gen_synthetic_benchmark(3, 10, 500, 5).data));
}

TEST(Generators, BenchmarkLabels)
{
    std::vector<std::vector<int>> zero(3, std::vector<int>(10, 0));
    std::vector<int> m2(10, 1);
    std::mt19937_64 rng(1);
    Dataset d = sample_benchmark(zero, m2, 200, rng);
    for (const auto& r : d.rows)
        EXPECT_EQ(r[3], 1.0);
    SyntheticBenchmark b = gen_synthetic_benchmark(3, 10, 10000, 2);
    for (const auto& row : b.m1)
        for (int v : row)
            EXPECT_TRUE(v == -1 || v == 0 || v == 1);
    for (int v : b.m2)
        EXPECT_TRUE(v == -1 || v == 1);
    double pos = 0;
    for (const auto& r : b.data.rows)
        pos += r[3];
    EXPECT_GT(pos / 10000, 0.35);
    EXPECT_LT(pos / 10000, 0.65);
}

TEST(Generators, ProtectedRootSplit)
{
    IncomeConfig cfg;
    cfg.n_train_prior = 4000;
    IncomeData d = gen_income_data(cfg);
    IncomeVariables v;
    DetTrainingOptions o{1000, 2000, 0};
    DensityTree t = train_det(d.prior_train.columns({0, 1, 2, 3}), {v.female, v.hpw, v.yexp, v.hw}, o);
    ASSERT_FALSE(t.nodes[0].leaf);
    EXPECT_EQ(t.nodes[0].feature, 0u);
    EXPECT_EQ(wmi(Formula::top(), encode_det_weight(t)).value, 1);
    EXPECT_THROW(train_det(d.prior_train.columns({1, 2}), {v.hpw, v.yexp}, DetTrainingOptions{1000, 2000, 0}), ModelError);
}

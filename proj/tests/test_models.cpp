#include <random>

#include <gtest/gtest.h>

#include <wmipfv/bound_propagation.hpp>
#include <wmipfv/models.hpp>
#include <wmipfv/properties.hpp>
#include <wmipfv/training.hpp>

#include "fixtures.hpp"

using namespace wmipfv;

namespace {

struct UnitSquare
{
    Variable x = Variable::real("x");
    Variable y = Variable::real("y");

    DensityTree single_leaf() const
    {
        DensityTree t;
        t.features = {{x, 0, 1}, {y, 0, 1}};
        DetNode leaf;
        leaf.mass = 1;
        t.nodes = {leaf};
        return t;
    }

    /** Split at x = 1/2 with masses 1/4 (left) and 3/4 (right). */
    DensityTree split_half(Rational left = Rational(1, 4), Rational right = Rational(3, 4)) const
    {
        DensityTree t;
        t.features = {{x, 0, 1}, {y, 0, 1}};
        DetNode root;
        root.leaf = false;
        root.feature = 0;
        root.threshold = Rational(1, 2);
        root.left = 1;
        root.right = 2;
        DetNode l, r;
        l.mass = left;
        r.mass = right;
        t.nodes = {root, l, r};
        return t;
    }
};

Valuation at(const std::vector<Variable>& vars, const std::vector<Rational>& values)
{
    Valuation v;
    for (std::size_t i = 0; i < vars.size(); ++i)
        v.set(vars[i], values[i]);
    return v;
}

NeuralNet random_net(std::mt19937_64& rng, std::vector<std::size_t> widths)
{
    NeuralNet nn;
    nn.input_dim = widths[0];
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.activation = l + 2 == widths.size() ? Activation::identity : Activation::relu;
        for (std::size_t i = 0; i < widths[l + 1]; ++i) {
            std::vector<Rational> row;
            for (std::size_t j = 0; j < widths[l]; ++j)
                row.push_back(fixtures::random_rational(rng, -1, 1, 4));
            layer.weights.push_back(row);
            layer.bias.push_back(fixtures::random_rational(rng, -1, 1, 4));
        }
        nn.layers.push_back(layer);
    }
    return nn;
}

NeuralNet all_ones_221()
{
    NeuralNet nn;
    nn.input_dim = 2;
    nn.layers.push_back({{{1, 1}, {1, 1}}, {0, 0}, Activation::relu});
    nn.layers.push_back({{{1, 1}}, {0}, Activation::identity});
    return nn;
}

/** c(x) ⟺ x ≤ t as a one-unit network with logit t − x. */
SystemEncoding threshold_classifier(const Variable& x, const Rational& t, const std::string& name)
{
    NeuralNet nn;
    nn.input_dim = 1;
    nn.layers.push_back({{{-1}}, {t}, Activation::identity});
    return encode_relu_nn(nn, {x}, name);
}

Matrix uniform_rows(std::mt19937_64& rng, std::size_t n, std::size_t dim)
{
    std::uniform_real_distribution<double> u(0, 1);
    Matrix m(n, std::vector<double>(dim));
    for (auto& row : m)
        for (auto& v : row)
            v = u(rng);
    return m;
}

Rational random_point_coordinate(std::mt19937_64& rng) { return fixtures::random_rational(rng, 0, 1, 997); }

} // namespace

// ---------------------------------------------------------------- DETs

TEST(DensityTree, SingleLeafIsConstantOne)
{
    UnitSquare s;
    WeightDag w = encode_det_weight(s.single_leaf());
    ASSERT_TRUE(w.as_constant());
    EXPECT_EQ(*w.as_constant(), 1);
    EXPECT_EQ(wmi(Formula::top(), w).value, 1);
}

TEST(DensityTree, SplitAtHalfEncodesDensities)
{
    UnitSquare s;
    WeightDag w = encode_det_weight(s.split_half());
    ASSERT_EQ(w.root()->kind, WeightKind::ite);
    EXPECT_EQ(w.root()->children[0]->poly, Polynomial(Rational(1, 2)));
    EXPECT_EQ(w.root()->children[1]->poly, Polynomial(Rational(3, 2)));
    ASSERT_EQ(w.root()->cond.kind(), FormulaKind::atom);
    EXPECT_EQ(w.root()->cond.atom(), (Term(s.x) <= Term(Rational(1, 2))).atom());
    EXPECT_EQ(wmi(Formula::top(), w).value, 1);
}

TEST(DensityTree, ZeroVolumeLeafIsRejected)
{
    UnitSquare s;
    DensityTree t = s.split_half();
    t.nodes[0].threshold = 0;
    EXPECT_THROW(encode_det_weight(t), ModelError);
}

TEST(DensityTree, MassesMustSumToOne)
{
    UnitSquare s;
    EXPECT_THROW(encode_det_weight(s.split_half(Rational(1, 4), Rational(1, 4))), ModelError);
}

TEST(DensityTree, UnsplitBooleanFeatureKeepsNormalization)
{
    Variable x = Variable::real("x"), b = Variable::boolean("b");
    DensityTree t;
    t.features = {{x, 0, 2}, {b, 0, 0}};
    DetNode leaf;
    leaf.mass = 1;
    t.nodes = {leaf};
    WeightDag w = encode_det_weight(t);
    EXPECT_EQ(*w.as_constant(), Rational(1, 4));
    EXPECT_EQ(wmi(Formula::top(), w).value, 1);
}

TEST(DensityTree, DensityAgreesWithEncodingPointwise)
{
    UnitSquare s;
    DensityTree t = s.split_half();
    WeightDag w = encode_det_weight(t);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        Valuation p = at({s.x, s.y}, {random_point_coordinate(rng), random_point_coordinate(rng)});
        EXPECT_EQ(t.density(p), evaluate_at(w, p));
    }
}

TEST(DetTraining, IdenticalRowsGiveOneLeaf)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    Matrix data(100, std::vector<double>{0.3, 0.7});
    DensityTree t = train_det(data, {x, y}, 10, 200);
    EXPECT_EQ(t.leaf_count(), 1u);
    EXPECT_EQ(t.nodes[0].mass, 1);
    EXPECT_EQ(wmi(Formula::top(), encode_det_weight(t)).value, 1);
}

TEST(DetTraining, UniformSampleGivesTwoToFourLeaves)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    std::mt19937_64 rng(11);
    Matrix data = uniform_rows(rng, 4000, 2);
    DensityTree t = train_det(data, {x, y}, 1000, 2000);
    EXPECT_GE(t.leaf_count(), 2u);
    EXPECT_LE(t.leaf_count(), 4u);
    Rational total = 0;
    for (const auto& n : t.nodes)
        if (n.leaf) {
            total += n.mass;
            EXPECT_GE(n.mass, Rational(1000, 4000));
            EXPECT_LE(n.mass, Rational(2000, 4000));
        }
    EXPECT_EQ(total, 1);
}

TEST(DetTraining, TrainedTreesAreNormalized)
{
    Variable x = Variable::real("x"), y = Variable::real("y"), b = Variable::boolean("b");
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0, 1);
    Matrix data;
    for (int i = 0; i < 3000; ++i) {
        double u = g(rng);
        bool flag = u > 0.3;
        data.push_back({u, g(rng) + (flag ? 1.0 : 0.0), flag ? 1.0 : 0.0});
    }
    DensityTree t = train_det(data, {x, y, b}, 200, 500);
    EXPECT_GE(t.leaf_count(), 6u);
    t.validate();
    EXPECT_EQ(wmi(Formula::top(), encode_det_weight(t)).value, 1);
}

TEST(DetTraining, EmptyDataIsRejected)
{
    Variable x = Variable::real("x");
    EXPECT_THROW(train_det({}, {x}, 1, 2), ModelError);
}

TEST(DetTraining, ThresholdsAreShortDecimalsBetweenValues)
{
    EXPECT_EQ(decimal_between(0.1234, 0.1278), Rational(126, 1000));
    EXPECT_EQ(decimal_between(1.2, 3.9), Rational(3));
    Rational r = decimal_between(0.30000001, 0.30000002);
    EXPECT_GT(r, from_double(0.30000001));
    EXPECT_LT(r, from_double(0.30000002));
}

TEST(DetTraining, SplitsMaximizeDensityGain)
{
    // mass concentrated on x < 0.2: the first split separates it
    Variable x = Variable::real("x");
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> dense(0, 0.2), sparse(0.2, 1);
    Matrix data;
    for (int i = 0; i < 3000; ++i)
        data.push_back({i % 3 ? dense(rng) : sparse(rng)});
    DensityTree t = train_det(data, {x}, 500, 2000);
    ASSERT_FALSE(t.nodes[0].leaf);
    EXPECT_GT(t.nodes[0].threshold, Rational(15, 100));
    EXPECT_LT(t.nodes[0].threshold, Rational(25, 100));
}

// ---------------------------------------------------------------- ReLU networks

TEST(ReluEncoding, NegativeInputForcesZeroActivation)
{
    Variable x = Variable::real("x");
    NeuralNet nn;
    nn.input_dim = 1;
    nn.layers.push_back({{{1}}, {0}, Activation::relu});
    SystemEncoding sys = encode_relu_nn(nn, {x});
    ASSERT_EQ(sys.introduced.size(), 2u);
    const Variable& h = sys.introduced[0];
    const Variable& y = sys.introduced[1];
    auto holds = [&](const Rational& yv) {
        Valuation v;
        v.set(x, Rational(-1));
        v.set(h, Rational(-1));
        v.set(y, yv);
        return evaluate(sys.chi, v);
    };
    EXPECT_TRUE(holds(0));
    EXPECT_FALSE(holds(-1));
    EXPECT_FALSE(holds(Rational(1, 2)));
    // the only completion inside χ: the WMI over a band of x pins y = 0
    EXPECT_EQ(wmi(interval(x, -2, -1) && eq(Term(y), Term(0)), WeightDag(1).with_support(sys.chi)).value, 1);
    EXPECT_EQ(wmi(interval(x, -2, -1) && !eq(Term(y), Term(0)), WeightDag(1).with_support(sys.chi)).value, 0);
}

TEST(ReluEncoding, UnitThatIsZeroOnAFullRegionCountsOnce)
{
    // second unit is identically 0 on x ∈ [0, 1]; each region must be integrated once
    Variable x = Variable::real("x");
    NeuralNet nn;
    nn.input_dim = 1;
    nn.layers.push_back({{{-1}}, {0}, Activation::relu});
    nn.layers.push_back({{{1}}, {0}, Activation::relu});
    SystemEncoding sys = encode_relu_nn(nn, {x});
    WeightDag w = WeightDag(1).with_support(sys.chi);
    EXPECT_EQ(wmi(interval(x, 0, 1), w).value, 1);
    WmiOptions exact;
    exact.measure_zero_pruning = false;
    EXPECT_EQ(wmi(interval(x, 0, 1), w, exact).value, 1);
    EXPECT_EQ(wmi(interval(x, -1, 1), w).value, 2);
}

TEST(ReluEncoding, HandForwardPassOfAllOnesNet)
{
    Variable a = Variable::real("a"), b = Variable::real("b");
    NeuralNet nn = all_ones_221();
    EXPECT_EQ(nn.forward({1, 1}), 4);
    SystemEncoding sys = encode_relu_nn(nn, {a, b});
    Valuation v = at({a, b}, {1, 1});
    EXPECT_EQ(evaluate(*sys.output, v), 4);
    EXPECT_TRUE(evaluate(sys.decision, v));
    EXPECT_TRUE(evaluate(sys.chi, v));
}

TEST(ReluEncoding, TwoFreshVariablesPerUnit)
{
    std::mt19937_64 rng(8);
    NeuralNet nn = random_net(rng, {3, 4, 5, 1});
    std::vector<Variable> in{Variable::real("a"), Variable::real("b"), Variable::real("c")};
    SystemEncoding sys = encode_relu_nn(nn, in);
    EXPECT_EQ(sys.introduced.size(), 2 * nn.unit_count());
    VariableSet distinct(sys.introduced.begin(), sys.introduced.end());
    EXPECT_EQ(distinct.size(), sys.introduced.size());
    for (const auto& v : sys.introduced)
        EXPECT_TRUE(v.is_defined());
    EXPECT_EQ(sys.conditions.size(), 9u);
    EXPECT_EQ(sys.weight.as_constant(), std::optional<Rational>(1));
}

TEST(ReluEncoding, PointwiseAgreementWithInference)
{
    std::mt19937_64 rng(21);
    NeuralNet nn = random_net(rng, {3, 4, 4, 1});
    std::vector<Variable> in{Variable::real("a"), Variable::real("b"), Variable::real("c")};
    SystemEncoding sys = encode_relu_nn(nn, in);
    for (int i = 0; i < 100; ++i) {
        std::vector<Rational> x{fixtures::random_rational(rng, -2, 2, 16), fixtures::random_rational(rng, -2, 2, 16),
                                fixtures::random_rational(rng, -2, 2, 16)};
        Valuation v = at(in, x);
        EXPECT_EQ(evaluate(*sys.output, v), nn.forward(x));
        EXPECT_EQ(evaluate(sys.decision, v), nn.classify(x));
        // the defined values are the unique extension satisfying χ
        EXPECT_TRUE(evaluate(sys.chi, v));
        Valuation off = at(in, x);
        off.set(sys.introduced[1], v.real(sys.introduced[1]) + 1);
        EXPECT_FALSE(evaluate(sys.chi, off));
    }
}

TEST(ReluEncoding, MismatchedShapesAreRejected)
{
    NeuralNet nn = all_ones_221();
    nn.layers[1].weights[0].push_back(1);
    EXPECT_THROW(nn.validate(), ModelError);
    NeuralNet wide = all_ones_221();
    wide.layers[1].weights.push_back({1, 1});
    wide.layers[1].bias.push_back(0);
    EXPECT_THROW(wide.validate(), ModelError);
    std::vector<Variable> one{Variable::real("a")};
    EXPECT_THROW(encode_relu_nn(all_ones_221(), one), ArityError);
}

TEST(ReluEncoding, ProbabilityOfPositiveClassMatchesGeometry)
{
    // logit = relu(x + y) + relu(x + y) over [-1,1]²: positive iff x + y ≥ 0, mass 1/2
    Variable a = Variable::real("a"), b = Variable::real("b");
    SystemEncoding sys = encode_relu_nn(all_ones_221(), {a, b});
    Formula box = interval(a, -1, 1) && interval(b, -1, 1);
    WeightDag w = WeightDag(Rational(1, 4)).with_support(box && sys.chi);
    EXPECT_EQ(wmi(Formula::top(), w).value, 1);
    EXPECT_EQ(conditional_probability(sys.decision, Formula::top(), w), 1);
    EXPECT_EQ(conditional_probability(*sys.output > Term(0), Formula::top(), w), Rational(1, 2));
}

TEST(NetTraining, LearnsSeparableData)
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 1);
    Matrix x;
    std::vector<int> y;
    for (int i = 0; i < 2000; ++i) {
        double a = g(rng), b = g(rng);
        x.push_back({a, b});
        y.push_back(a + 2 * b > 0.5);
    }
    NetTrainingOptions o;
    o.hidden = {4};
    o.epochs = 40;
    o.batch = 50;
    o.learning_rate = 0.1;
    o.seed = 1;
    NeuralNet nn = train_relu_net(x, y, o);
    nn.validate();
    EXPECT_GT(accuracy(nn, x, y), 0.95);
    // parameters are exact single-precision values
    for (const auto& l : nn.layers)
        for (const auto& w : l.bias)
            EXPECT_EQ(from_double(static_cast<float>(to_double(w))), w);
}

// ---------------------------------------------------------------- DET forests

TEST(DetForest, IdenticalTreesGiveTheTopClass)
{
    UnitSquare s;
    DetForestClassifier rf{{s.split_half()}, {s.split_half()}};
    SystemEncoding sys = encode_rf_classifier(rf, {s.x, s.y});
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        Valuation p = at({s.x, s.y}, {random_point_coordinate(rng), random_point_coordinate(rng)});
        EXPECT_TRUE(evaluate(sys.decision, p));
    }
}

TEST(DetForest, DenserTopClassOnTheLeft)
{
    UnitSquare s;
    DetForestClassifier rf{{s.split_half(Rational(3, 4), Rational(1, 4))}, {s.split_half()}};
    SystemEncoding sys = encode_rf_classifier(rf, {s.x, s.y});
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
        Valuation p = at({s.x, s.y}, {random_point_coordinate(rng), random_point_coordinate(rng)});
        EXPECT_EQ(evaluate(sys.decision, p), p.real(s.x) <= Rational(1, 2));
    }
    WeightDag uniform = WeightDag(1).with_support(interval(s.x, 0, 1) && interval(s.y, 0, 1));
    EXPECT_EQ(conditional_probability(sys.decision, Formula::top(), uniform), Rational(1, 2));
    EXPECT_EQ(sys.conditions.size(), 1u);
}

TEST(DetForest, PointwiseAgreementWithTrainedForest)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    std::mt19937_64 rng(9);
    Matrix data = uniform_rows(rng, 3000, 2);
    std::vector<int> labels;
    for (const auto& r : data)
        labels.push_back(r[0] * r[0] + r[1] > 0.7);
    DetForestClassifier rf = train_det_forest(data, labels, {x, y}, 3, {100, 300, std::nullopt});
    SystemEncoding sys = encode_rf_classifier(rf, {x, y});
    for (int i = 0; i < 100; ++i) {
        Valuation p = at({x, y}, {random_point_coordinate(rng), random_point_coordinate(rng)});
        Valuation q = at({x, y}, {p.real(x), p.real(y)});
        EXPECT_EQ(evaluate(sys.decision, p), rf.classify(q));
        EXPECT_EQ(evaluate(*sys.output, p), rf.margin(q));
    }
}

// ---------------------------------------------------------------- SPNs

TEST(SpnEncoding, UniformLeafIsConstantOne)
{
    Variable x = Variable::real("x");
    WeightDag w = encode_spn(Spn::uniform(x, 0, 1));
    EXPECT_EQ(w.as_constant(), std::optional<Rational>(1));
    EXPECT_EQ(wmi(Formula::top(), w).value, 1);
}

TEST(SpnEncoding, MixtureOverAdjacentSupportsHasMassOne)
{
    Variable x = Variable::real("x");
    Spn s = Spn::sum({Rational(1, 2), Rational(1, 2)}, {Spn::uniform(x, 0, Rational(1, 2)), Spn::uniform(x, Rational(1, 2), 1)});
    WeightDag w = encode_spn(s);
    EXPECT_EQ(wmi(Formula::top(), w).value, 1);
    EXPECT_EQ(wmi(Term(x) <= Term(Rational(1, 4)), w).value, Rational(1, 4));
}

TEST(SpnEncoding, ProductOfUniformsOnTheUnitSquare)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    WeightDag w = encode_spn(Spn::product({Spn::uniform(x, 0, 1), Spn::uniform(y, 0, 1)}));
    EXPECT_EQ(wmi(Formula::top(), w).value, 1);
    EXPECT_EQ(wmi(Term(x) + Term(y) <= Term(1), w).value, Rational(1, 2));
}

TEST(SpnEncoding, MalformedNetworksAreRejected)
{
    Variable x = Variable::real("x");
    EXPECT_THROW(encode_spn(Spn::leaf(x, {{0, 1, Polynomial(2)}})), ModelError);
    EXPECT_THROW(encode_spn(Spn::product({Spn::uniform(x, 0, 1), Spn::uniform(x, 0, 1)})), ModelError);
    EXPECT_THROW(encode_spn(Spn::sum({Rational(1, 2)}, {Spn::uniform(x, 0, 1)})), ModelError);
}

TEST(SpnEncoding, PiecewisePolynomialLeafMatchesDensity)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    Polynomial px = Polynomial::variable(x);
    // triangle on [0,2] with mode 1, then a product with a mixture over y
    Spn tri = Spn::leaf(x, {{0, 1, px}, {1, 2, Polynomial(2) - px}});
    Spn mix = Spn::sum({Rational(1, 3), Rational(2, 3)}, {Spn::uniform(y, 0, 1), Spn::leaf(y, {{0, 1, Polynomial::variable(y).scaled(2)}})});
    Spn s = Spn::product({tri, mix});
    WeightDag w = encode_spn(s);
    EXPECT_EQ(wmi(Formula::top(), w).value, 1);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 100; ++i) {
        Valuation p = at({x, y}, {fixtures::random_rational(rng, 0, 2, 997), random_point_coordinate(rng)});
        EXPECT_EQ(evaluate_at(w, p), s.density(p));
    }
}

// ---------------------------------------------------------------- ensembles

TEST(Ensemble, SingleMemberDecidesLikeTheMember)
{
    Variable x = Variable::real("x");
    SystemEncoding member = threshold_classifier(x, Rational(1, 3), "t");
    SystemEncoding e = encode_ensemble({member}, Aggregation::majority);
    for (int i = -10; i <= 10; ++i) {
        Valuation v = at({x}, {Rational(i, 10)});
        EXPECT_EQ(evaluate(e.decision, v), evaluate(member.decision, v));
    }
}

TEST(Ensemble, MajorityOfCopiesKeepsTheDecision)
{
    Variable x = Variable::real("x");
    SystemEncoding member = threshold_classifier(x, Rational(1, 3), "t");
    SystemEncoding e = encode_ensemble({member, member, member}, Aggregation::majority);
    WeightDag w = WeightDag(Rational(1, 2)).with_support(interval(x, -1, 1) && e.chi);
    EXPECT_EQ(conditional_probability(e.decision, Formula::top(), w), Rational(2, 3));
}

TEST(Ensemble, MajorityOfThresholdsMatchesSimulation)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    std::vector<std::pair<std::vector<Rational>, Rational>> members{{{1, 0}, Rational(1, 2)}, {{0, 1}, Rational(1, 2)}, {{1, 1}, 1}};
    std::vector<SystemEncoding> encs;
    for (std::size_t i = 0; i < members.size(); ++i) {
        NeuralNet nn;
        nn.input_dim = 2;
        nn.layers.push_back({{{-members[i].first[0], -members[i].first[1]}}, {members[i].second}, Activation::identity});
        encs.push_back(encode_relu_nn(nn, {x, y}, "m" + std::to_string(i)));
    }
    SystemEncoding e = encode_ensemble(encs, Aggregation::majority);
    SystemEncoding avg = encode_ensemble(encs, Aggregation::average);
    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        Rational px = random_point_coordinate(rng), py = random_point_coordinate(rng);
        int votes = 0;
        Rational mean = 0;
        for (const auto& [w, t] : members) {
            Rational logit = t - w[0] * px - w[1] * py;
            votes += logit >= 0;
            mean += logit / 3;
        }
        Valuation v = at({x, y}, {px, py});
        EXPECT_EQ(evaluate(e.decision, v), votes >= 2);
        EXPECT_EQ(evaluate(avg.decision, v), mean >= 0);
    }
    SystemEncoding no_output;
    no_output.inputs = {x, y};
    EXPECT_THROW(encode_ensemble({no_output}, Aggregation::average), UnsupportedError);
}

// ---------------------------------------------------------------- bound propagation

TEST(BoundPropagation, NegativeUnitIsClampedToZero)
{
    Variable x = Variable::real("x");
    NeuralNet nn;
    nn.input_dim = 1;
    nn.layers.push_back({{{1}}, {0}, Activation::relu});
    SystemEncoding sys = encode_relu_nn(nn, {x});
    Box b;
    b.set(x, Interval::closed(-2, -1));
    Box out = propagate_bounds(sys, b);
    EXPECT_EQ(out.get(sys.introduced[0]), Interval::closed(-2, -1));
    EXPECT_EQ(out.get(sys.introduced[1]), Interval::point(0));
}

TEST(BoundPropagation, LinearUnitAddsIntervals)
{
    Variable a = Variable::real("a"), b = Variable::real("b");
    NeuralNet nn;
    nn.input_dim = 2;
    nn.layers.push_back({{{1, 1}}, {0}, Activation::relu});
    SystemEncoding sys = encode_relu_nn(nn, {a, b});
    Box box;
    box.set(a, Interval::closed(0, 1));
    box.set(b, Interval::closed(0, 1));
    Box out = propagate_bounds(sys, box);
    EXPECT_EQ(out.get(sys.introduced[0]), Interval::closed(0, 2));
    EXPECT_EQ(out.get(sys.introduced[1]), Interval::closed(0, 2));
}

TEST(BoundPropagation, ReluClampsStraddlingUnits)
{
    Variable x = Variable::real("x");
    NeuralNet nn;
    nn.input_dim = 1;
    nn.layers.push_back({{{1}}, {0}, Activation::relu});
    SystemEncoding sys = encode_relu_nn(nn, {x});
    Box b;
    b.set(x, Interval::closed(-1, 3));
    EXPECT_EQ(propagate_bounds(sys, b).get(sys.introduced[1]), Interval::closed(0, 3));
}

TEST(BoundPropagation, IntervalsContainSampledOutputs)
{
    std::mt19937_64 rng(31);
    NeuralNet nn = random_net(rng, {3, 6, 6, 1});
    std::vector<Variable> in{Variable::real("a"), Variable::real("b"), Variable::real("c")};
    SystemEncoding sys = encode_relu_nn(nn, in);
    Box box;
    for (const auto& v : in)
        box.set(v, Interval::closed(Rational(-1, 2), 1));
    Box out = propagate_bounds(sys, box);
    for (int i = 0; i < 1000; ++i) {
        std::vector<Rational> x;
        for (int j = 0; j < 3; ++j)
            x.push_back(fixtures::random_rational(rng, 0, 3, 64) / 2 - Rational(1, 2));
        Valuation v = at(in, x);
        for (const auto& d : sys.introduced)
            ASSERT_TRUE(out.get(d).contains(v.real(d))) << d.name();
    }
}

TEST(BoundPropagation, StableUnitDisappearsFromTheEncoding)
{
    Variable x = Variable::real("x");
    NeuralNet nn;
    nn.input_dim = 1;
    nn.layers.push_back({{{1}, {1}}, {-4, 0}, Activation::relu});
    nn.layers.push_back({{{1, 1}}, {0}, Activation::identity});
    SystemEncoding sys = encode_relu_nn(nn, {x});
    Box b;
    b.set(x, Interval::closed(-1, 1));
    SystemEncoding s = simplify_stable_conditions(sys, b);
    Atom guard = as_literal(sys.conditions[0])->atom;
    for (const auto& a : atoms_of(s.chi))
        EXPECT_FALSE(a == guard);
    EXPECT_EQ(s.conditions.size(), 1u);
    EXPECT_LT(atoms_of(s.chi).size(), atoms_of(sys.chi).size());
    WeightDag u = WeightDag(Rational(1, 2)).with_support(interval(x, -1, 1));
    auto mass = [&](const SystemEncoding& e) {
        return wmi(*e.output > Term(Rational(1, 2)), WeightDag(u * e.weight).with_support(u.support() && e.chi)).value;
    };
    EXPECT_EQ(mass(s), mass(sys));
    EXPECT_EQ(mass(s), Rational(1, 4));
}

TEST(BoundPropagation, DecidedTreeSplitKeepsOneBranch)
{
    Variable x = Variable::real("x");
    DensityTree t;
    t.features = {{x, 0, 20}};
    DetNode root;
    root.leaf = false;
    root.threshold = 10;
    root.left = 1;
    root.right = 2;
    DetNode l, r;
    l.mass = Rational(1, 4);
    r.mass = Rational(3, 4);
    t.nodes = {root, l, r};
    Box b;
    b.set(x, Interval::closed(0, 1));
    WeightDag w = simplify_weight(encode_det_weight(t), b);
    EXPECT_EQ(w.as_constant(), std::optional<Rational>(Rational(1, 40)));
}

TEST(BoundPropagation, BallGivesClosedFormBox)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    Box b = bounds_from_precondition(distance_ball(as_terms(std::vector<Variable>{x, y}), as_terms(std::vector<Rational>{0, 0}), Norm::linf, 1),
                                     Formula::top());
    EXPECT_EQ(b.get(x), Interval::closed(-1, 1));
    EXPECT_EQ(b.get(y), Interval::closed(-1, 1));
    Box l1 = bounds_from_precondition(distance_ball(as_terms(std::vector<Variable>{x, y}), as_terms(std::vector<Rational>{1, 0}), Norm::l1, 1),
                                      Formula::top());
    EXPECT_EQ(l1.get(x), Interval::closed(0, 2));
    EXPECT_EQ(l1.get(y), Interval::closed(-1, 1));
}

TEST(BoundPropagation, LpBoxOverConjunctivePrecondition)
{
    Variable x = Variable::real("x"), y = Variable::real("y");
    Box b = bounds_from_precondition(interval(x, 0, 1) && Term(x) + Term(y) <= Term(1), interval(y, 0, 1));
    EXPECT_EQ(b.get(x), Interval::closed(0, 1));
    EXPECT_EQ(b.get(y), Interval::closed(0, 1));
    Box tight = bounds_from_precondition(Term(x) + Term(y) >= Term(Rational(3, 2)), interval(x, 0, 1) && interval(y, 0, 1));
    EXPECT_EQ(tight.get(x), Interval::closed(Rational(1, 2), 1));
}

TEST(BoundPropagation, DisjunctivePreconditionFallsBackToSupport)
{
    Variable x = Variable::real("x");
    Box b = bounds_from_precondition(Term(x) <= Term(Rational(1, 4)) || Term(x) >= Term(Rational(3, 4)), interval(x, 0, 1));
    EXPECT_EQ(b.get(x), Interval::closed(0, 1));
}

TEST(BoundPropagation, UnsatisfiablePreconditionIsAnError)
{
    Variable x = Variable::real("x");
    EXPECT_THROW(bounds_from_precondition(Term(x) >= Term(2), interval(x, 0, 1)), UnsatisfiableError);
}

TEST(BoundPropagation, ShrinkingTheBoxKeepsStableConditionsStable)
{
    std::mt19937_64 rng(17);
    NeuralNet nn = random_net(rng, {2, 6, 1});
    std::vector<Variable> in{Variable::real("a"), Variable::real("b")};
    SystemEncoding sys = encode_relu_nn(nn, in);
    for (int trial = 0; trial < 20; ++trial) {
        Rational c0 = fixtures::random_rational(rng, -1, 1, 8), c1 = fixtures::random_rational(rng, -1, 1, 8);
        Rational r = fixtures::random_rational(rng, 0, 1, 8) + Rational(1, 8);
        Box big, small;
        big.set(in[0], Interval::closed(c0 - r, c0 + r));
        big.set(in[1], Interval::closed(c1 - r, c1 + r));
        small.set(in[0], Interval::closed(c0 - r / 2, c0 + r / 2));
        small.set(in[1], Interval::closed(c1 - r / 2, c1 + r / 2));
        BoxSimplifier sb(propagate_bounds(sys, big)), ss(propagate_bounds(sys, small));
        for (const auto& c : sys.conditions) {
            if (auto v = sb.decide(c)) {
                EXPECT_EQ(ss.decide(c), v);
            }
        }
    }
}

TEST(BoundPropagation, SimplificationPreservesRobustnessMass)
{
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        NeuralNet nn = random_net(rng, {2, 4, 4, 1});
        std::vector<Variable> in{Variable::real("a"), Variable::real("b")};
        SystemEncoding sys = encode_relu_nn(nn, in);
        std::vector<Rational> x0{fixtures::random_rational(rng, -1, 1, 4), fixtures::random_rational(rng, -1, 1, 4)};
        Box support;
        support.set(in[0], Interval::closed(-2, 2));
        support.set(in[1], Interval::closed(-2, 2));
        WeightDag prior = uniform_prior(in, support);
        PropertyEncoding p = local_robustness(sys, x0, nn.classify(x0), Rational(1, 4), prior);
        Box b = propagate_bounds(sys, bounds_from_precondition(p.delta_pre, prior.support()));
        SystemEncoding s = simplify_stable_conditions(sys, b);
        PropertyEncoding q = p;
        q.systems = {s};
        q.delta_post = simplify_formula(p.delta_post, b);
        EXPECT_EQ(wmi(q.delta_pre && q.delta_post, q.weight()).value, wmi(p.delta_pre && p.delta_post, p.weight()).value);
        EXPECT_LE(atoms_of(s.chi).size(), atoms_of(sys.chi).size());
    }
}

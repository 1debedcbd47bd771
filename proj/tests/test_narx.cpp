#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

#include "airq/dataset.hpp"
#include "airq/error.hpp"
#include "airq/narx.hpp"
#include "airq/serialize.hpp"

using namespace airq;
using namespace airq::narx;

namespace {

std::filesystem::path temp_path(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "airq_test_narx";
    std::filesystem::create_directories(dir);
    return dir / name;
}

data::SupervisedFrame frame_from(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
    data::SupervisedFrame f;
    f.inputs = inputs;
    f.targets = targets;
    for (Eigen::Index c = 0; c < inputs.cols(); ++c)
        f.feature_names.push_back("f" + std::to_string(c));
    return f;
}

}  // namespace

TEST_CASE("parameter count per layer") {
    NarxTopology t;
    t.inputs = 2;
    t.hidden = {5};
    CHECK(t.parameter_count() == 21);  // (2+1)*5 + (5+1)*1
    CHECK(t.layer_sizes() == std::vector<int>{2, 5, 1});

    NarxTopology deep;
    deep.inputs = 3;
    deep.hidden = {4, 2};
    CHECK(deep.parameter_count() == (3 + 1) * 4 + (4 + 1) * 2 + (2 + 1) * 1);

    NarxTopology linear;
    linear.inputs = 4;
    linear.hidden = {};
    CHECK(linear.parameter_count() == 5);
    CHECK(linear.layer_sizes() == std::vector<int>{4, 1});
}

TEST_CASE("topology validation") {
    NarxTopology t;
    t.inputs = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t.inputs = 2;
    t.hidden = {3, 0};
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t.hidden = {3};
    t.delay = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t.delay = 1;
    CHECK_NOTHROW(t.validate());
}

TEST_CASE("weight initialization is deterministic per seed") {
    NarxTopology t;
    t.inputs = 3;
    t.hidden = {6};
    auto a = init_weights(t, 42);
    auto b = init_weights(t, 42);
    CHECK(a.weights == b.weights);

    auto c = init_weights(t, 43);
    CHECK(a.weights != c.weights);
}

TEST_CASE("initial weights respect the fan-in bound and biases start at zero") {
    NarxTopology t;
    t.inputs = 4;
    t.hidden = {3};
    auto net = init_weights(t, 7);
    REQUIRE(net.weights.size() == t.parameter_count());

    auto w1 = net.layer_weights(0);  // 3x4, fan_in 4 -> bound 0.5
    for (Eigen::Index i = 0; i < w1.rows(); ++i)
        for (Eigen::Index j = 0; j < w1.cols(); ++j) CHECK(std::abs(w1(i, j)) <= 0.5);
    auto w2 = net.layer_weights(1);  // 1x3, fan_in 3
    for (Eigen::Index j = 0; j < w2.cols(); ++j)
        CHECK(std::abs(w2(0, j)) <= 1.0 / std::sqrt(3.0));

    CHECK(net.layer_bias(0).isZero(0.0));
    CHECK(net.layer_bias(1).isZero(0.0));
}

TEST_CASE("forward of an all-zero network is zero") {
    NarxTopology t;
    t.inputs = 3;
    t.hidden = {4, 2};
    NarxNetwork net;
    net.topology = t;
    net.weights = Eigen::VectorXd::Zero(t.parameter_count());
    net.norm = data::NormalizationParams::identity(3);

    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    CHECK(forward(net, x) == 0.0);
}

TEST_CASE("forward matches a hand evaluation of a 1-1-1 network") {
    NarxTopology t;
    t.inputs = 1;
    t.hidden = {1};
    NarxNetwork net;
    net.topology = t;
    net.weights.resize(4);
    net.weights << 0.5, 0.0, 2.0, 0.1;  // hidden w,b then output w,b
    net.norm = data::NormalizationParams::identity(1);

    Eigen::VectorXd x(1);
    x << 1.0;
    double expected = 2.0 * std::tanh(0.5) + 0.1;
    CHECK(forward(net, x) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(expected == doctest::Approx(1.0243).epsilon(1e-4));
}

TEST_CASE("forward is invariant under hidden-unit permutation") {
    NarxTopology t;
    t.inputs = 2;
    t.hidden = {3};
    auto net = init_weights(t, 11);

    // Swap hidden units 0 and 2 together with their in/out weights.
    NarxNetwork swapped = net;
    auto w1 = net.layer_weights(0);
    auto b1 = net.layer_bias(0);
    auto w2 = net.layer_weights(1);
    // Layer 0: rows of the 3x2 matrix at offset 0, biases at offset 6.
    for (int j = 0; j < 2; ++j) {
        swapped.weights[0 * 2 + j] = w1(2, j);
        swapped.weights[2 * 2 + j] = w1(0, j);
    }
    swapped.weights[6 + 0] = b1[2];
    swapped.weights[6 + 2] = b1[0];
    // Layer 1: the 1x3 matrix starts at offset 9.
    swapped.weights[9 + 0] = w2(0, 2);
    swapped.weights[9 + 2] = w2(0, 0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd x(2);
        x << coord(rng), coord(rng);
        CHECK(forward(net, x) == doctest::Approx(forward(swapped, x)).epsilon(1e-12));
    }
}

TEST_CASE("forward rejects inputs of the wrong dimension") {
    auto net = init_weights(NarxTopology{2, {3}, 1, Activation::Tanh}, 0);
    Eigen::VectorXd x(3);
    x.setZero();
    CHECK_THROWS_AS(forward(net, x), DataError);
}

TEST_CASE("forward caches bounded tanh activations") {
    NarxTopology t;
    t.inputs = 2;
    t.hidden = {5, 4};
    auto net = init_weights(t, 19);
    net.weights *= 10.0;  // push the units toward saturation

    Eigen::VectorXd x(2);
    x << 0.9, -0.4;
    ForwardCache cache;
    double y = forward(net, x, &cache);

    REQUIRE(cache.out.size() == 4);  // input, two hidden, output
    CHECK(cache.out[0] == x);
    CHECK(cache.out.back()[0] == y);
    for (std::size_t layer = 1; layer + 1 < cache.out.size(); ++layer)
        for (Eigen::Index i = 0; i < cache.out[layer].size(); ++i) {
            CHECK(cache.out[layer][i] > -1.0);
            CHECK(cache.out[layer][i] < 1.0);
            CHECK(cache.out[layer][i] == std::tanh(cache.net[layer - 1][i]));
        }
}

TEST_CASE("forward is continuous with a weight-norm Lipschitz bound") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    const double eps = 1e-6;
    for (int trial = 0; trial < 5; ++trial) {
        NarxTopology t;
        t.inputs = 3;
        t.hidden = {6};
        auto net = init_weights(t, 100 + static_cast<std::uint64_t>(trial));

        double lipschitz = 1.0;
        for (int k = 0; k < net.layer_count(); ++k) {
            auto w = net.layer_weights(k);
            double max_row = 0.0;
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                max_row = std::max(max_row, w.row(i).cwiseAbs().sum());
            lipschitz *= max_row;
        }

        Eigen::VectorXd x(3);
        x << coord(rng), coord(rng), coord(rng);
        double base = forward(net, x);
        for (int dim = 0; dim < 3; ++dim) {
            Eigen::VectorXd xp = x;
            xp[dim] += eps;
            CHECK(std::abs(forward(net, xp) - base) <= lipschitz * eps + 1e-15);
        }
    }
}

TEST_CASE("predict_series of an empty frame is empty") {
    auto net = init_weights(NarxTopology{1, {2}, 1, Activation::Tanh}, 0);
    net.norm = data::NormalizationParams::identity(1);
    data::SupervisedFrame frame;
    frame.inputs.resize(0, 1);
    frame.targets.resize(0);
    CHECK(predict_series(net, frame).size() == 0);
}

TEST_CASE("an identity-weight linear network reproduces its lagged input") {
    NarxNetwork net;
    net.topology = NarxTopology{1, {}, 1, Activation::Tanh};
    net.weights.resize(2);
    net.weights << 1.0, 0.0;
    net.norm = data::NormalizationParams::identity(1);

    Eigen::MatrixXd inputs(3, 1);
    inputs << 0.2, -0.5, 0.9;
    auto frame = frame_from(inputs, Eigen::VectorXd::Zero(3));
    net.feature_names = frame.feature_names;

    auto pred = predict_series(net, frame);
    REQUIRE(pred.size() == 3);
    // The identity scaling still rounds twice ((x + 1) - 1), so allow one ulp.
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(pred[i] - inputs(i, 0)) <= 1e-15 * std::max(1.0, std::abs(inputs(i, 0))));
}

TEST_CASE("identity hidden activation composes to a linear map") {
    NarxNetwork net;
    net.topology = NarxTopology{1, {1}, 1, Activation::Identity};
    net.weights.resize(4);
    net.weights << 3.0, 1.0, 0.5, -2.0;  // y = 0.5*(3x + 1) - 2 = 1.5x - 1.5

    Eigen::VectorXd x(1);
    x << 2.0;
    CHECK(forward(net, x) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("predict_series rejects mismatched feature names") {
    auto net = init_weights(NarxTopology{1, {2}, 1, Activation::Tanh}, 0);
    net.feature_names = {"no2[t-1]"};
    net.norm = data::NormalizationParams::identity(1);

    Eigen::MatrixXd inputs(2, 1);
    inputs << 0.0, 1.0;
    auto frame = frame_from(inputs, Eigen::VectorXd::Zero(2));  // features "f0"
    CHECK_THROWS_AS(predict_series(net, frame), ConfigError);
}

TEST_CASE("predict_series normalizes inputs and denormalizes outputs") {
    // Identity map in normalized space, scaling [0,10] <-> [-1,1] outside.
    NarxNetwork net;
    net.topology = NarxTopology{1, {}, 1, Activation::Tanh};
    net.weights.resize(2);
    net.weights << 1.0, 0.0;
    net.norm.features = {data::MinMax{0.0, 10.0}};
    net.norm.target = data::MinMax{0.0, 10.0};

    Eigen::MatrixXd inputs(3, 1);
    inputs << 0.0, 2.5, 10.0;
    auto frame = frame_from(inputs, Eigen::VectorXd::Zero(3));
    net.feature_names = frame.feature_names;

    auto pred = predict_series(net, frame);
    REQUIRE(pred.size() == 3);
    CHECK(pred[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(pred[1] == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(pred[2] == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("predict_series equals row-by-row forward calls") {
    NarxTopology t;
    t.inputs = 2;
    t.hidden = {4};
    auto net = init_weights(t, 5);
    net.norm = data::NormalizationParams::identity(2);

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    Eigen::MatrixXd inputs(10, 2);
    for (Eigen::Index r = 0; r < 10; ++r) {
        inputs(r, 0) = coord(rng);
        inputs(r, 1) = coord(rng);
    }
    auto frame = frame_from(inputs, Eigen::VectorXd::Zero(10));
    net.feature_names = frame.feature_names;

    auto batched = predict_series(net, frame);
    Eigen::MatrixXd normalized = data::apply_normalization(net.norm, frame.inputs);
    for (Eigen::Index r = 0; r < 10; ++r) {
        Eigen::VectorXd x = normalized.row(r).transpose();
        CHECK(batched[r] == data::invert_norm(forward(net, x), net.norm.target));
    }
}

TEST_CASE("model files round-trip bit-exactly") {
    NarxTopology t;
    t.inputs = 2;
    t.hidden = {3};
    auto net = init_weights(t, 77);
    net.feature_names = {"temperature", "no2[t-1]"};
    net.norm.features = {data::MinMax{-3.0, 18.5}, data::MinMax{0.0, 187.2}};
    net.norm.target = data::MinMax{0.0, 187.2};

    auto path = temp_path("model.json");
    save_model(net, path);
    auto loaded = load_model(path);

    CHECK(loaded.topology.inputs == net.topology.inputs);
    CHECK(loaded.topology.hidden == net.topology.hidden);
    CHECK(loaded.topology.delay == net.topology.delay);
    CHECK(loaded.topology.hidden_activation == net.topology.hidden_activation);
    CHECK(loaded.feature_names == net.feature_names);
    CHECK(loaded.weights == net.weights);  // bitwise
    REQUIRE(loaded.norm.features.size() == net.norm.features.size());
    for (std::size_t i = 0; i < net.norm.features.size(); ++i) {
        CHECK(loaded.norm.features[i].min == net.norm.features[i].min);
        CHECK(loaded.norm.features[i].max == net.norm.features[i].max);
    }
    CHECK(loaded.norm.target.min == net.norm.target.min);
    CHECK(loaded.norm.target.max == net.norm.target.max);
    std::filesystem::remove(path);
}

TEST_CASE("model loading validates the file") {
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ConfigError);

    auto path = temp_path("not_a_model.json");
    serialize::write_json_atomic(nlohmann::json{{"model", "other"}}, path);
    CHECK_THROWS_AS(load_model(path), ConfigError);
    std::filesystem::remove(path);
}

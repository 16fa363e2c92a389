#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "webrank/bpnn.hpp"
#include "webrank/io.hpp"
#include "webrank/rng.hpp"

using namespace webrank;

namespace {

std::vector<double> flatten(const Gradients& g) {
  std::vector<double> out(g.W.data().begin(), g.W.data().end());
  out.insert(out.end(), g.theta.begin(), g.theta.end());
  out.insert(out.end(), g.V.data().begin(), g.V.data().end());
  out.insert(out.end(), g.phi.begin(), g.phi.end());
  return out;
}

std::vector<double> random_input(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform();
  return x;
}

std::vector<Sample> xor_like(Rng& rng, std::size_t n) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto x = random_input(rng, 5);
    const double t = (x[0] > 0.5) != (x[1] > 0.5) ? 0.9 : 0.1;
    out.push_back({x, {t}});
  }
  return out;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "webrank_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Init, ShapesAndRange) {
  const auto net = init_network(1);
  EXPECT_EQ(net.sizes, (LayerSizes{5, 4, 1}));
  EXPECT_EQ(net.W.rows(), 4u);
  EXPECT_EQ(net.W.cols(), 5u);
  EXPECT_EQ(net.theta.size(), 4u);
  EXPECT_EQ(net.V.rows(), 1u);
  EXPECT_EQ(net.V.cols(), 4u);
  EXPECT_EQ(net.phi.size(), 1u);
  auto in_range = [](double v) { return v >= -0.5 && v <= 0.5; };
  for (double v : net.W.data()) EXPECT_TRUE(in_range(v));
  for (double v : net.theta) EXPECT_TRUE(in_range(v));
  for (double v : net.V.data()) EXPECT_TRUE(in_range(v));
  for (double v : net.phi) EXPECT_TRUE(in_range(v));
}

TEST(Init, DeterministicPerSeed) {
  EXPECT_EQ(init_network(9), init_network(9));
  EXPECT_NE(init_network(9), init_network(10));
}

TEST(Init, EmptyLayerIsAContractViolation) {
  EXPECT_THROW(init_network(1, {0, 4, 1}), ContractViolation);
  EXPECT_THROW(init_network(1, {5, 0, 1}), ContractViolation);
  EXPECT_THROW(init_network(1, {5, 4, 0}), ContractViolation);
}

TEST(Activations, TansigReferenceValue) {
  // tanh(1) to 18 significant digits.
  EXPECT_NEAR(tansig(1.0), 0.761594155955764888, 1e-15);
  EXPECT_DOUBLE_EQ(tansig(0.0), 0.0);
  EXPECT_DOUBLE_EQ(logistic(0.0), 0.5);
}

TEST(Activations, TansigIsOddAndBounded) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.uniform(-20.0, 20.0);
    EXPECT_NEAR(tansig(-s), -tansig(s), 1e-12);
    EXPECT_GE(tansig(s), -1.0);
    EXPECT_LE(tansig(s), 1.0);
    EXPECT_NEAR(tansig(s), oracle::closed_form_tansig(s), 1e-15);
    EXPECT_NEAR(tansig(s), std::tanh(s), 1e-12);
  }
}

TEST(Activations, NamesRoundTrip) {
  for (auto a : {Activation::tansig, Activation::logistic, Activation::linear}) {
    EXPECT_EQ(parse_activation(to_string(a)), a);
  }
  EXPECT_FALSE(parse_activation("relu").has_value());
}

TEST(Forward, ZeroParametersGiveOneHalf) {
  BpNetwork net = init_network(1);
  for (auto& v : net.W.data()) v = 0.0;
  for (auto& v : net.theta) v = 0.0;
  for (auto& v : net.V.data()) v = 0.0;
  for (auto& v : net.phi) v = 0.0;
  const std::vector<double> x = {0.3, 0.1, 0.9, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(predict(net, x)[0], 0.5);
}

TEST(Forward, HandBuiltNetworkMatchesDenseOracle) {
  BpNetwork net = init_network(1, {2, 2, 1}, Activation::tansig, Activation::tansig);
  const std::vector<double> W = {0.1, -0.2, 0.3, 0.4}, theta = {0.05, -0.1}, V = {0.5, -0.6}, phi = {0.2};
  std::copy(W.begin(), W.end(), net.W.data().begin());
  net.theta = theta;
  std::copy(V.begin(), V.end(), net.V.data().begin());
  net.phi = phi;
  const std::vector<double> x = {1.0, 2.0};
  EXPECT_NEAR(predict(net, x)[0], oracle::dense_forward(W, theta, V, phi, x, true)[0], 1e-12);
  // s = (0.1 - 0.4 - 0.05, 0.3 + 0.8 + 0.1)
  const double h0 = std::tanh(-0.35), h1 = std::tanh(1.2);
  EXPECT_NEAR(predict(net, x)[0], std::tanh(0.5 * h0 - 0.6 * h1 - 0.2), 1e-12);
}

TEST(Forward, RandomNetworksMatchDenseOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = init_network(static_cast<std::uint64_t>(trial), {5, 4, 1});
    const auto x = random_input(rng, 5);
    const std::vector<double> W(net.W.data().begin(), net.W.data().end());
    const std::vector<double> V(net.V.data().begin(), net.V.data().end());
    EXPECT_NEAR(predict(net, x)[0], oracle::dense_forward(W, net.theta, V, net.phi, x, false)[0], 1e-12);
  }
}

TEST(Forward, WrongInputSizeIsAContractViolation) {
  const auto net = init_network(1);
  EXPECT_THROW(forward(net, std::vector<double>{1.0, 2.0}), ContractViolation);
}

TEST(Backprop, MatchesCentralDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto output = trial % 2 == 0 ? Activation::logistic : Activation::tansig;
    const auto net = init_network(100 + static_cast<std::uint64_t>(trial), {5, 4, 1}, Activation::tansig, output);
    const auto x = random_input(rng, 5);
    const std::vector<double> t = {rng.uniform()};
    const auto analytic = flatten(backprop(net, x, t));
    const auto numeric = oracle::numeric_gradient(net, x, t, 1e-5);
    ASSERT_EQ(analytic.size(), numeric.size());
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric[i]));
      EXPECT_LT(std::abs(analytic[i] - numeric[i]) / denom, 1e-4) << "trial " << trial << " param " << i;
    }
  }
}

TEST(Backprop, SmallStepDoesNotIncreaseLoss) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto net = init_network(200 + static_cast<std::uint64_t>(trial));
    const auto x = random_input(rng, 5);
    const std::vector<double> t = {rng.uniform()};
    const double before = example_loss(net, x, t);
    apply_gradients(net, backprop(net, x, t), 1e-3);
    EXPECT_LE(example_loss(net, x, t), before + 1e-15);
  }
}

TEST(Train, ZeroEpochsLeavesNetworkUnchanged) {
  Rng rng(6);
  const auto samples = xor_like(rng, 20);
  const auto net = init_network(7);
  const auto result = train(net, samples, TrainConfig{0.1, 0, 1, true});
  EXPECT_EQ(result.net, net);
  EXPECT_TRUE(result.loss_history.empty());
}

TEST(Train, LossDecreases) {
  Rng rng(7);
  const auto samples = xor_like(rng, 60);
  const auto result = train(init_network(8), samples, TrainConfig{0.1, 200, 1, true});
  ASSERT_EQ(result.loss_history.size(), 200u);
  EXPECT_LT(result.loss_history.back(), result.initial_loss);
}

TEST(Train, DeterministicForSeed) {
  Rng rng(8);
  const auto samples = xor_like(rng, 30);
  const auto a = train(init_network(1), samples, TrainConfig{0.1, 20, 5, true});
  const auto b = train(init_network(1), samples, TrainConfig{0.1, 20, 5, true});
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(Train, DivergenceIsReported) {
  const std::vector<Sample> samples = {{{1, 1, 1, 1, 1}, {1e6}}, {{0, 1, 0, 1, 0}, {-1e6}}};
  const auto net = init_network(1, {5, 4, 1}, Activation::tansig, Activation::linear);
  try {
    train(net, samples, TrainConfig{10.0, 100, 1, false});
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_GE(e.epoch, 1u);
  }
}

TEST(Train, BadConfigurationIsAContractViolation) {
  const std::vector<Sample> samples = {{{1, 1, 1, 1, 1}, {1}}};
  EXPECT_THROW(train(init_network(1), samples, TrainConfig{0.0, 1, 1, true}), ContractViolation);
  EXPECT_THROW(train(init_network(1), std::vector<Sample>{}, TrainConfig{0.1, 1, 1, true}), ContractViolation);
}

TEST(ModelFile, SaveLoadPreservesPredictions) {
  Rng rng(9);
  const auto samples = xor_like(rng, 30);
  const auto net = train(init_network(3), samples, TrainConfig{0.1, 10, 1, true}).net;
  const auto path = temp_dir() / "model.json";
  save_model(net, path);
  const auto loaded = load_model(path);
  EXPECT_EQ(loaded, net);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_input(rng, 5);
    EXPECT_EQ(predict(loaded, x), predict(net, x));
  }
}

TEST(ModelFile, TruncatedFileIsRejected) {
  const auto text = serialize_model(init_network(1));
  EXPECT_THROW(parse_model(text.substr(0, text.size() / 2)), LoadError);
  EXPECT_THROW(load_model(temp_dir() / "no_such_model.json"), IoError);
}

TEST(ModelFile, ThresholdCountMustMatchHiddenSize) {
  auto obj = nlohmann::json::parse(serialize_model(init_network(1)));
  obj["theta"] = {0.1, 0.2, 0.3};
  EXPECT_THROW(parse_model(obj.dump()), LoadError);
}

TEST(ModelFile, UnknownActivationIsRejected) {
  auto obj = nlohmann::json::parse(serialize_model(init_network(1)));
  obj["hidden_activation"] = "relu";
  EXPECT_THROW(parse_model(obj.dump()), LoadError);
}

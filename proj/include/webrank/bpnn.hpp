#pragma once

// Three-layer back-propagation network.
//
//   s_j = sum_i W_ji x_i - theta_j      h_j = g(s_j)
//   r_k = sum_j V_kj h_j - phi_k        y_k = f(r_k)
//
// g defaults to tansig, f to the logistic sigmoid. Training is per-example
// gradient descent on 1/2 sum_k (y_k - t_k)^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "webrank/errors.hpp"
#include "webrank/io.hpp"
#include "webrank/rng.hpp"

namespace webrank {

enum class Activation { tansig, logistic, linear };

constexpr std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tansig: return "tansig";
    case Activation::logistic: return "logistic";
    case Activation::linear: return "linear";
  }
  return "tansig";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
  for (auto a : {Activation::tansig, Activation::logistic, Activation::linear}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

// 2 / (1 + e^(-2s)) - 1
inline double tansig(double s) { return 2.0 / (1.0 + std::exp(-2.0 * s)) - 1.0; }

inline double logistic(double s) { return 1.0 / (1.0 + std::exp(-s)); }

inline double activate(Activation a, double s) {
  switch (a) {
    case Activation::tansig: return tansig(s);
    case Activation::logistic: return logistic(s);
    case Activation::linear: return s;
  }
  return s;
}

// Derivative expressed through the activation's own output.
inline double activation_slope(Activation a, double out) {
  switch (a) {
    case Activation::tansig: return 1.0 - out * out;
    case Activation::logistic: return out * (1.0 - out);
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct LayerSizes {
  std::size_t input = 5;
  std::size_t hidden = 4;
  std::size_t output = 1;

  bool operator==(const LayerSizes&) const = default;
};

struct BpNetwork {
  LayerSizes sizes;
  Activation hidden_activation = Activation::tansig;
  Activation output_activation = Activation::logistic;
  Matrix W;                   // hidden x input
  std::vector<double> theta;  // hidden thresholds
  Matrix V;                   // output x hidden
  std::vector<double> phi;    // output thresholds

  bool operator==(const BpNetwork&) const = default;
};

inline constexpr double kInitRange = 0.5;

// Weights and thresholds uniform in [-0.5, 0.5], drawn in the order
// W, theta, V, phi.
inline BpNetwork init_network(std::uint64_t seed, LayerSizes sizes = {},
                              Activation hidden = Activation::tansig,
                              Activation output = Activation::logistic) {
  if (sizes.input == 0 || sizes.hidden == 0 || sizes.output == 0) {
    throw ContractViolation("every layer needs at least one neuron");
  }
  BpNetwork net{sizes, hidden, output, Matrix(sizes.hidden, sizes.input),
                std::vector<double>(sizes.hidden), Matrix(sizes.output, sizes.hidden),
                std::vector<double>(sizes.output)};
  Rng rng(mix_seed(seed, 21));
  auto draw = [&rng] { return rng.uniform(-kInitRange, kInitRange); };
  for (auto& w : net.W.data()) w = draw();
  for (auto& t : net.theta) t = draw();
  for (auto& v : net.V.data()) v = draw();
  for (auto& p : net.phi) p = draw();
  return net;
}

struct ForwardTrace {
  std::vector<double> s;  // hidden net input
  std::vector<double> h;  // hidden output
  std::vector<double> r;  // output net input
  std::vector<double> y;  // network output
};

inline ForwardTrace forward(const BpNetwork& net, std::span<const double> x) {
  if (x.size() != net.sizes.input) {
    throw ContractViolation("forward: expected " + std::to_string(net.sizes.input) + " inputs, got " +
                            std::to_string(x.size()));
  }
  const auto J = net.sizes.hidden;
  const auto K = net.sizes.output;
  ForwardTrace t{std::vector<double>(J), std::vector<double>(J), std::vector<double>(K),
                 std::vector<double>(K)};
  for (std::size_t j = 0; j < J; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += net.W(j, i) * x[i];
    t.s[j] = acc - net.theta[j];
    t.h[j] = activate(net.hidden_activation, t.s[j]);
  }
  for (std::size_t k = 0; k < K; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < J; ++j) acc += net.V(k, j) * t.h[j];
    t.r[k] = acc - net.phi[k];
    t.y[k] = activate(net.output_activation, t.r[k]);
  }
  return t;
}

inline std::vector<double> predict(const BpNetwork& net, std::span<const double> x) {
  return forward(net, x).y;
}

// Index of the strongest output.
inline std::size_t argmax(std::span<const double> y) {
  return static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
}

inline double squared_error(std::span<const double> y, std::span<const double> target) {
  double loss = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double d = y[k] - target[k];
    loss += 0.5 * d * d;
  }
  return loss;
}

inline double example_loss(const BpNetwork& net, std::span<const double> x, std::span<const double> target) {
  return squared_error(forward(net, x).y, target);
}

// d loss / d parameter, same layout as the network.
struct Gradients {
  Matrix W;
  std::vector<double> theta;
  Matrix V;
  std::vector<double> phi;
  double loss = 0.0;
};

inline Gradients backprop(const BpNetwork& net, std::span<const double> x, std::span<const double> target) {
  if (target.size() != net.sizes.output) throw ContractViolation("backprop: target size mismatch");
  const auto t = forward(net, x);
  const auto I = net.sizes.input;
  const auto J = net.sizes.hidden;
  const auto K = net.sizes.output;
  Gradients g{Matrix(J, I), std::vector<double>(J), Matrix(K, J), std::vector<double>(K),
              squared_error(t.y, target)};

  std::vector<double> out_delta(K);
  for (std::size_t k = 0; k < K; ++k) {
    out_delta[k] = (t.y[k] - target[k]) * activation_slope(net.output_activation, t.y[k]);
    for (std::size_t j = 0; j < J; ++j) g.V(k, j) = out_delta[k] * t.h[j];
    g.phi[k] = -out_delta[k];  // thresholds enter with a minus sign
  }
  for (std::size_t j = 0; j < J; ++j) {
    double back = 0.0;
    for (std::size_t k = 0; k < K; ++k) back += out_delta[k] * net.V(k, j);
    const double delta = back * activation_slope(net.hidden_activation, t.h[j]);
    for (std::size_t i = 0; i < I; ++i) g.W(j, i) = delta * x[i];
    g.theta[j] = -delta;
  }
  return g;
}

inline void apply_gradients(BpNetwork& net, const Gradients& g, double learning_rate) {
  auto step = [learning_rate](std::span<double> p, std::span<const double> d) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * d[i];
  };
  step(net.W.data(), g.W.data());
  step(net.theta, g.theta);
  step(net.V.data(), g.V.data());
  step(net.phi, g.phi);
}

struct Sample {
  std::vector<double> input;
  std::vector<double> target;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

struct TrainResult {
  BpNetwork net;
  double initial_loss = 0.0;
  std::vector<double> loss_history;  // mean loss over the set after each epoch
};

inline double mean_loss(const BpNetwork& net, std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : samples) total += example_loss(net, s.input, s.target);
  return total / static_cast<double>(samples.size());
}

inline TrainResult train(BpNetwork net, std::span<const Sample> samples, const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ContractViolation("learning rate must be positive");
  }
  if (cfg.epochs > 0 && samples.empty()) throw ContractViolation("cannot train on an empty sample set");

  TrainResult result{std::move(net), 0.0, {}};
  result.initial_loss = mean_loss(result.net, samples);
  result.loss_history.reserve(cfg.epochs);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(cfg.seed, 31));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) rng.shuffle(order.begin(), order.end());
    for (auto idx : order) {
      const auto g = backprop(result.net, samples[idx].input, samples[idx].target);
      apply_gradients(result.net, g, cfg.learning_rate);
    }
    const double loss = mean_loss(result.net, samples);
    if (!std::isfinite(loss)) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1), epoch + 1);
    }
    result.loss_history.push_back(loss);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

inline std::string serialize_model(const BpNetwork& net) {
  nlohmann::ordered_json obj;
  obj["sizes"] = {net.sizes.input, net.sizes.hidden, net.sizes.output};
  obj["hidden_activation"] = std::string(to_string(net.hidden_activation));
  obj["output_activation"] = std::string(to_string(net.output_activation));
  auto flat = [](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); };
  obj["W"] = flat(net.W.data());
  obj["theta"] = net.theta;
  obj["V"] = flat(net.V.data());
  obj["phi"] = net.phi;
  return obj.dump(1) + "\n";
}

inline void save_model(const BpNetwork& net, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(net));
}

inline BpNetwork parse_model(std::string_view text) {
  auto obj = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) throw LoadError("model file is not a JSON object");

  auto numbers = [&obj](const char* key, std::size_t expected) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) throw LoadError(std::string("model: missing array '") + key + "'");
    if (it->size() != expected) {
      throw LoadError(std::string("model: '") + key + "' has " + std::to_string(it->size()) +
                      " entries, expected " + std::to_string(expected));
    }
    std::vector<double> out;
    for (const auto& v : *it) {
      if (!v.is_number()) throw LoadError(std::string("model: non-numeric entry in '") + key + "'");
      out.push_back(v.get<double>());
      if (!std::isfinite(out.back())) throw LoadError(std::string("model: non-finite entry in '") + key + "'");
    }
    return out;
  };
  auto activation = [&obj](const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) throw LoadError(std::string("model: missing '") + key + "'");
    auto a = parse_activation(it->get<std::string>());
    if (!a) throw LoadError("model: unknown activation '" + it->get<std::string>() + "'");
    return *a;
  };

  auto sizes_it = obj.find("sizes");
  if (sizes_it == obj.end() || !sizes_it->is_array() || sizes_it->size() != 3) {
    throw LoadError("model: 'sizes' must be [input, hidden, output]");
  }
  for (const auto& v : *sizes_it) {
    if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) throw LoadError("model: layer sizes must be positive integers");
  }
  BpNetwork net;
  net.sizes = {(*sizes_it)[0].get<std::size_t>(), (*sizes_it)[1].get<std::size_t>(),
               (*sizes_it)[2].get<std::size_t>()};
  net.hidden_activation = activation("hidden_activation");
  net.output_activation = activation("output_activation");
  const auto I = net.sizes.input, J = net.sizes.hidden, K = net.sizes.output;

  net.W = Matrix(J, I);
  auto w = numbers("W", J * I);
  std::copy(w.begin(), w.end(), net.W.data().begin());
  net.theta = numbers("theta", J);
  net.V = Matrix(K, J);
  auto v = numbers("V", K * J);
  std::copy(v.begin(), v.end(), net.V.data().begin());
  net.phi = numbers("phi", K);
  return net;
}

inline BpNetwork load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace webrank

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "actiml/matrix.hpp"

namespace actiml {

// Feedforward binary classifier: input -> h1 ReLU -> h2 ReLU -> 1 sigmoid.
// init_network always builds the production 64/32 shape; make_network exists
// so tests can hand-assemble arbitrarily small nets.
struct NetworkParameters {
    Matrix W1;               // [h1 x d]
    std::vector<double> b1;  // [h1]
    Matrix W2;               // [h2 x h1]
    std::vector<double> b2;  // [h2]
    Matrix W3;               // [1 x h2]
    std::vector<double> b3;  // [1]

    std::size_t input_width() const { return W1.cols; }

    friend bool operator==(const NetworkParameters&,
                           const NetworkParameters&) = default;
};

// Gradients mirror the parameter tensors exactly.
using Gradients = NetworkParameters;

struct TrainConfig {
    double learning_rate = 0.001;
    int epochs = 100;
    int batch_size = 16;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int seed = 42;
    double threshold = 0.5;
    bool shuffle = true;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamState {
    NetworkParameters first_moment;
    NetworkParameters second_moment;
    std::int64_t step_count = 0;
};

struct TrainedNetwork {
    NetworkParameters params;
    std::vector<double> loss_trace;  // mean training loss after each epoch
};

// Zero-filled parameters with the given layer widths.
NetworkParameters make_network(std::size_t d, std::size_t h1, std::size_t h2);

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
// Draw order: W1 row-major, then W2, then W3, all from Rng(seed).
NetworkParameters init_network(std::size_t d, std::uint64_t seed);

double sigmoid(double z);

// Probability sigma(W3 relu(W2 relu(W1 x + b1) + b2) + b3). The raw sigmoid
// may saturate to exactly 0 or 1 in doubles; the loss clamp handles that.
double forward(const NetworkParameters& params, std::span<const double> x);

// Clamped binary cross-entropy of a single prediction; the clamp bound is
// kClampEpsilon on both sides.
inline constexpr double kClampEpsilon = 1e-7;
double bce_loss(double p, int y);

// Mean clamped BCE over all rows. This is the quantity backward
// differentiates and the per-epoch value train_network records.
double mean_bce_loss(const NetworkParameters& params, const Matrix& X,
                     std::span<const int> y);

// Exact gradients of mean_bce_loss. A sample whose probability lies outside
// the clamp band contributes zero gradient (the clamped loss is flat there);
// the ReLU subgradient at 0 is 0.
Gradients backward(const NetworkParameters& params, const Matrix& batch_X,
                   std::span<const int> batch_y);

AdamState make_adam_state(const NetworkParameters& params);

// Bias-corrected Adam update in place; increments state.step_count.
void adam_step(NetworkParameters& params, AdamState& state,
               const Gradients& grads, const TrainConfig& config);

// Mini-batch Adam on shuffled epochs. Initialization draws from Rng(seed);
// the epoch shuffle draws from the separate stream Rng(split_seed(seed, 1)),
// carried across epochs. The final batch of an epoch may be short.
TrainedNetwork train_network(const Matrix& X, std::span<const int> y,
                             const TrainConfig& config);

// Label 1 iff forward(x) >= threshold.
std::vector<int> predict_network(const NetworkParameters& params,
                                 const Matrix& X, double threshold = 0.5);

nlohmann::ordered_json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

nlohmann::ordered_json network_to_json(const NetworkParameters& params);
NetworkParameters network_from_json(const nlohmann::json& doc);

void save_network(const NetworkParameters& params, const std::string& path);
NetworkParameters load_network(const std::string& path);

void write_loss_trace_csv(std::span<const double> trace,
                          const std::string& path);

} // namespace actiml

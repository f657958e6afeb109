#include "actiml/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "actiml/csv.hpp"
#include "actiml/errors.hpp"
#include "actiml/rng.hpp"

namespace actiml {

namespace {

constexpr std::size_t kHidden1 = 64;
constexpr std::size_t kHidden2 = 32;

void check_widths(const NetworkParameters& params) {
    const bool consistent =
        params.W1.rows == params.b1.size() && params.W2.rows == params.b2.size() &&
        params.W3.rows == 1 && params.b3.size() == 1 &&
        params.W2.cols == params.W1.rows && params.W3.cols == params.W2.rows &&
        params.W1.rows >= 1 && params.W2.rows >= 1 && params.W1.cols >= 1;
    if (!consistent) {
        throw ValidationError("network: inconsistent parameter shapes");
    }
}

void check_same_shape(const NetworkParameters& a, const NetworkParameters& b,
                      const char* what) {
    const bool same =
        a.W1.rows == b.W1.rows && a.W1.cols == b.W1.cols &&
        a.W2.rows == b.W2.rows && a.W2.cols == b.W2.cols &&
        a.W3.rows == b.W3.rows && a.W3.cols == b.W3.cols &&
        a.b1.size() == b.b1.size() && a.b2.size() == b.b2.size() &&
        a.b3.size() == b.b3.size();
    if (!same) throw ValidationError(std::string(what) + ": shape mismatch");
}

void check_labels(std::span<const int> y) {
    for (const int label : y) {
        if (label != 0 && label != 1) {
            throw ValidationError("network: labels must be 0 or 1");
        }
    }
}

void validate_train_config(const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) {
        throw ValidationError("train config: learning_rate must be > 0");
    }
    if (config.epochs < 1) {
        throw ValidationError("train config: epochs must be >= 1");
    }
    if (config.batch_size < 1) {
        throw ValidationError("train config: batch_size must be >= 1");
    }
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
        !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
        throw ValidationError("train config: betas must lie in [0, 1)");
    }
    if (!(config.epsilon > 0.0)) {
        throw ValidationError("train config: epsilon must be > 0");
    }
    if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
        throw ValidationError("train config: threshold must lie in [0, 1]");
    }
}

// Layer activations cached for backprop.
struct Workspace {
    std::vector<double> z1, a1, z2, a2;
    double z3 = 0.0;
    double p = 0.0;
};

void forward_into(const NetworkParameters& params, std::span<const double> x,
                  Workspace& ws) {
    const std::size_t h1 = params.W1.rows;
    const std::size_t h2 = params.W2.rows;
    const std::size_t d = params.W1.cols;
    ws.z1.resize(h1);
    ws.a1.resize(h1);
    ws.z2.resize(h2);
    ws.a2.resize(h2);
    for (std::size_t i = 0; i < h1; ++i) {
        double z = params.b1[i];
        const auto row = params.W1.row(i);
        for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
        ws.z1[i] = z;
        ws.a1[i] = z > 0.0 ? z : 0.0;
    }
    for (std::size_t i = 0; i < h2; ++i) {
        double z = params.b2[i];
        const auto row = params.W2.row(i);
        for (std::size_t j = 0; j < h1; ++j) z += row[j] * ws.a1[j];
        ws.z2[i] = z;
        ws.a2[i] = z > 0.0 ? z : 0.0;
    }
    double z3 = params.b3[0];
    const auto out_row = params.W3.row(0);
    for (std::size_t j = 0; j < h2; ++j) z3 += out_row[j] * ws.a2[j];
    ws.z3 = z3;
    ws.p = sigmoid(z3);
}

Gradients make_zero_like(const NetworkParameters& params) {
    Gradients grads;
    grads.W1 = Matrix(params.W1.rows, params.W1.cols);
    grads.b1.assign(params.b1.size(), 0.0);
    grads.W2 = Matrix(params.W2.rows, params.W2.cols);
    grads.b2.assign(params.b2.size(), 0.0);
    grads.W3 = Matrix(params.W3.rows, params.W3.cols);
    grads.b3.assign(params.b3.size(), 0.0);
    return grads;
}

void glorot_fill(Matrix& weights, Rng& rng) {
    const double bound = std::sqrt(
        6.0 / static_cast<double>(weights.cols + weights.rows));
    for (double& value : weights.values) {
        value = rng.next_uniform(-bound, bound);
    }
}

void adam_update(std::span<double> param, std::span<double> m,
                 std::span<double> v, std::span<const double> g,
                 const TrainConfig& config, double bias1, double bias2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        param[i] -= config.learning_rate * m_hat /
                    (std::sqrt(v_hat) + config.epsilon);
    }
}

void check_finite(const std::vector<double>& values, const char* name) {
    for (const double value : values) {
        if (!std::isfinite(value)) {
            throw ParseError(std::string("network JSON: non-finite entry in ") +
                             name);
        }
    }
}

} // namespace

NetworkParameters make_network(std::size_t d, std::size_t h1, std::size_t h2) {
    if (d < 1 || h1 < 1 || h2 < 1) {
        throw ValidationError("make_network: all widths must be >= 1");
    }
    NetworkParameters params;
    params.W1 = Matrix(h1, d);
    params.b1.assign(h1, 0.0);
    params.W2 = Matrix(h2, h1);
    params.b2.assign(h2, 0.0);
    params.W3 = Matrix(1, h2);
    params.b3.assign(1, 0.0);
    return params;
}

NetworkParameters init_network(std::size_t d, std::uint64_t seed) {
    if (d < 1) throw ValidationError("init_network: input width must be >= 1");
    NetworkParameters params = make_network(d, kHidden1, kHidden2);
    Rng rng(seed);
    glorot_fill(params.W1, rng);
    glorot_fill(params.W2, rng);
    glorot_fill(params.W3, rng);
    return params;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double forward(const NetworkParameters& params, std::span<const double> x) {
    check_widths(params);
    if (x.size() != params.W1.cols) {
        throw ValidationError("forward: input width " +
                              std::to_string(x.size()) + " != expected " +
                              std::to_string(params.W1.cols));
    }
    Workspace ws;
    forward_into(params, x, ws);
    return ws.p;
}

double bce_loss(double p, int y) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("bce_loss: probability outside [0, 1]");
    }
    if (y != 0 && y != 1) throw ValidationError("bce_loss: label must be 0 or 1");
    const double clamped =
        std::clamp(p, kClampEpsilon, 1.0 - kClampEpsilon);
    return y == 1 ? -std::log(clamped) : -std::log(1.0 - clamped);
}

double mean_bce_loss(const NetworkParameters& params, const Matrix& X,
                     std::span<const int> y) {
    check_widths(params);
    if (X.rows == 0) throw ValidationError("mean_bce_loss: empty batch");
    if (y.size() != X.rows) throw ValidationError("mean_bce_loss: length mismatch");
    if (X.cols != params.W1.cols) {
        throw ValidationError("mean_bce_loss: width mismatch");
    }
    Workspace ws;
    double total = 0.0;
    for (std::size_t r = 0; r < X.rows; ++r) {
        forward_into(params, X.row(r), ws);
        total += bce_loss(ws.p, y[r]);
    }
    return total / static_cast<double>(X.rows);
}

Gradients backward(const NetworkParameters& params, const Matrix& batch_X,
                   std::span<const int> batch_y) {
    check_widths(params);
    if (batch_X.rows == 0) throw ValidationError("backward: empty batch");
    if (batch_y.size() != batch_X.rows) {
        throw ValidationError("backward: length mismatch");
    }
    if (batch_X.cols != params.W1.cols) {
        throw ValidationError("backward: width mismatch");
    }
    check_labels(batch_y);

    const std::size_t h1 = params.W1.rows;
    const std::size_t h2 = params.W2.rows;
    const std::size_t d = params.W1.cols;
    Gradients grads = make_zero_like(params);
    Workspace ws;
    std::vector<double> dz1(h1);
    std::vector<double> dz2(h2);

    for (std::size_t r = 0; r < batch_X.rows; ++r) {
        const auto x = batch_X.row(r);
        forward_into(params, x, ws);
        const double y = static_cast<double>(batch_y[r]);

        // The clamped loss is flat where p escapes the clamp band, so such
        // samples contribute no gradient at all.
        if (ws.p < kClampEpsilon || ws.p > 1.0 - kClampEpsilon) continue;
        const double dloss_dp = -y / ws.p + (1.0 - y) / (1.0 - ws.p);
        const double dz3 = dloss_dp * ws.p * (1.0 - ws.p);

        grads.b3[0] += dz3;
        const auto w3 = params.W3.row(0);
        auto g3 = grads.W3.row(0);
        for (std::size_t i = 0; i < h2; ++i) {
            g3[i] += dz3 * ws.a2[i];
            dz2[i] = ws.z2[i] > 0.0 ? w3[i] * dz3 : 0.0;
        }
        std::fill(dz1.begin(), dz1.end(), 0.0);
        for (std::size_t i = 0; i < h2; ++i) {
            if (dz2[i] == 0.0) continue;
            grads.b2[i] += dz2[i];
            const auto w2 = params.W2.row(i);
            auto g2 = grads.W2.row(i);
            for (std::size_t j = 0; j < h1; ++j) {
                g2[j] += dz2[i] * ws.a1[j];
                dz1[j] += w2[j] * dz2[i];
            }
        }
        for (std::size_t i = 0; i < h1; ++i) {
            if (ws.z1[i] <= 0.0 || dz1[i] == 0.0) continue;
            grads.b1[i] += dz1[i];
            auto g1 = grads.W1.row(i);
            for (std::size_t j = 0; j < d; ++j) g1[j] += dz1[i] * x[j];
        }
    }

    const double inv_m = 1.0 / static_cast<double>(batch_X.rows);
    for (double& g : grads.W1.values) g *= inv_m;
    for (double& g : grads.b1) g *= inv_m;
    for (double& g : grads.W2.values) g *= inv_m;
    for (double& g : grads.b2) g *= inv_m;
    for (double& g : grads.W3.values) g *= inv_m;
    for (double& g : grads.b3) g *= inv_m;
    return grads;
}

AdamState make_adam_state(const NetworkParameters& params) {
    check_widths(params);
    return AdamState{make_zero_like(params), make_zero_like(params), 0};
}

void adam_step(NetworkParameters& params, AdamState& state,
               const Gradients& grads, const TrainConfig& config) {
    check_widths(params);
    check_same_shape(params, grads, "adam_step");
    check_same_shape(params, state.first_moment, "adam_step");
    check_same_shape(params, state.second_moment, "adam_step");
    validate_train_config(config);

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bias1 = 1.0 - std::pow(config.beta1, t);
    const double bias2 = 1.0 - std::pow(config.beta2, t);
    adam_update(params.W1.values, state.first_moment.W1.values,
                state.second_moment.W1.values, grads.W1.values, config, bias1,
                bias2);
    adam_update(params.b1, state.first_moment.b1, state.second_moment.b1,
                grads.b1, config, bias1, bias2);
    adam_update(params.W2.values, state.first_moment.W2.values,
                state.second_moment.W2.values, grads.W2.values, config, bias1,
                bias2);
    adam_update(params.b2, state.first_moment.b2, state.second_moment.b2,
                grads.b2, config, bias1, bias2);
    adam_update(params.W3.values, state.first_moment.W3.values,
                state.second_moment.W3.values, grads.W3.values, config, bias1,
                bias2);
    adam_update(params.b3, state.first_moment.b3, state.second_moment.b3,
                grads.b3, config, bias1, bias2);
}

TrainedNetwork train_network(const Matrix& X, std::span<const int> y,
                             const TrainConfig& config) {
    validate_train_config(config);
    if (X.rows == 0) throw ValidationError("train_network: empty feature matrix");
    if (X.cols == 0) throw ValidationError("train_network: matrix has no columns");
    if (y.size() != X.rows) {
        throw ValidationError("train_network: label count " +
                              std::to_string(y.size()) + " != row count " +
                              std::to_string(X.rows));
    }
    check_labels(y);

    TrainedNetwork result;
    result.params = init_network(X.cols, static_cast<std::uint64_t>(config.seed));
    AdamState state = make_adam_state(result.params);
    Rng shuffle_rng(split_seed(static_cast<std::uint64_t>(config.seed), 1));

    std::vector<std::size_t> order(X.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    Matrix batch;
    std::vector<int> batch_y;
    result.loss_trace.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) shuffle(shuffle_rng, order);
        for (std::size_t start = 0; start < X.rows; start += batch_size) {
            const std::size_t end = std::min(start + batch_size, X.rows);
            const std::size_t m = end - start;
            batch = Matrix(m, X.cols);
            batch_y.resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t row = order[start + i];
                std::copy(X.row(row).begin(), X.row(row).end(),
                          batch.row(i).begin());
                batch_y[i] = y[row];
            }
            const Gradients grads = backward(result.params, batch, batch_y);
            adam_step(result.params, state, grads, config);
        }
        result.loss_trace.push_back(mean_bce_loss(result.params, X, y));
    }
    return result;
}

std::vector<int> predict_network(const NetworkParameters& params,
                                 const Matrix& X, double threshold) {
    check_widths(params);
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ValidationError("predict_network: threshold must lie in [0, 1]");
    }
    if (X.cols != params.W1.cols) {
        throw ValidationError("predict_network: row width " +
                              std::to_string(X.cols) + " != model width " +
                              std::to_string(params.W1.cols));
    }
    std::vector<int> labels(X.rows);
    Workspace ws;
    for (std::size_t r = 0; r < X.rows; ++r) {
        forward_into(params, X.row(r), ws);
        labels[r] = ws.p >= threshold ? 1 : 0;
    }
    return labels;
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& config) {
    return nlohmann::ordered_json{
        {"learning_rate", config.learning_rate},
        {"epochs", config.epochs},
        {"batch_size", config.batch_size},
        {"beta1", config.beta1},
        {"beta2", config.beta2},
        {"epsilon", config.epsilon},
        {"seed", config.seed},
        {"threshold", config.threshold},
        {"shuffle", config.shuffle},
    };
}

TrainConfig train_config_from_json(const nlohmann::json& doc) {
    try {
        TrainConfig config;
        config.learning_rate = doc.at("learning_rate").get<double>();
        config.epochs = doc.at("epochs").get<int>();
        config.batch_size = doc.at("batch_size").get<int>();
        config.beta1 = doc.at("beta1").get<double>();
        config.beta2 = doc.at("beta2").get<double>();
        config.epsilon = doc.at("epsilon").get<double>();
        config.seed = doc.at("seed").get<int>();
        config.threshold = doc.at("threshold").get<double>();
        config.shuffle = doc.at("shuffle").get<bool>();
        return config;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed train config JSON: ") + e.what());
    }
}

nlohmann::ordered_json network_to_json(const NetworkParameters& params) {
    check_widths(params);
    nlohmann::ordered_json doc;
    doc["format"] = "actiml.network";
    doc["version"] = 1;
    doc["input_width"] = params.W1.cols;
    doc["hidden"] = {params.W1.rows, params.W2.rows};
    doc["W1"] = params.W1.values;
    doc["b1"] = params.b1;
    doc["W2"] = params.W2.values;
    doc["b2"] = params.b2;
    doc["W3"] = params.W3.values;
    doc["b3"] = params.b3;
    return doc;
}

NetworkParameters network_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "actiml.network") {
            throw ParseError("network JSON: unexpected format tag");
        }
        if (doc.at("version").get<int>() != 1) {
            throw ParseError("network JSON: unsupported version");
        }
        const auto d = doc.at("input_width").get<std::size_t>();
        const auto& hidden = doc.at("hidden");
        if (!hidden.is_array() || hidden.size() != 2) {
            throw ParseError("network JSON: hidden must list two widths");
        }
        const auto h1 = hidden.at(0).get<std::size_t>();
        const auto h2 = hidden.at(1).get<std::size_t>();
        NetworkParameters params = make_network(d, h1, h2);
        const auto load = [&doc](const char* key, std::vector<double>& target) {
            const auto values = doc.at(key).get<std::vector<double>>();
            if (values.size() != target.size()) {
                throw ParseError(std::string("network JSON: wrong length for ") +
                                 key);
            }
            check_finite(values, key);
            target = values;
        };
        load("W1", params.W1.values);
        load("b1", params.b1);
        load("W2", params.W2.values);
        load("b2", params.b2);
        load("W3", params.W3.values);
        load("b3", params.b3);
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed network JSON: ") + e.what());
    }
}

void save_network(const NetworkParameters& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << network_to_json(params).dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

NetworkParameters load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON in '") + path + "': " +
                         e.what());
    }
    return network_from_json(doc);
}

void write_loss_trace_csv(std::span<const double> trace,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << (i + 1) << ',' << format_double(trace[i]) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace actiml

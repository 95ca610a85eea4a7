#include "nfl/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nfl {

namespace {

Eigen::MatrixXd apply_activation(Activation act, Eigen::MatrixXd z) {
    if (act == Activation::Relu) z = z.cwiseMax(0.0);
    return z;
}

std::string layer_tag(size_t i) { return "layer " + std::to_string(i); }

}  // namespace

void validate_network(const NeuralNetwork& nn) {
    if (nn.layers.empty()) throw std::invalid_argument("network: empty layer list");
    for (size_t i = 0; i < nn.layers.size(); ++i) {
        const Layer& l = nn.layers[i];
        if (l.W.rows() == 0 || l.W.cols() == 0)
            throw std::invalid_argument("network: empty weight matrix at " + layer_tag(i));
        if (l.b.size() != l.W.rows())
            throw std::invalid_argument("network: bias length " + std::to_string(l.b.size()) +
                                        " does not match " + std::to_string(l.W.rows()) +
                                        " rows at " + layer_tag(i));
        if (i > 0 && l.W.cols() != nn.layers[i - 1].W.rows())
            throw std::invalid_argument("network: dimension chain broken at " + layer_tag(i) +
                                        " (expected " + std::to_string(nn.layers[i - 1].W.rows()) +
                                        " inputs, got " + std::to_string(l.W.cols()) + ")");
    }
    if (nn.layers.back().act != Activation::Identity)
        throw std::invalid_argument("network: final layer activation must be identity");
}

Eigen::VectorXd forward(const NeuralNetwork& nn, const Eigen::VectorXd& x) {
    if (x.size() != nn.input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
    Eigen::VectorXd a = x;
    for (const Layer& l : nn.layers) {
        a = apply_activation(l.act, l.W * a + l.b);
    }
    return a;
}

Eigen::MatrixXd forward_batch(const NeuralNetwork& nn, const Eigen::MatrixXd& X) {
    if (X.rows() != nn.input_dim()) throw std::invalid_argument("forward_batch: input dimension mismatch");
    Eigen::MatrixXd a = X;
    for (const Layer& l : nn.layers) {
        a = apply_activation(l.act, (l.W * a).colwise() + l.b);
    }
    return a;
}

Policy make_policy(const NeuralNetwork& nn) {
    return [nn](const Eigen::VectorXd& x) { return forward(nn, x); };
}

Trajectory simulate_closed_loop(const LinearSystem& sys, const NeuralNetwork& nn,
                                const Eigen::VectorXd& x0, int horizon) {
    return simulate_closed_loop(sys, make_policy(nn), x0, horizon);
}

Gradients loss_gradients(const NeuralNetwork& nn, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    const size_t L = nn.layers.size();
    const double n = static_cast<double>(X.cols());

    // Forward pass, keeping pre- and post-activation values.
    std::vector<Eigen::MatrixXd> acts(L + 1);
    std::vector<Eigen::MatrixXd> pre(L);
    acts[0] = X;
    for (size_t l = 0; l < L; ++l) {
        pre[l] = (nn.layers[l].W * acts[l]).colwise() + nn.layers[l].b;
        acts[l + 1] = apply_activation(nn.layers[l].act, pre[l]);
    }

    Gradients g;
    g.dW.resize(L);
    g.db.resize(L);
    Eigen::MatrixXd diff = acts[L] - Y;
    g.loss = 0.5 * diff.squaredNorm() / n;

    Eigen::MatrixXd delta = diff / n;  // dLoss/d(pre-activation of final layer)
    for (size_t l = L; l-- > 0;) {
        g.dW[l] = delta * acts[l].transpose();
        g.db[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = nn.layers[l].W.transpose() * delta;
            if (nn.layers[l - 1].act == Activation::Relu) {
                delta = delta.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
            }
        }
    }
    return g;
}

NeuralNetwork train_regression(const Dataset& data, const TrainConfig& cfg) {
    if (data.size() == 0) throw std::invalid_argument("train_regression: empty dataset");
    if (data.inputs.cols() != data.labels.cols())
        throw std::invalid_argument("train_regression: inputs/labels length mismatch");

    const int n_in = static_cast<int>(data.inputs.rows());
    const int n_out = static_cast<int>(data.labels.rows());

    std::vector<int> widths;
    widths.push_back(n_in);
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(n_out);

    std::mt19937_64 rng(cfg.seed);
    NeuralNetwork nn;
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-a, a);
        layer.W.resize(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int k = 0; k < fan_in; ++k) layer.W(i, k) = dist(rng);
        layer.b = Eigen::VectorXd::Zero(fan_out);
        layer.act = (l + 2 < widths.size()) ? Activation::Relu : Activation::Identity;
        nn.layers.push_back(std::move(layer));
    }

    const long n = data.size();
    std::vector<long> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0L);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (long start = 0; start < n; start += cfg.batch) {
            const long bs = std::min<long>(cfg.batch, n - start);
            Eigen::MatrixXd X(n_in, bs), Y(n_out, bs);
            for (long i = 0; i < bs; ++i) {
                X.col(i) = data.inputs.col(order[static_cast<size_t>(start + i)]);
                Y.col(i) = data.labels.col(order[static_cast<size_t>(start + i)]);
            }
            Gradients g = loss_gradients(nn, X, Y);
            for (size_t l = 0; l < nn.layers.size(); ++l) {
                nn.layers[l].W -= cfg.learning_rate * g.dW[l];
                nn.layers[l].b -= cfg.learning_rate * g.db[l];
            }
        }
    }
    return nn;
}

Eigen::VectorXd mse_per_component(const NeuralNetwork& nn, const Dataset& data) {
    Eigen::MatrixXd diff = forward_batch(nn, data.inputs) - data.labels;
    return diff.array().square().rowwise().mean();
}

NeuralNetwork append_output_clamp(NeuralNetwork nn, const Eigen::VectorXd& lo,
                                  const Eigen::VectorXd& hi) {
    const int m = nn.output_dim();
    if (lo.size() != m || hi.size() != m)
        throw std::invalid_argument("append_output_clamp: bound dimension mismatch");
    if ((lo.array() > hi.array()).any())
        throw std::invalid_argument("append_output_clamp: lo > hi");

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    // max(u, lo) = relu(u - lo) + lo, min(v, hi) = hi - relu(hi - v);
    // composing the two gives three layers ending in an identity activation.
    nn.layers.push_back({I, -lo, Activation::Relu});
    nn.layers.push_back({-I, hi - lo, Activation::Relu});
    nn.layers.push_back({-I, hi, Activation::Identity});
    return nn;
}

void to_json(nlohmann::json& j, const NeuralNetwork& nn) {
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& l : nn.layers) {
        std::vector<std::vector<double>> w(static_cast<size_t>(l.W.rows()));
        for (long i = 0; i < l.W.rows(); ++i) w[static_cast<size_t>(i)].assign(l.W.row(i).begin(), l.W.row(i).end());
        layers.push_back({{"W", w},
                          {"b", std::vector<double>(l.b.begin(), l.b.end())},
                          {"act", l.act == Activation::Relu ? "relu" : "identity"}});
    }
    j = nlohmann::json{{"layers", layers}};
}

void from_json(const nlohmann::json& j, NeuralNetwork& nn) {
    nn.layers.clear();
    const auto& layers = j.at("layers");
    for (size_t i = 0; i < layers.size(); ++i) {
        const auto& jl = layers[i];
        Layer l;
        auto w = jl.at("W").get<std::vector<std::vector<double>>>();
        if (w.empty() || w.front().empty())
            throw std::invalid_argument("network: empty weight matrix at " + layer_tag(i));
        l.W.resize(static_cast<long>(w.size()), static_cast<long>(w.front().size()));
        for (size_t r = 0; r < w.size(); ++r) {
            if (w[r].size() != w.front().size())
                throw std::invalid_argument("network: ragged weight rows at " + layer_tag(i));
            for (size_t c = 0; c < w[r].size(); ++c) l.W(static_cast<long>(r), static_cast<long>(c)) = w[r][c];
        }
        auto b = jl.at("b").get<std::vector<double>>();
        l.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<long>(b.size()));
        const std::string act = jl.at("act").get<std::string>();
        if (act == "relu") {
            l.act = Activation::Relu;
        } else if (act == "identity") {
            l.act = Activation::Identity;
        } else {
            throw std::invalid_argument("network: unknown activation '" + act + "' at " + layer_tag(i));
        }
        nn.layers.push_back(std::move(l));
    }
    validate_network(nn);
}

NeuralNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open network file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("network parse error in " + path + ": " + e.what());
    }
    return j.get<NeuralNetwork>();
}

void save_network(const NeuralNetwork& nn, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write network file: " + path);
    out << nlohmann::json(nn).dump() << "\n";
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    out.precision(17);
    for (long i = 0; i < data.size(); ++i) {
        for (long r = 0; r < data.inputs.rows(); ++r) {
            if (r > 0) out << ',';
            out << data.inputs(r, i);
        }
        for (long r = 0; r < data.labels.rows(); ++r) out << ',' << data.labels(r, i);
        out << '\n';
    }
}

Dataset load_dataset_csv(const std::string& path, int n_inputs, int n_labels) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (static_cast<int>(vals.size()) != n_inputs + n_labels)
            throw std::runtime_error("dataset row " + std::to_string(rows.size()) +
                                     " has " + std::to_string(vals.size()) + " fields, expected " +
                                     std::to_string(n_inputs + n_labels));
        rows.push_back(std::move(vals));
    }
    Dataset data;
    data.inputs.resize(n_inputs, static_cast<long>(rows.size()));
    data.labels.resize(n_labels, static_cast<long>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (int r = 0; r < n_inputs; ++r) data.inputs(r, static_cast<long>(i)) = rows[i][static_cast<size_t>(r)];
        for (int r = 0; r < n_labels; ++r)
            data.labels(r, static_cast<long>(i)) = rows[i][static_cast<size_t>(n_inputs + r)];
    }
    return data;
}

}  // namespace nfl

#include "nfl/relaxation.hpp"

#include <stdexcept>

namespace nfl {

namespace {

// Relaxation lines per neuron: relu(z) <= us*z + ut and relu(z) >= ls*z for
// z in [l, u]; identity activations use the exact line.
struct ActRelax {
    Eigen::VectorXd upper_slope;
    Eigen::VectorXd upper_bias;
    Eigen::VectorXd lower_slope;
};

ActRelax relax_activation(Activation act, const Eigen::VectorXd& l, const Eigen::VectorXd& u,
                          LowerSlopePolicy policy) {
    const long n = l.size();
    ActRelax r;
    r.upper_slope.resize(n);
    r.upper_bias = Eigen::VectorXd::Zero(n);
    r.lower_slope.resize(n);
    if (act == Activation::Identity) {
        r.upper_slope.setOnes();
        r.lower_slope.setOnes();
        return r;
    }
    for (long k = 0; k < n; ++k) {
        if (u[k] <= 0.0) {
            // stable inactive (covers the dead l == u == 0 case)
            r.upper_slope[k] = 0.0;
            r.lower_slope[k] = 0.0;
        } else if (l[k] >= 0.0) {
            // stable active
            r.upper_slope[k] = 1.0;
            r.lower_slope[k] = 1.0;
        } else {
            const double s = u[k] / (u[k] - l[k]);
            r.upper_slope[k] = s;
            r.upper_bias[k] = -l[k] * s;
            switch (policy) {
                case LowerSlopePolicy::Adaptive: r.lower_slope[k] = (u[k] >= -l[k]) ? 1.0 : 0.0; break;
                case LowerSlopePolicy::Zero: r.lower_slope[k] = 0.0; break;
                case LowerSlopePolicy::One: r.lower_slope[k] = 1.0; break;
            }
        }
    }
    return r;
}

struct AffinePair {
    Eigen::MatrixXd AU;
    Eigen::VectorXd dU;
    Eigen::MatrixXd AL;
    Eigen::VectorXd dL;
};

// Backward pass over layers[0..last]: produces AU x + dU >= z_last(x) >= AL x + dL
// on the domain, where z_last is the pre-activation output of layers[last].
// `relaxations[l]` must hold the activation relaxation of every layer l < last.
AffinePair backward_bounds(const std::vector<Layer>& layers, size_t last,
                           const std::vector<ActRelax>& relaxations) {
    AffinePair p;
    p.AU = layers[last].W;
    p.dU = layers[last].b;
    p.AL = layers[last].W;
    p.dL = layers[last].b;

    for (size_t l = last; l-- > 0;) {
        const ActRelax& r = relaxations[l];
        const long rows_u = p.AU.rows();
        // Through the activation of layer l: pick the line matching each
        // coefficient's sign.
        Eigen::MatrixXd AU_z(rows_u, r.upper_slope.size());
        Eigen::MatrixXd AL_z(rows_u, r.upper_slope.size());
        for (long i = 0; i < rows_u; ++i) {
            for (long k = 0; k < r.upper_slope.size(); ++k) {
                const double au = p.AU(i, k);
                if (au >= 0.0) {
                    AU_z(i, k) = au * r.upper_slope[k];
                    p.dU[i] += au * r.upper_bias[k];
                } else {
                    AU_z(i, k) = au * r.lower_slope[k];
                }
                const double al = p.AL(i, k);
                if (al >= 0.0) {
                    AL_z(i, k) = al * r.lower_slope[k];
                } else {
                    AL_z(i, k) = al * r.upper_slope[k];
                    p.dL[i] += al * r.upper_bias[k];
                }
            }
        }
        // Through the linear map of layer l.
        p.dU += AU_z * layers[l].b;
        p.dL += AL_z * layers[l].b;
        p.AU = AU_z * layers[l].W;
        p.AL = AL_z * layers[l].W;
    }
    return p;
}

// Tightest interval of an affine map over the box.
void concretize(const AffinePair& p, const HyperRectangle& domain, Eigen::VectorXd& lo,
                Eigen::VectorXd& hi) {
    const Eigen::VectorXd center = domain.center();
    const Eigen::VectorXd radius = domain.radius();
    hi = p.AU * center + p.AU.cwiseAbs() * radius + p.dU;
    lo = p.AL * center - p.AL.cwiseAbs() * radius + p.dL;
}

// Runs the per-layer recursion: bounds each truncated sub-network backward
// over the domain, then builds that layer's activation relaxation for use by
// the deeper passes.
std::vector<ActRelax> build_relaxations(const NeuralNetwork& nn, const HyperRectangle& domain,
                                        LowerSlopePolicy policy, LayerBounds& bounds) {
    const size_t L = nn.layers.size();
    bounds.lower.resize(L);
    bounds.upper.resize(L);
    std::vector<ActRelax> relaxations(L);
    for (size_t l = 0; l < L; ++l) {
        AffinePair p = backward_bounds(nn.layers, l, relaxations);
        concretize(p, domain, bounds.lower[l], bounds.upper[l]);
        relaxations[l] = relax_activation(nn.layers[l].act, bounds.lower[l], bounds.upper[l], policy);
    }
    return relaxations;
}

}  // namespace

LayerBounds preactivation_bounds(const NeuralNetwork& nn, const HyperRectangle& domain,
                                 LowerSlopePolicy policy) {
    validate_network(nn);
    if (domain.dim() != nn.input_dim())
        throw std::invalid_argument("preactivation_bounds: domain dimension mismatch");
    LayerBounds bounds;
    build_relaxations(nn, domain, policy, bounds);
    return bounds;
}

AffineBounds relax(const NeuralNetwork& nn, const HyperRectangle& domain, LowerSlopePolicy policy) {
    validate_network(nn);
    if (domain.dim() != nn.input_dim())
        throw std::invalid_argument("relax: domain dimension mismatch");

    LayerBounds pre;
    std::vector<ActRelax> relaxations = build_relaxations(nn, domain, policy, pre);
    AffinePair p = backward_bounds(nn.layers, nn.layers.size() - 1, relaxations);
    AffineBounds out;
    out.Psi = std::move(p.AU);
    out.alpha = std::move(p.dU);
    out.Phi = std::move(p.AL);
    out.beta = std::move(p.dL);
    out.domain = domain;
    return out;
}

void to_json(nlohmann::json& j, const AffineBounds& b) {
    auto mat = [](const Eigen::MatrixXd& m) {
        std::vector<std::vector<double>> rows(static_cast<size_t>(m.rows()));
        for (long i = 0; i < m.rows(); ++i) rows[static_cast<size_t>(i)].assign(m.row(i).begin(), m.row(i).end());
        return rows;
    };
    j = nlohmann::json{{"Psi", mat(b.Psi)},
                       {"alpha", std::vector<double>(b.alpha.begin(), b.alpha.end())},
                       {"Phi", mat(b.Phi)},
                       {"beta", std::vector<double>(b.beta.begin(), b.beta.end())},
                       {"domain", b.domain}};
}

void from_json(const nlohmann::json& j, AffineBounds& b) {
    auto mat = [](const nlohmann::json& jm) {
        auto rows = jm.get<std::vector<std::vector<double>>>();
        Eigen::MatrixXd m(static_cast<long>(rows.size()),
                          rows.empty() ? 0 : static_cast<long>(rows.front().size()));
        for (size_t i = 0; i < rows.size(); ++i)
            for (size_t k = 0; k < rows[i].size(); ++k)
                m(static_cast<long>(i), static_cast<long>(k)) = rows[i][k];
        return m;
    };
    b.Psi = mat(j.at("Psi"));
    b.Phi = mat(j.at("Phi"));
    auto alpha = j.at("alpha").get<std::vector<double>>();
    auto beta = j.at("beta").get<std::vector<double>>();
    b.alpha = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<long>(alpha.size()));
    b.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<long>(beta.size()));
    b.domain = j.at("domain").get<HyperRectangle>();
}

}  // namespace nfl

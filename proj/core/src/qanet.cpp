#include "quanteit/qanet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rng.hpp"

namespace quanteit {

double logistic(double z) {
    double s;
    if (z >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        s = e / (1.0 + e);
    }
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return std::clamp(s, lo, hi);
}

void QANetParams::validate() const {
    if (phi.empty()) throw ValidationError("qanet: need at least one circuit");
    const int nq = phi.front().n_qubits();
    for (const auto& c : phi) {
        c.validate();
        if (c.n_qubits() != nq)
            throw ValidationError("qanet: all circuits must have the same qubit count");
    }
    if (weights.cols() != latent_dim())
        throw ValidationError("qanet: weights have " + std::to_string(weights.cols()) +
                              " columns, expected latent dimension " +
                              std::to_string(latent_dim()));
    if (weights.rows() != bias.size())
        throw ValidationError("qanet: weights have " + std::to_string(weights.rows()) +
                              " rows but bias has " + std::to_string(bias.size()) + " entries");
    if (!weights.allFinite() || !bias.allFinite())
        throw ValidationError("qanet: weights and bias must be finite");
}

QANetParams QANetParams::random_init(Eigen::Index n_outputs, int n_circuits, int n_qubits,
                                     std::uint64_t seed) {
    if (n_outputs < 1 || n_circuits < 1 || n_qubits < 1)
        throw ValidationError("qanet: n_outputs, n_circuits and n_qubits must be positive");
    detail::Rng rng(seed);
    QANetParams p;
    p.phi.resize(n_circuits);
    for (auto& c : p.phi) {
        c.angles.resize(n_qubits);
        for (auto& a : c.angles) a = rng.uniform(0.0, std::numbers::pi);
    }
    const Eigen::Index latent = static_cast<Eigen::Index>(n_circuits) * n_qubits;
    const double bound = 1.0 / std::sqrt(static_cast<double>(latent));
    p.weights.resize(n_outputs, latent);
    for (Eigen::Index r = 0; r < n_outputs; ++r)
        for (Eigen::Index c = 0; c < latent; ++c) p.weights(r, c) = rng.uniform(-bound, bound);
    p.bias = Eigen::VectorXd::Zero(n_outputs);
    return p;
}

Eigen::VectorXd qanet_latent(const std::vector<CircuitParams>& phi) {
    if (phi.empty()) throw ValidationError("qanet: need at least one circuit");
    const int nq = phi.front().n_qubits();
    Eigen::VectorXd latent(static_cast<Eigen::Index>(phi.size()) * nq);
    Eigen::Index offset = 0;
    for (const auto& circuit : phi) {
        if (circuit.n_qubits() != nq)
            throw ValidationError("qanet: all circuits must have the same qubit count");
        latent.segment(offset, nq) = circuit_forward(circuit);
        offset += nq;
    }
    return latent;
}

Eigen::VectorXd qanet_forward(const QANetParams& params) {
    params.validate();
    const Eigen::VectorXd latent = qanet_latent(params.phi);
    Eigen::VectorXd z = params.weights * latent + params.bias;
    return z.unaryExpr([](double v) { return logistic(v); });
}

QANetGradients qanet_backward(const QANetParams& params, const Eigen::VectorXd& grad_output) {
    params.validate();
    if (grad_output.size() != params.output_dim())
        throw ValidationError("qanet: grad_output has " + std::to_string(grad_output.size()) +
                              " entries, expected " + std::to_string(params.output_dim()));

    const Eigen::VectorXd latent = qanet_latent(params.phi);
    const Eigen::VectorXd z = params.weights * latent + params.bias;
    const Eigen::VectorXd s = z.unaryExpr([](double v) { return logistic(v); });

    QANetGradients g;
    // g_pre = dL/dz = dL/dsigma * s * (1 - s)
    const Eigen::VectorXd g_pre =
        grad_output.array() * s.array() * (1.0 - s.array());
    g.d_bias = g_pre;
    g.d_weights = g_pre * latent.transpose();
    g.d_latent = params.weights.transpose() * g_pre;

    const int nq = params.n_qubits();
    g.d_phi.resize(params.latent_dim());
    Eigen::Index offset = 0;
    for (const auto& circuit : params.phi) {
        // d f_k / d phi_j per circuit; chain against the latent gradient block.
        const Eigen::MatrixXd jac = circuit_gradient(circuit);
        g.d_phi.segment(offset, nq) = jac.transpose() * g.d_latent.segment(offset, nq);
        offset += nq;
    }
    return g;
}

std::size_t parameter_count(std::size_t n_outputs, int n_circuits, int n_qubits) {
    if (n_outputs < 1 || n_circuits < 1 || n_qubits < 1)
        throw ValidationError("parameter_count: all arguments must be positive");
    const std::size_t latent = static_cast<std::size_t>(n_circuits) * n_qubits;
    return latent + n_outputs * latent + n_outputs;
}

} // namespace quanteit

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "quanteit/statevector.hpp"

namespace quanteit {

// Numerically stable logistic, clamped to the open interval (0, 1) so the
// output range invariant survives extreme pre-activations.
double logistic(double z);

// All trainable parameters of the hybrid generator: per-circuit RY angles,
// one linear layer, and a per-element bias.
struct QANetParams {
    std::vector<CircuitParams> phi; // n_c circuits, n_q angles each
    Eigen::MatrixXd weights;        // n x (n_c * n_q)
    Eigen::VectorXd bias;           // n

    int n_circuits() const { return static_cast<int>(phi.size()); }
    int n_qubits() const { return phi.empty() ? 0 : phi.front().n_qubits(); }
    Eigen::Index latent_dim() const { return static_cast<Eigen::Index>(n_circuits()) * n_qubits(); }
    Eigen::Index output_dim() const { return bias.size(); }

    void validate() const;

    // phi ~ U[0, pi), weights ~ U[-a, a] with a = 1/sqrt(latent_dim), bias = 0.
    // Draw order is phi first, then weights row-major.
    static QANetParams random_init(Eigen::Index n_outputs, int n_circuits, int n_qubits,
                                   std::uint64_t seed);
};

// Concatenation of circuit_forward over the circuits, in circuit order.
Eigen::VectorXd qanet_latent(const std::vector<CircuitParams>& phi);

// sigmoid(W * latent(phi) + b), every entry strictly inside (0, 1).
Eigen::VectorXd qanet_forward(const QANetParams& params);

struct QANetGradients {
    Eigen::MatrixXd d_weights;
    Eigen::VectorXd d_bias;
    Eigen::VectorXd d_phi;    // concatenated per circuit, angle-major within a circuit
    Eigen::VectorXd d_latent; // dL/dF, useful when the latent itself is trainable
};

// Exact analytic gradients of the composed map for a given dL/d(output).
QANetGradients qanet_backward(const QANetParams& params, const Eigen::VectorXd& grad_output);

// n_c*n_q circuit angles + n*(n_c*n_q) weights + n biases.
std::size_t parameter_count(std::size_t n_outputs, int n_circuits, int n_qubits);

} // namespace quanteit

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "quanteit/errors.hpp"

namespace quanteit {

// Desk-scale cap; nothing in the pipeline needs more than a handful of qubits
// and the amplitude vector grows as 2^n.
inline constexpr int kMaxQubits = 10;

// Dense statevector of a small qubit register. Amplitudes are indexed in
// big-endian qubit order: qubit 0 is the most significant bit, so for two
// qubits the basis order is |00>, |01>, |10>, |11>.
class Statevector {
public:
    // Starts in the ground state |0...0>.
    explicit Statevector(int n_qubits);

    // Builds a state from explicit amplitudes; rejects vectors whose squared
    // norm is not 1 within 1e-9 or whose length is not 2^n_qubits.
    static Statevector from_amplitudes(int n_qubits, std::vector<std::complex<double>> amplitudes);

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amplitudes_.size(); }
    const std::vector<std::complex<double>>& amplitudes() const { return amplitudes_; }

    // Y-axis rotation on one qubit: [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]
    // applied pairwise across the target qubit's stride.
    void apply_ry(int qubit, double angle);

    // Flips the target bit on every basis state whose control bit is 1.
    void apply_cnot(int control, int target);

    // <psi| Z_k |psi> = P(qubit k = 0) - P(qubit k = 1), in [-1, 1].
    double z_expectation(int qubit) const;

    double norm_squared() const;

private:
    Statevector(int n_qubits, std::vector<std::complex<double>> amplitudes)
        : n_qubits_(n_qubits), amplitudes_(std::move(amplitudes)) {}

    std::size_t qubit_mask(int qubit) const {
        return std::size_t{1} << (n_qubits_ - 1 - qubit);
    }
    void check_qubit(int qubit, const char* role) const;

    int n_qubits_;
    std::vector<std::complex<double>> amplitudes_;
};

// One RY angle per qubit of a single circuit.
struct CircuitParams {
    std::vector<double> angles; // radians

    int n_qubits() const { return static_cast<int>(angles.size()); }
    void validate() const; // finite angles, 1..kMaxQubits of them
};

// Runs the fixed circuit family on |0...0>: RY(angles[k]) on every qubit,
// a CNOT chain k -> k+1, then per-qubit Pauli-Z readout.
Eigen::VectorXd circuit_forward(const CircuitParams& params);

// Exact Jacobian d f_k / d phi_j (row k, column j) via the parameter-shift
// rule: column j is (forward(phi_j + pi/2) - forward(phi_j - pi/2)) / 2.
Eigen::MatrixXd circuit_gradient(const CircuitParams& params);

} // namespace quanteit

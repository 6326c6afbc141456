#include "quanteit/statevector.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace quanteit {

Statevector::Statevector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw ValidationError("statevector: n_qubits must be in [1, " +
                              std::to_string(kMaxQubits) + "], got " + std::to_string(n_qubits));
    amplitudes_.assign(std::size_t{1} << n_qubits, {0.0, 0.0});
    amplitudes_[0] = {1.0, 0.0};
}

Statevector Statevector::from_amplitudes(int n_qubits, std::vector<std::complex<double>> amplitudes) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw ValidationError("statevector: n_qubits must be in [1, " +
                              std::to_string(kMaxQubits) + "], got " + std::to_string(n_qubits));
    if (amplitudes.size() != (std::size_t{1} << n_qubits))
        throw ValidationError("statevector: expected 2^" + std::to_string(n_qubits) +
                              " amplitudes, got " + std::to_string(amplitudes.size()));
    double norm2 = 0.0;
    for (const auto& a : amplitudes) norm2 += std::norm(a);
    if (std::abs(norm2 - 1.0) > 1e-9)
        throw ValidationError("statevector: amplitudes are not normalized (|psi|^2 = " +
                              std::to_string(norm2) + ")");
    return Statevector(n_qubits, std::move(amplitudes));
}

void Statevector::check_qubit(int qubit, const char* role) const {
    if (qubit < 0 || qubit >= n_qubits_)
        throw ValidationError(std::string("statevector: ") + role + " qubit " +
                              std::to_string(qubit) + " out of range for " +
                              std::to_string(n_qubits_) + " qubits");
}

void Statevector::apply_ry(int qubit, double angle) {
    check_qubit(qubit, "target");
    if (!std::isfinite(angle))
        throw ValidationError("statevector: RY angle must be finite");
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    const std::size_t mask = qubit_mask(qubit);
    const std::size_t n = amplitudes_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i & mask) continue;
        const std::size_t j = i | mask;
        const std::complex<double> a0 = amplitudes_[i];
        const std::complex<double> a1 = amplitudes_[j];
        amplitudes_[i] = c * a0 - s * a1;
        amplitudes_[j] = s * a0 + c * a1;
    }
}

void Statevector::apply_cnot(int control, int target) {
    check_qubit(control, "control");
    check_qubit(target, "target");
    if (control == target)
        throw ValidationError("statevector: CNOT control and target must differ, both are " +
                              std::to_string(control));
    const std::size_t cmask = qubit_mask(control);
    const std::size_t tmask = qubit_mask(target);
    const std::size_t n = amplitudes_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if ((i & cmask) && !(i & tmask)) std::swap(amplitudes_[i], amplitudes_[i | tmask]);
    }
}

double Statevector::z_expectation(int qubit) const {
    check_qubit(qubit, "readout");
    const std::size_t mask = qubit_mask(qubit);
    double acc = 0.0;
    for (std::size_t i = 0; i < amplitudes_.size(); ++i) {
        const double p = std::norm(amplitudes_[i]);
        acc += (i & mask) ? -p : p;
    }
    return acc;
}

double Statevector::norm_squared() const {
    double acc = 0.0;
    for (const auto& a : amplitudes_) acc += std::norm(a);
    return acc;
}

void CircuitParams::validate() const {
    if (angles.empty() || angles.size() > static_cast<std::size_t>(kMaxQubits))
        throw ValidationError("circuit: need between 1 and " + std::to_string(kMaxQubits) +
                              " angles, got " + std::to_string(angles.size()));
    for (std::size_t i = 0; i < angles.size(); ++i)
        if (!std::isfinite(angles[i]))
            throw ValidationError("circuit: angle " + std::to_string(i) + " is not finite");
}

Eigen::VectorXd circuit_forward(const CircuitParams& params) {
    params.validate();
    const int nq = params.n_qubits();
    Statevector state(nq);
    for (int k = 0; k < nq; ++k) state.apply_ry(k, params.angles[k]);
    for (int k = 0; k + 1 < nq; ++k) state.apply_cnot(k, k + 1);
    Eigen::VectorXd features(nq);
    for (int k = 0; k < nq; ++k) features[k] = state.z_expectation(k);
    return features;
}

Eigen::MatrixXd circuit_gradient(const CircuitParams& params) {
    params.validate();
    const int nq = params.n_qubits();
    Eigen::MatrixXd jac(nq, nq);
    constexpr double shift = std::numbers::pi / 2.0;
    CircuitParams shifted = params;
    for (int j = 0; j < nq; ++j) {
        shifted.angles[j] = params.angles[j] + shift;
        const Eigen::VectorXd plus = circuit_forward(shifted);
        shifted.angles[j] = params.angles[j] - shift;
        const Eigen::VectorXd minus = circuit_forward(shifted);
        shifted.angles[j] = params.angles[j];
        jac.col(j) = (plus - minus) / 2.0;
    }
    return jac;
}

} // namespace quanteit

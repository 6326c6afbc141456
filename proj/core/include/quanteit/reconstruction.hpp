#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "quanteit/forward_model.hpp"
#include "quanteit/qanet.hpp"
#include "quanteit/regularizers.hpp"

namespace quanteit {

enum class Method { QuantEIT, AblationOnes, AblationLearned, Noser };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

// Stated presets for the regularization weight vector
// [laplacian, tv, l1].
RegWeights lambda_preset_2d_sim();  // {0.03, 0.002, 0.01}
RegWeights lambda_preset_2d_real(); // {0.05, 0.03, 0.1}
RegWeights lambda_preset_3d();      // {0.001, 0.001, 0.001}

struct ReconstructionConfig {
    Method method = Method::QuantEIT;
    int iterations = 1000;
    double learning_rate = 0.05; // 0.05 for 2D, 0.1 for 3D
    RegWeights weights = lambda_preset_2d_sim();
    std::uint64_t seed = 0;
    int n_circuits = 2;
    int n_qubits = 2;
    double noser_mu = 20.0;
    // Maps the generator output to (-1, 1) instead of (0, 1), for imported
    // data whose conductivity change carries both signs.
    bool signed_output = false;

    void validate() const;
};

// laplacian/tv/l1 hold the per-element mean regularizer values (the scale the
// weight presets are calibrated to), so
// total = fidelity + weights . (laplacian, tv, l1) exactly.
struct LossBreakdown {
    double total = 0.0;
    double fidelity = 0.0;
    double laplacian = 0.0;
    double tv = 0.0;
    double l1 = 0.0;
};

struct LossAndGrad {
    LossBreakdown loss;
    QANetGradients grads;
};

// ||delta_v - J * forward(params)||^2 + lambda . R(forward(params)) with the
// regularizer vector taken as per-element means, and the full gradient
// chained through the generator.
LossAndGrad loss_and_grad(const QANetParams& params, const Eigen::VectorXd& delta_v,
                          const Eigen::MatrixXd& jacobian, const RegWeights& weights,
                          const GeometrySpec& geometry);

struct ReconstructionResult {
    Eigen::VectorXd delta_sigma; // generator output at the final parameters
    std::vector<LossBreakdown> trace; // one entry per iteration, evaluated pre-update
    // Flattened final parameters: [phi | W row-major | b] for the full model,
    // [latent | W | b] for the learned-latent ablation, [W | b] for the
    // ones-latent ablation.
    Eigen::VectorXd final_params;
    double seconds = 0.0;
};

// The iterative unsupervised reconstruction loop: seeds the generator, runs
// exactly `iterations` Adam steps on loss_and_grad, and evaluates the model
// at the last parameter state. Methods: QuantEIT (circuit latent),
// AblationOnes (latent fixed to all ones, no circuit parameters), and
// AblationLearned (latent is a free trainable vector, init U[-1, 1]).
ReconstructionResult reconstruct(const Eigen::VectorXd& delta_v, const SensitivityModel& model,
                                 const ReconstructionConfig& config);

// One-step baseline: solves (J^T J + mu diag(J^T J)) x = J^T delta_v by a
// direct method and verifies the relative residual is <= 1e-8.
Eigen::VectorXd noser(const Eigen::VectorXd& delta_v, const Eigen::MatrixXd& jacobian,
                      double mu);

// x / max|x|; the result has infinity norm 1.
Eigen::VectorXd max_normalize(const Eigen::VectorXd& x);

} // namespace quanteit

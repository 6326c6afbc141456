#include "quanteit/reconstruction.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "quanteit/adam.hpp"
#include "rng.hpp"

namespace quanteit {

std::string_view method_name(Method method) {
    switch (method) {
    case Method::QuantEIT: return "quanteit";
    case Method::AblationOnes: return "ablation_ones";
    case Method::AblationLearned: return "ablation_learned";
    case Method::Noser: return "noser";
    }
    throw ValidationError("unknown method");
}

Method parse_method(std::string_view name) {
    if (name == "quanteit") return Method::QuantEIT;
    if (name == "ablation_ones") return Method::AblationOnes;
    if (name == "ablation_learned") return Method::AblationLearned;
    if (name == "noser") return Method::Noser;
    throw ValidationError("unknown method '" + std::string(name) +
                          "' (expected quanteit, ablation_ones, ablation_learned or noser)");
}

RegWeights lambda_preset_2d_sim() { return {0.03, 0.002, 0.01}; }
RegWeights lambda_preset_2d_real() { return {0.05, 0.03, 0.1}; }
RegWeights lambda_preset_3d() { return {0.001, 0.001, 0.001}; }

void ReconstructionConfig::validate() const {
    if (iterations < 1) throw ValidationError("config: iterations must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("config: learning rate must be positive and finite");
    weights.validate();
    if (n_circuits < 1) throw ValidationError("config: n_circuits must be >= 1");
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw ValidationError("config: n_qubits must be in [1, " + std::to_string(kMaxQubits) +
                              "]");
    if (!(noser_mu > 0.0) || !std::isfinite(noser_mu))
        throw ValidationError("config: noser_mu must be positive and finite");
}

namespace {

struct ImageGrad {
    LossBreakdown loss;
    Eigen::VectorXd grad; // dL / d delta_sigma
};

ImageGrad image_loss_and_grad(const Eigen::VectorXd& delta_sigma, const Eigen::VectorXd& delta_v,
                              const Eigen::MatrixXd& jacobian, const RegWeights& weights,
                              const GeometrySpec& geometry) {
    const Eigen::VectorXd residual = delta_v - jacobian * delta_sigma;
    const RegTerm lap = laplacian_reg(delta_sigma, geometry);
    const RegTerm tv = tv_reg(delta_sigma, geometry);
    const RegTerm l1 = l1_reg(delta_sigma);

    // The weights couple to per-element regularizer means; the stated weight
    // presets are calibrated to that scaling (a 64x64 image would otherwise
    // let the l1 term alone outweigh the entire data term).
    const double inv_n = 1.0 / static_cast<double>(delta_sigma.size());

    ImageGrad out;
    out.loss.fidelity = residual.squaredNorm();
    out.loss.laplacian = lap.value * inv_n;
    out.loss.tv = tv.value * inv_n;
    out.loss.l1 = l1.value * inv_n;
    out.loss.total = out.loss.fidelity + weights.laplacian * out.loss.laplacian +
                     weights.tv * out.loss.tv + weights.l1 * out.loss.l1;
    out.grad = -2.0 * (jacobian.transpose() * residual) +
               (inv_n * weights.laplacian) * lap.gradient + (inv_n * weights.tv) * tv.gradient +
               (inv_n * weights.l1) * l1.gradient;
    return out;
}

using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

} // namespace

LossAndGrad loss_and_grad(const QANetParams& params, const Eigen::VectorXd& delta_v,
                          const Eigen::MatrixXd& jacobian, const RegWeights& weights,
                          const GeometrySpec& geometry) {
    params.validate();
    weights.validate();
    geometry.validate();
    if (jacobian.rows() != delta_v.size())
        throw ValidationError("loss: jacobian has " + std::to_string(jacobian.rows()) +
                              " rows but delta_v has " + std::to_string(delta_v.size()));
    if (jacobian.cols() != params.output_dim())
        throw ValidationError("loss: jacobian has " + std::to_string(jacobian.cols()) +
                              " columns but the generator emits " +
                              std::to_string(params.output_dim()));
    if (geometry.element_count() != static_cast<std::size_t>(params.output_dim()))
        throw ValidationError("loss: geometry " + geometry.to_string() +
                              " does not match generator output");

    const Eigen::VectorXd delta_sigma = qanet_forward(params);
    const ImageGrad ig = image_loss_and_grad(delta_sigma, delta_v, jacobian, weights, geometry);
    return {ig.loss, qanet_backward(params, ig.grad)};
}

ReconstructionResult reconstruct(const Eigen::VectorXd& delta_v, const SensitivityModel& model,
                                 const ReconstructionConfig& config) {
    config.validate();
    model.validate();
    if (config.method == Method::Noser)
        throw ValidationError("reconstruct: noser is a one-step baseline; call noser()");
    if (delta_v.size() != model.jacobian.rows())
        throw ValidationError("reconstruct: delta_v has " + std::to_string(delta_v.size()) +
                              " entries but the model expects " +
                              std::to_string(model.jacobian.rows()));

    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::Index n = static_cast<Eigen::Index>(model.geometry.element_count());
    const Eigen::Index latent_dim =
        static_cast<Eigen::Index>(config.n_circuits) * config.n_qubits;
    const bool signed_out = config.signed_output;

    // Shared head initialization; the circuit angles are used only by the
    // full model.
    QANetParams params =
        QANetParams::random_init(n, config.n_circuits, config.n_qubits, config.seed);
    Eigen::VectorXd fixed_latent;
    if (config.method == Method::AblationOnes) {
        fixed_latent = Eigen::VectorXd::Ones(latent_dim);
    } else if (config.method == Method::AblationLearned) {
        detail::Rng rng(config.seed);
        fixed_latent.resize(latent_dim);
        for (Eigen::Index i = 0; i < latent_dim; ++i) fixed_latent[i] = rng.uniform(-1.0, 1.0);
    }

    // Flat layout: [phi or latent | W row-major | b]; AblationOnes trains the
    // head only.
    const Eigen::Index head_dim = n * latent_dim + n;
    const Eigen::Index lead_dim = config.method == Method::AblationOnes ? 0 : latent_dim;
    Eigen::VectorXd theta(lead_dim + head_dim);
    auto pack = [&](const Eigen::VectorXd& lead) {
        if (lead_dim > 0) theta.head(lead_dim) = lead;
        RowMajorMap(theta.data() + lead_dim, n, latent_dim) = params.weights;
        theta.tail(n) = params.bias;
    };
    auto unpack = [&]() {
        params.weights = ConstRowMajorMap(theta.data() + lead_dim, n, latent_dim);
        params.bias = theta.tail(n);
        if (config.method == Method::QuantEIT) {
            Eigen::Index off = 0;
            for (auto& circuit : params.phi)
                for (auto& angle : circuit.angles) angle = theta[off++];
        } else if (config.method == Method::AblationLearned) {
            fixed_latent = theta.head(lead_dim);
        }
    };

    if (config.method == Method::QuantEIT) {
        Eigen::VectorXd angles(latent_dim);
        Eigen::Index off = 0;
        for (const auto& circuit : params.phi)
            for (double a : circuit.angles) angles[off++] = a;
        pack(angles);
    } else {
        pack(fixed_latent);
    }

    AdamState adam = AdamState::init(theta.size(), config.learning_rate);
    ReconstructionResult result;
    result.trace.reserve(config.iterations);

    Eigen::VectorXd grad(theta.size());
    auto forward_output = [&]() -> Eigen::VectorXd {
        if (config.method == Method::QuantEIT) {
            const Eigen::VectorXd s = qanet_forward(params);
            return signed_out ? Eigen::VectorXd(2.0 * s.array() - 1.0) : s;
        }
        const Eigen::VectorXd z = params.weights * fixed_latent + params.bias;
        const Eigen::VectorXd s = z.unaryExpr([](double v) { return logistic(v); });
        return signed_out ? Eigen::VectorXd(2.0 * s.array() - 1.0) : s;
    };

    for (int k = 0; k < config.iterations; ++k) {
        unpack();
        LossBreakdown loss;
        if (config.method == Method::QuantEIT) {
            const Eigen::VectorXd s = qanet_forward(params);
            const Eigen::VectorXd delta_sigma =
                signed_out ? Eigen::VectorXd(2.0 * s.array() - 1.0) : s;
            ImageGrad ig =
                image_loss_and_grad(delta_sigma, delta_v, model.jacobian, config.weights,
                                    model.geometry);
            if (signed_out) ig.grad *= 2.0;
            const QANetGradients g = qanet_backward(params, ig.grad);
            grad.head(latent_dim) = g.d_phi;
            RowMajorMap(grad.data() + latent_dim, n, latent_dim) = g.d_weights;
            grad.tail(n) = g.d_bias;
            loss = ig.loss;
        } else {
            const Eigen::VectorXd z = params.weights * fixed_latent + params.bias;
            const Eigen::VectorXd s = z.unaryExpr([](double v) { return logistic(v); });
            const Eigen::VectorXd delta_sigma =
                signed_out ? Eigen::VectorXd(2.0 * s.array() - 1.0) : s;
            const ImageGrad ig =
                image_loss_and_grad(delta_sigma, delta_v, model.jacobian, config.weights,
                                    model.geometry);
            const double chain = signed_out ? 2.0 : 1.0;
            const Eigen::VectorXd g_pre =
                chain * ig.grad.array() * s.array() * (1.0 - s.array());
            if (config.method == Method::AblationLearned)
                grad.head(latent_dim) = params.weights.transpose() * g_pre;
            RowMajorMap(grad.data() + lead_dim, n, latent_dim) =
                g_pre * fixed_latent.transpose();
            grad.tail(n) = g_pre;
            loss = ig.loss;
        }
        if (!std::isfinite(loss.total))
            throw NumericError("reconstruct: loss became non-finite at iteration " +
                               std::to_string(k));
        result.trace.push_back(loss);
        adam_step(adam, theta, grad);
    }

    unpack();
    result.delta_sigma = forward_output();
    result.final_params = theta;
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

Eigen::VectorXd noser(const Eigen::VectorXd& delta_v, const Eigen::MatrixXd& jacobian,
                      double mu) {
    if (!(mu > 0.0) || !std::isfinite(mu))
        throw ValidationError("noser: mu must be positive and finite");
    if (jacobian.rows() != delta_v.size())
        throw ValidationError("noser: jacobian has " + std::to_string(jacobian.rows()) +
                              " rows but delta_v has " + std::to_string(delta_v.size()));
    if (!jacobian.allFinite() || !delta_v.allFinite())
        throw ValidationError("noser: inputs must be finite");

    const Eigen::Index n = jacobian.cols();
    const Eigen::VectorXd diag = jacobian.colwise().squaredNorm().transpose(); // diag(J^T J)
    for (Eigen::Index p = 0; p < n; ++p)
        if (diag[p] == 0.0)
            throw NumericError("noser: column " + std::to_string(p) +
                               " of the jacobian is zero; system is singular despite "
                               "regularization");

    const Eigen::VectorXd rhs = jacobian.transpose() * delta_v;
    if (rhs.norm() == 0.0) return Eigen::VectorXd::Zero(n);

    // m << n, so solve through the Woodbury identity: with D = mu diag(J^T J),
    // x = D^-1 J^T (I + J D^-1 J^T)^-1 delta_v, algebraically identical to the
    // normal equations and verified by the residual below.
    const Eigen::VectorXd d_inv = (mu * diag).cwiseInverse();
    const Eigen::Index m = jacobian.rows();
    Eigen::MatrixXd small = Eigen::MatrixXd::Identity(m, m);
    small.noalias() += jacobian * d_inv.asDiagonal() * jacobian.transpose();
    const Eigen::VectorXd y = small.ldlt().solve(delta_v);
    const Eigen::VectorXd x = d_inv.asDiagonal() * (jacobian.transpose() * y);

    const Eigen::VectorXd residual =
        jacobian.transpose() * (jacobian * x) + mu * diag.cwiseProduct(x) - rhs;
    const double rel = residual.norm() / rhs.norm();
    if (rel > 1e-8)
        throw NumericError("noser: normal-equation residual " + std::to_string(rel) +
                           " exceeds 1e-8");
    return x;
}

Eigen::VectorXd max_normalize(const Eigen::VectorXd& x) {
    if (x.size() == 0) throw ValidationError("max_normalize: empty input");
    const double peak = x.cwiseAbs().maxCoeff();
    if (peak == 0.0) throw ValidationError("max_normalize: input is all zeros");
    return x / peak;
}

} // namespace quanteit

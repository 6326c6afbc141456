#include "quanteit/adam.hpp"

#include <cmath>
#include <string>

namespace quanteit {

AdamState AdamState::init(Eigen::Index dim, double learning_rate) {
    if (dim < 1) throw ValidationError("adam: dimension must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("adam: learning rate must be positive and finite");
    AdamState s;
    s.m = Eigen::VectorXd::Zero(dim);
    s.v = Eigen::VectorXd::Zero(dim);
    s.learning_rate = learning_rate;
    return s;
}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (params.size() != state.m.size() || grad.size() != state.m.size())
        throw ValidationError("adam: params/grad size " + std::to_string(params.size()) + "/" +
                              std::to_string(grad.size()) + " does not match state size " +
                              std::to_string(state.m.size()));
    for (Eigen::Index i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw NumericError("adam: non-finite gradient at index " + std::to_string(i));

    state.step_count += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);

    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    const Eigen::ArrayXd m_hat = state.m.array() / bc1;
    const Eigen::ArrayXd v_hat = state.v.array() / bc2;
    params.array() -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
}

} // namespace quanteit

#pragma once

#include <Eigen/Core>

#include "quanteit/errors.hpp"

namespace quanteit {

// Bias-corrected Adam. A state is a plain value: copying it and stepping the
// copy never touches the original.
struct AdamState {
    Eigen::VectorXd m; // first-moment estimate
    Eigen::VectorXd v; // second-moment estimate
    long step_count = 0;
    double learning_rate = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(Eigen::Index dim, double learning_rate);
};

// One in-place update of params. Throws NumericError naming the first
// offending index if the gradient is not finite.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad);

} // namespace quanteit

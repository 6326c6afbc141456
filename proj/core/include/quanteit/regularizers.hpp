#pragma once

#include <Eigen/Core>

#include "quanteit/geometry.hpp"

namespace quanteit {

// Smoothing constant shared by the TV and l1 terms; small enough to be
// metrically invisible while keeping the gradients defined everywhere.
inline constexpr double kRegEpsilon = 1e-8;

struct RegWeights {
    double laplacian = 0.0;
    double tv = 0.0;
    double l1 = 0.0;

    void validate() const; // nonnegative and finite
};

struct RegTerm {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

// ||L x||^2 with L the 4-neighbor (2D) / 6-neighbor (3D) discrete Laplacian
// under mirrored borders; gradient is 2 L^T L x.
RegTerm laplacian_reg(const Eigen::VectorXd& x, const GeometrySpec& geometry);

// Smoothed isotropic total variation: sum over sites of
// sqrt(sum of squared forward differences + eps^2). Forward differences at
// the far border are zero.
RegTerm tv_reg(const Eigen::VectorXd& x, const GeometrySpec& geometry);

// Smoothed l1: sum of sqrt(x_i^2 + eps^2).
RegTerm l1_reg(const Eigen::VectorXd& x);

} // namespace quanteit

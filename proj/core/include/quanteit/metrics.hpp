#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "quanteit/geometry.hpp"

namespace quanteit {

// Exact matches report this instead of an infinite PSNR.
inline constexpr double kPsnrCap = 99.0;

// Pearson correlation of the flattened vectors; both need nonzero variance.
double pearson_cc(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// 10 log10(peak^2 / MSE), capped at kPsnrCap.
double psnr(const Eigen::VectorXd& x, const Eigen::VectorXd& truth, double peak);

// ||x - truth|| / ||truth||.
double relative_error(const Eigen::VectorXd& x, const Eigen::VectorXd& truth);

// Mean SSIM over an 11x11 Gaussian window (sigma 1.5), C1 = (0.01 d)^2 and
// C2 = (0.03 d)^2 for data range d. The smallest image side must be >= 11.
// 3D volumes are scored slice-wise along z and averaged.
double mssim(const Eigen::VectorXd& x, const Eigen::VectorXd& truth,
             const GeometrySpec& geometry, double data_range);

struct MetricsReport {
    double cc = 0.0;
    double psnr = 0.0;
    double err = 0.0;
    double mssim = 0.0;
    bool normalized = false; // whether max normalization was applied first
};

// Scores a reconstruction against ground truth. With apply_max_normalization
// both images are divided by their own max magnitude and the PSNR peak is 1;
// otherwise raw values are compared with peak = max(truth) - min(truth).
MetricsReport evaluate_images(const Eigen::VectorXd& recon, const Eigen::VectorXd& truth,
                              const GeometrySpec& geometry, bool apply_max_normalization);

std::string metrics_csv_header();
std::string metrics_csv_row(std::string_view method, std::uint64_t seed,
                            std::optional<double> snr_db, const MetricsReport& report);

} // namespace quanteit

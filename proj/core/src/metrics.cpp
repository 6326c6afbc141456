#include "quanteit/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "quanteit/errors.hpp"
#include "quanteit/io.hpp"
#include "quanteit/reconstruction.hpp"

namespace quanteit {

namespace {

void check_same_size(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const char* name) {
    if (x.size() != y.size())
        throw ValidationError(std::string(name) + ": sizes differ (" + std::to_string(x.size()) +
                              " vs " + std::to_string(y.size()) + ")");
    if (x.size() == 0) throw ValidationError(std::string(name) + ": empty input");
}

} // namespace

double pearson_cc(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    check_same_size(x, y, "cc");
    const double n = static_cast<double>(x.size());
    const Eigen::VectorXd xc = x.array() - x.mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double sx = xc.squaredNorm() / n;
    const double sy = yc.squaredNorm() / n;
    if (sx == 0.0 || sy == 0.0)
        throw ValidationError("cc: input has zero variance");
    return xc.dot(yc) / (n * std::sqrt(sx * sy));
}

double psnr(const Eigen::VectorXd& x, const Eigen::VectorXd& truth, double peak) {
    check_same_size(x, truth, "psnr");
    if (!(peak > 0.0) || !std::isfinite(peak))
        throw ValidationError("psnr: peak must be positive and finite");
    const double mse = (x - truth).squaredNorm() / static_cast<double>(x.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double relative_error(const Eigen::VectorXd& x, const Eigen::VectorXd& truth) {
    check_same_size(x, truth, "err");
    const double denom = truth.norm();
    if (denom == 0.0) throw ValidationError("err: ground truth has zero norm");
    return (x - truth).norm() / denom;
}

namespace {

// 11-tap Gaussian window, sigma 1.5, normalized to sum 1.
std::array<double, 11> gaussian_window() {
    std::array<double, 11> w{};
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5.0;
        w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

double mssim_2d(const double* x, const double* y, int width, int height, double c1, double c2) {
    const auto win = gaussian_window();
    double total = 0.0;
    long count = 0;
    // Valid positions only: windows fully inside the image.
    for (int wy = 0; wy + 11 <= height; ++wy) {
        for (int wx = 0; wx + 11 <= width; ++wx) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int j = 0; j < 11; ++j) {
                for (int i = 0; i < 11; ++i) {
                    const double g = win[j] * win[i];
                    const double a = x[(wy + j) * width + (wx + i)];
                    const double b = y[(wy + j) * width + (wx + i)];
                    mx += g * a;
                    my += g * b;
                    mxx += g * a * a;
                    myy += g * b * b;
                    mxy += g * a * b;
                }
            }
            const double vx = mxx - mx * mx;
            const double vy = myy - my * my;
            const double cov = mxy - mx * my;
            const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

} // namespace

double mssim(const Eigen::VectorXd& x, const Eigen::VectorXd& truth,
             const GeometrySpec& geometry, double data_range) {
    geometry.validate();
    check_same_size(x, truth, "mssim");
    if (static_cast<std::size_t>(x.size()) != geometry.element_count())
        throw ValidationError("mssim: image size does not match geometry " +
                              geometry.to_string());
    if (!(data_range > 0.0) || !std::isfinite(data_range))
        throw ValidationError("mssim: data_range must be positive and finite");
    if (geometry.width < 11 || geometry.height < 11)
        throw ValidationError("mssim: image " + geometry.to_string() +
                              " is smaller than the 11x11 window");
    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);

    const std::size_t slice = static_cast<std::size_t>(geometry.width) * geometry.height;
    double total = 0.0;
    for (int z = 0; z < geometry.depth; ++z)
        total += mssim_2d(x.data() + z * slice, truth.data() + z * slice, geometry.width,
                          geometry.height, c1, c2);
    return total / geometry.depth;
}

MetricsReport evaluate_images(const Eigen::VectorXd& recon, const Eigen::VectorXd& truth,
                              const GeometrySpec& geometry, bool apply_max_normalization) {
    Eigen::VectorXd x = recon;
    Eigen::VectorXd t = truth;
    double peak;
    if (apply_max_normalization) {
        x = max_normalize(x);
        t = max_normalize(t);
        peak = 1.0;
    } else {
        peak = t.maxCoeff() - t.minCoeff();
        if (peak <= 0.0)
            throw ValidationError("metrics: raw ground truth has zero range");
    }
    MetricsReport report;
    report.cc = pearson_cc(x, t);
    report.psnr = psnr(x, t, peak);
    report.err = relative_error(x, t);
    report.mssim = mssim(x, t, geometry, peak);
    report.normalized = apply_max_normalization;
    return report;
}

std::string metrics_csv_header() { return "method,seed,snr_db,cc,psnr,err,mssim,normalized"; }

std::string metrics_csv_row(std::string_view method, std::uint64_t seed,
                            std::optional<double> snr_db, const MetricsReport& report) {
    std::string row(method);
    row += ',';
    row += std::to_string(seed);
    row += ',';
    if (snr_db && std::isfinite(*snr_db)) row += format_double(*snr_db);
    row += ',';
    row += format_double(report.cc);
    row += ',';
    row += format_double(report.psnr);
    row += ',';
    row += format_double(report.err);
    row += ',';
    row += format_double(report.mssim);
    row += ',';
    row += report.normalized ? "true" : "false";
    return row;
}

} // namespace quanteit

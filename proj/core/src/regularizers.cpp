#include "quanteit/regularizers.hpp"

#include <array>
#include <cmath>
#include <string>

namespace quanteit {

namespace {

void check_geometry(const Eigen::VectorXd& x, const GeometrySpec& geometry, const char* name) {
    geometry.validate();
    if (static_cast<std::size_t>(x.size()) != geometry.element_count())
        throw ValidationError(std::string(name) + ": image has " + std::to_string(x.size()) +
                              " elements but geometry " + geometry.to_string() + " implies " +
                              std::to_string(geometry.element_count()));
}

} // namespace

void RegWeights::validate() const {
    for (double w : {laplacian, tv, l1})
        if (!(w >= 0.0) || !std::isfinite(w))
            throw ValidationError("regularization weights must be finite and nonnegative");
}

RegTerm laplacian_reg(const Eigen::VectorXd& x, const GeometrySpec& geometry) {
    check_geometry(x, geometry, "laplacian_reg");
    const int w = geometry.width, h = geometry.height, d = geometry.depth;

    // Mirrored borders make out-of-grid neighbor terms vanish, so
    // (L x)_p = sum over in-grid neighbors q of (x_q - x_p).
    Eigen::VectorXd lx(x.size());
    for (int z = 0; z < d; ++z)
        for (int y = 0; y < h; ++y)
            for (int xi = 0; xi < w; ++xi) {
                const std::size_t p = geometry.index(xi, y, z);
                double acc = 0.0;
                int degree = 0;
                auto add = [&](int nx, int ny, int nz) {
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h || nz < 0 || nz >= d) return;
                    acc += x[geometry.index(nx, ny, nz)];
                    ++degree;
                };
                add(xi - 1, y, z);
                add(xi + 1, y, z);
                add(xi, y - 1, z);
                add(xi, y + 1, z);
                if (geometry.kind == GridKind::Grid3D) {
                    add(xi, y, z - 1);
                    add(xi, y, z + 1);
                }
                lx[p] = acc - degree * x[p];
            }

    RegTerm out;
    out.value = lx.squaredNorm();

    // L is symmetric, so grad = 2 L^T L x = 2 L (L x).
    Eigen::VectorXd llx(x.size());
    for (int z = 0; z < d; ++z)
        for (int y = 0; y < h; ++y)
            for (int xi = 0; xi < w; ++xi) {
                const std::size_t p = geometry.index(xi, y, z);
                double acc = 0.0;
                int degree = 0;
                auto add = [&](int nx, int ny, int nz) {
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h || nz < 0 || nz >= d) return;
                    acc += lx[geometry.index(nx, ny, nz)];
                    ++degree;
                };
                add(xi - 1, y, z);
                add(xi + 1, y, z);
                add(xi, y - 1, z);
                add(xi, y + 1, z);
                if (geometry.kind == GridKind::Grid3D) {
                    add(xi, y, z - 1);
                    add(xi, y, z + 1);
                }
                llx[p] = acc - degree * lx[p];
            }
    out.gradient = 2.0 * llx;
    return out;
}

RegTerm tv_reg(const Eigen::VectorXd& x, const GeometrySpec& geometry) {
    check_geometry(x, geometry, "tv_reg");
    const int w = geometry.width, h = geometry.height, d = geometry.depth;
    const bool is3d = geometry.kind == GridKind::Grid3D;

    RegTerm out;
    out.value = 0.0;
    out.gradient = Eigen::VectorXd::Zero(x.size());
    for (int z = 0; z < d; ++z)
        for (int y = 0; y < h; ++y)
            for (int xi = 0; xi < w; ++xi) {
                const std::size_t p = geometry.index(xi, y, z);
                const double dx = (xi + 1 < w) ? x[geometry.index(xi + 1, y, z)] - x[p] : 0.0;
                const double dy = (y + 1 < h) ? x[geometry.index(xi, y + 1, z)] - x[p] : 0.0;
                const double dz =
                    (is3d && z + 1 < d) ? x[geometry.index(xi, y, z + 1)] - x[p] : 0.0;
                const double r =
                    std::sqrt(dx * dx + dy * dy + dz * dz + kRegEpsilon * kRegEpsilon);
                out.value += r;
                if (xi + 1 < w) out.gradient[geometry.index(xi + 1, y, z)] += dx / r;
                if (y + 1 < h) out.gradient[geometry.index(xi, y + 1, z)] += dy / r;
                if (is3d && z + 1 < d) out.gradient[geometry.index(xi, y, z + 1)] += dz / r;
                out.gradient[p] -= (dx + dy + dz) / r;
            }
    return out;
}

RegTerm l1_reg(const Eigen::VectorXd& x) {
    RegTerm out;
    out.gradient.resize(x.size());
    out.value = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double r = std::sqrt(x[i] * x[i] + kRegEpsilon * kRegEpsilon);
        out.value += r;
        out.gradient[i] = x[i] / r;
    }
    return out;
}

} // namespace quanteit

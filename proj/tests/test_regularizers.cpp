#include <doctest.h>

#include <random>

#include <quanteit/regularizers.hpp>

#include "testutil.hpp"

using namespace quanteit;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

} // namespace

TEST_SUITE("regularizers") {

TEST_CASE("laplacian on hand-enumerated stencils") {
    SUBCASE("constant images are annihilated") {
        const auto g = GeometrySpec::grid2d(4, 3);
        const auto r = laplacian_reg(Eigen::VectorXd::Constant(12, 3.7), g);
        CHECK(r.value == 0.0);
        CHECK(r.gradient.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("3x1 spike") {
        // (Lx)_0 = x1 - x0 = 1, (Lx)_1 = x0 + x2 - 2 x1 = -2, (Lx)_2 = 1
        const auto g = GeometrySpec::grid2d(3, 1);
        const auto r = laplacian_reg(vec({0.0, 1.0, 0.0}), g);
        CHECK(r.value == doctest::Approx(6.0).epsilon(1e-14));
    }
    SUBCASE("2x2 checker") {
        // Each pixel has two in-grid neighbors; x = (0,1,1,0):
        // (Lx)_p = sum(neighbors) - 2 x_p = (2, -2, -2, 2) -> ||Lx||^2 = 16
        const auto g = GeometrySpec::grid2d(2, 2);
        const auto r = laplacian_reg(vec({0.0, 1.0, 1.0, 0.0}), g);
        CHECK(r.value == doctest::Approx(16.0).epsilon(1e-14));
    }
}

TEST_CASE("tv on hand-enumerated stencils") {
    SUBCASE("constant image costs n*eps") {
        const auto g = GeometrySpec::grid2d(5, 4);
        const auto r = tv_reg(Eigen::VectorXd::Constant(20, 2.0), g);
        CHECK(r.value == doctest::Approx(20.0 * kRegEpsilon).epsilon(1e-12));
        CHECK(r.gradient.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single step of height 1") {
        const auto g = GeometrySpec::grid2d(2, 1);
        const auto r = tv_reg(vec({0.0, 1.0}), g);
        CHECK(r.value == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("l1 basics") {
    SUBCASE("zero vector") {
        const auto r = l1_reg(Eigen::VectorXd::Zero(4));
        CHECK(r.value == doctest::Approx(4.0 * kRegEpsilon));
        CHECK(r.gradient.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("3-4-5 style magnitudes") {
        const auto r = l1_reg(vec({3.0, -4.0}));
        CHECK(r.value == doctest::Approx(7.0).epsilon(1e-12));
        CHECK(r.gradient[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.gradient[1] == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("gradient magnitude bounded by 1, sign(x) far from zero") {
        std::mt19937 rng(2);
        const Eigen::VectorXd x = testutil::random_vector(rng, 30, -2.0, 2.0);
        const auto r = l1_reg(x);
        // x / sqrt(x^2 + eps^2) is < 1 in exact arithmetic and saturates to
        // exactly 1 in doubles once |x| >> eps.
        CHECK(r.gradient.cwiseAbs().maxCoeff() <= 1.0);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (std::abs(x[i]) > 1e-3)
                CHECK(r.gradient[i] == doctest::Approx(x[i] > 0 ? 1.0 : -1.0).epsilon(1e-9));
        const auto near_zero = l1_reg(Eigen::VectorXd::Constant(1, 1e-8));
        CHECK(std::abs(near_zero.gradient[0]) < 1.0);
    }
}

TEST_CASE("gradients match finite differences") {
    std::mt19937 rng(31);
    const auto g2 = GeometrySpec::grid2d(5, 4);
    const auto g3 = GeometrySpec::grid3d(4, 3, 3);

    auto check_gradient = [&](auto reg, const GeometrySpec& geom) {
        for (int trial = 0; trial < 5; ++trial) {
            const Eigen::VectorXd x =
                testutil::random_vector(rng, static_cast<Eigen::Index>(geom.element_count()),
                                        -1.0, 1.0);
            const auto analytic = reg(x, geom);
            const Eigen::VectorXd numeric = testutil::finite_difference(
                [&](const Eigen::VectorXd& p) { return reg(p, geom).value; }, x);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double scale = std::max(1.0, std::abs(numeric[i]));
                CHECK(std::abs(analytic.gradient[i] - numeric[i]) / scale < 1e-5);
            }
        }
    };

    SUBCASE("laplacian 2d") { check_gradient([](auto& x, auto& g) { return laplacian_reg(x, g); }, g2); }
    SUBCASE("laplacian 3d") { check_gradient([](auto& x, auto& g) { return laplacian_reg(x, g); }, g3); }
    SUBCASE("tv 2d") { check_gradient([](auto& x, auto& g) { return tv_reg(x, g); }, g2); }
    SUBCASE("tv 3d") { check_gradient([](auto& x, auto& g) { return tv_reg(x, g); }, g3); }
    SUBCASE("l1") {
        check_gradient([](auto& x, auto&) { return l1_reg(x); }, g2);
    }
}

TEST_CASE("shift invariance of the spatial priors") {
    std::mt19937 rng(37);
    const auto g = GeometrySpec::grid2d(6, 5);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd x = testutil::random_vector(rng, 30, -1.0, 1.0);
        const double c = std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
        const Eigen::VectorXd shifted = x.array() + c;
        CHECK(laplacian_reg(x, g).value ==
              doctest::Approx(laplacian_reg(shifted, g).value).epsilon(1e-10));
        CHECK(tv_reg(x, g).value == doctest::Approx(tv_reg(shifted, g).value).epsilon(1e-10));
    }
}

TEST_CASE("convexity probe") {
    std::mt19937 rng(41);
    const auto g = GeometrySpec::grid2d(5, 5);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd a = testutil::random_vector(rng, 25, -2.0, 2.0);
        const Eigen::VectorXd b = testutil::random_vector(rng, 25, -2.0, 2.0);
        const Eigen::VectorXd mid = 0.5 * (a + b);
        CHECK(laplacian_reg(mid, g).value <=
              0.5 * (laplacian_reg(a, g).value + laplacian_reg(b, g).value) + 1e-12);
        CHECK(tv_reg(mid, g).value <= 0.5 * (tv_reg(a, g).value + tv_reg(b, g).value) + 1e-12);
        CHECK(l1_reg(mid).value <= 0.5 * (l1_reg(a).value + l1_reg(b).value) + 1e-12);
    }
}

TEST_CASE("all values are nonnegative and geometry mismatch is rejected") {
    std::mt19937 rng(43);
    const auto g = GeometrySpec::grid2d(4, 4);
    const Eigen::VectorXd x = testutil::random_vector(rng, 16, -3.0, 3.0);
    CHECK(laplacian_reg(x, g).value >= 0.0);
    CHECK(tv_reg(x, g).value >= 0.0);
    CHECK(l1_reg(x).value >= 0.0);

    const auto wrong = GeometrySpec::grid2d(5, 4);
    CHECK_THROWS_AS(laplacian_reg(x, wrong), ValidationError);
    CHECK_THROWS_AS(tv_reg(x, wrong), ValidationError);

    RegWeights bad{-0.1, 0.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

}

#include <doctest.h>

#include <numbers>
#include <random>

#include <quanteit/qanet.hpp>

#include "testutil.hpp"

using namespace quanteit;
using std::numbers::pi;

TEST_SUITE("qanet") {

TEST_CASE("latent concatenates circuits in order") {
    SUBCASE("all-zero angles give all-ones latent") {
        const Eigen::VectorXd f = qanet_latent({{{0.0, 0.0}}, {{0.0, 0.0}}});
        CHECK(f.size() == 4);
        for (int i = 0; i < 4; ++i) CHECK(f[i] == doctest::Approx(1.0));
    }
    SUBCASE("first circuit flipped") {
        const Eigen::VectorXd f = qanet_latent({{{pi, pi}}, {{0.0, 0.0}}});
        CHECK(f[0] == doctest::Approx(-1.0));
        // cos(pi) * cos(pi) = 1
        CHECK(f[1] == doctest::Approx(1.0));
        CHECK(f[2] == doctest::Approx(1.0));
        CHECK(f[3] == doctest::Approx(1.0));
    }
    SUBCASE("single circuit at pi/2") {
        const Eigen::VectorXd f = qanet_latent({{{pi / 2.0, pi / 2.0}}});
        CHECK(f[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(f[1] == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("latent entries are bounded by 1") {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> angle(-15.0, 15.0);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<CircuitParams> phi(3);
            for (auto& c : phi) c.angles = {angle(rng), angle(rng)};
            const Eigen::VectorXd f = qanet_latent(phi);
            CHECK(f.cwiseAbs().maxCoeff() <= 1.0 + 1e-15);
        }
    }
}

TEST_CASE("forward output") {
    SUBCASE("zero weights and bias give 0.5 everywhere") {
        QANetParams p;
        p.phi = {{{0.3, 0.7}}, {{1.1, 0.2}}};
        p.weights = Eigen::MatrixXd::Zero(5, 4);
        p.bias = Eigen::VectorXd::Zero(5);
        const Eigen::VectorXd out = qanet_forward(p);
        for (int i = 0; i < 5; ++i) CHECK(out[i] == doctest::Approx(0.5));
    }
    SUBCASE("bias ln(3) gives 0.75") {
        QANetParams p;
        p.phi = {{{0.0, 0.0}}};
        p.weights = Eigen::MatrixXd::Zero(3, 2);
        p.bias = Eigen::VectorXd::Constant(3, std::log(3.0));
        const Eigen::VectorXd out = qanet_forward(p);
        for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(0.75));
    }
    SUBCASE("single-element network") {
        // latent = cos(0) = 1, z = 2*1 - 2 = 0, sigmoid = 0.5
        QANetParams p;
        p.phi = {{{0.0}}};
        p.weights = Eigen::MatrixXd::Constant(1, 1, 2.0);
        p.bias = Eigen::VectorXd::Constant(1, -2.0);
        CHECK(qanet_forward(p)[0] == doctest::Approx(0.5));
    }
    SUBCASE("outputs stay strictly inside (0, 1) even for huge pre-activations") {
        QANetParams p;
        p.phi = {{{0.0}}};
        p.weights = Eigen::MatrixXd::Constant(2, 1, 0.0);
        p.bias.resize(2);
        p.bias << 1e4, -1e4;
        const Eigen::VectorXd out = qanet_forward(p);
        CHECK(out[0] < 1.0);
        CHECK(out[0] > 0.0);
        CHECK(out[1] > 0.0);
        CHECK(out[1] < 1.0);
    }
    SUBCASE("dimension mismatch is rejected") {
        QANetParams p;
        p.phi = {{{0.0, 0.0}}};
        p.weights = Eigen::MatrixXd::Zero(3, 5); // latent dim is 2
        p.bias = Eigen::VectorXd::Zero(3);
        CHECK_THROWS_AS(qanet_forward(p), ValidationError);
    }
}

TEST_CASE("backward") {
    SUBCASE("zero upstream gradient zeroes everything") {
        QANetParams p = QANetParams::random_init(4, 2, 2, 9);
        const QANetGradients g = qanet_backward(p, Eigen::VectorXd::Zero(4));
        CHECK(g.d_weights.cwiseAbs().maxCoeff() == 0.0);
        CHECK(g.d_bias.cwiseAbs().maxCoeff() == 0.0);
        CHECK(g.d_phi.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero weights kill the circuit gradient") {
        QANetParams p;
        p.phi = {{{0.4, 1.2}}};
        p.weights = Eigen::MatrixXd::Zero(3, 2);
        p.bias = Eigen::VectorXd::Constant(3, 0.25);
        const QANetGradients g = qanet_backward(p, Eigen::VectorXd::Ones(3));
        CHECK(g.d_phi.cwiseAbs().maxCoeff() == 0.0);
        CHECK(g.d_bias.cwiseAbs().maxCoeff() > 0.0);
    }
    SUBCASE("matches finite differences of a quadratic loss") {
        std::mt19937 rng(23);
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::Index n = 3;
            QANetParams p = QANetParams::random_init(n, 2, 2, 100 + trial);
            const Eigen::VectorXd target = testutil::random_vector(rng, n, -1.0, 1.0);

            // L = || forward(p) - target ||^2, dL/dout = 2 (out - target)
            auto loss_at = [&](const QANetParams& q) {
                return (qanet_forward(q) - target).squaredNorm();
            };
            const Eigen::VectorXd out = qanet_forward(p);
            const QANetGradients g = qanet_backward(p, 2.0 * (out - target));

            const double h = 1e-5;
            auto check_entry = [&](double analytic, double numeric) {
                if (std::abs(numeric) > 1e-8)
                    CHECK(std::abs(analytic - numeric) / std::abs(numeric) < 1e-6);
                else
                    CHECK(std::abs(analytic - numeric) < 1e-8);
            };

            Eigen::Index flat = 0;
            for (int c = 0; c < p.n_circuits(); ++c)
                for (int q = 0; q < p.n_qubits(); ++q, ++flat) {
                    QANetParams plus = p, minus = p;
                    plus.phi[c].angles[q] += h;
                    minus.phi[c].angles[q] -= h;
                    check_entry(g.d_phi[flat], (loss_at(plus) - loss_at(minus)) / (2.0 * h));
                }
            for (Eigen::Index r = 0; r < p.weights.rows(); ++r)
                for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
                    QANetParams plus = p, minus = p;
                    plus.weights(r, c) += h;
                    minus.weights(r, c) -= h;
                    check_entry(g.d_weights(r, c),
                                (loss_at(plus) - loss_at(minus)) / (2.0 * h));
                }
            for (Eigen::Index i = 0; i < p.bias.size(); ++i) {
                QANetParams plus = p, minus = p;
                plus.bias[i] += h;
                minus.bias[i] -= h;
                check_entry(g.d_bias[i], (loss_at(plus) - loss_at(minus)) / (2.0 * h));
            }
        }
    }
}

TEST_CASE("determinism of seeded init and forward") {
    const QANetParams a = QANetParams::random_init(16, 2, 2, 77);
    const QANetParams b = QANetParams::random_init(16, 2, 2, 77);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    for (int c = 0; c < 2; ++c)
        for (int q = 0; q < 2; ++q)
            CHECK(a.phi[c].angles[q] == b.phi[c].angles[q]);
    const Eigen::VectorXd out1 = qanet_forward(a);
    const Eigen::VectorXd out2 = qanet_forward(a);
    CHECK(out1 == out2); // bitwise

    const QANetParams c = QANetParams::random_init(16, 2, 2, 78);
    CHECK(a.weights != c.weights);
}

TEST_CASE("init ranges") {
    const QANetParams p = QANetParams::random_init(64, 2, 2, 5);
    for (const auto& circuit : p.phi)
        for (double a : circuit.angles) {
            CHECK(a >= 0.0);
            CHECK(a < pi);
        }
    // bound = 1/sqrt(4)
    CHECK(p.weights.cwiseAbs().maxCoeff() <= 0.5);
    CHECK(p.bias.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parameter count") {
    CHECK(parameter_count(64 * 64, 2, 2) == 20484);
    CHECK(parameter_count(32 * 32 * 40, 2, 2) == 204804);
    CHECK(parameter_count(1, 1, 1) == 3);
    CHECK_THROWS_AS(parameter_count(0, 2, 2), ValidationError);
}

}

#include <benchmark/benchmark.h>

#include <quanteit/forward_model.hpp>
#include <quanteit/metrics.hpp>
#include <quanteit/qanet.hpp>
#include <quanteit/reconstruction.hpp>
#include <quanteit/statevector.hpp>

using namespace quanteit;

namespace {

CircuitParams make_circuit(int n_qubits) {
    CircuitParams p;
    p.angles.resize(n_qubits);
    for (int k = 0; k < n_qubits; ++k) p.angles[k] = 0.3 + 0.2 * k;
    return p;
}

void BM_circuit_forward(benchmark::State& state) {
    const CircuitParams params = make_circuit(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto f = circuit_forward(params);
        benchmark::DoNotOptimize(f);
    }
}
BENCHMARK(BM_circuit_forward)->Arg(2)->Arg(4)->Arg(8);

void BM_circuit_gradient(benchmark::State& state) {
    const CircuitParams params = make_circuit(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto jac = circuit_gradient(params);
        benchmark::DoNotOptimize(jac);
    }
}
BENCHMARK(BM_circuit_gradient)->Arg(2)->Arg(4);

void BM_qanet_forward_backward(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    const QANetParams params = QANetParams::random_init(n, 2, 2, 1);
    const Eigen::VectorXd grad_out = Eigen::VectorXd::Constant(n, 0.5);
    for (auto _ : state) {
        auto g = qanet_backward(params, grad_out);
        benchmark::DoNotOptimize(g);
    }
}
BENCHMARK(BM_qanet_forward_backward)->Arg(64 * 64)->Arg(32 * 32 * 40);

void BM_grid_solve(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto field =
        ConductivityField::uniform(GeometrySpec::grid2d(side, side), 0.24);
    const auto nodes = electrode_nodes(field.geometry, 16);
    GridSolver solver(field);
    for (auto _ : state) {
        auto u = solver.solve_injection(nodes[0], nodes[1], 1.0);
        benchmark::DoNotOptimize(u);
    }
}
BENCHMARK(BM_grid_solve)->Arg(32)->Arg(64);

void BM_jacobian_adjoint(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto field =
        ConductivityField::uniform(GeometrySpec::grid2d(side, side), 0.24);
    const auto protocol = Protocol::adjacent(16);
    for (auto _ : state) {
        auto model = build_jacobian_adjoint(field, protocol);
        benchmark::DoNotOptimize(model);
    }
}
BENCHMARK(BM_jacobian_adjoint)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

struct BenchData {
    SensitivityModel model;
    Eigen::VectorXd delta_v;
    BenchData() {
        const auto phantom = make_phantom(PhantomSpec::two_lung(GeometrySpec::grid2d(64, 64)));
        const auto protocol = Protocol::adjacent(16);
        model = build_jacobian_adjoint(phantom.reference, protocol);
        delta_v = normalize_voltages(simulate_measurements(phantom.observed, protocol),
                                     model.v_ref);
    }
};

const BenchData& bench_data() {
    static BenchData data;
    return data;
}

void BM_loss_and_grad_64x64(benchmark::State& state) {
    const auto& data = bench_data();
    const QANetParams params = QANetParams::random_init(64 * 64, 2, 2, 1);
    for (auto _ : state) {
        auto out = loss_and_grad(params, data.delta_v, data.model.jacobian,
                                 lambda_preset_2d_sim(), data.model.geometry);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_loss_and_grad_64x64);

void BM_reconstruct_100_iters(benchmark::State& state) {
    const auto& data = bench_data();
    ReconstructionConfig config;
    config.iterations = 100;
    config.seed = 1;
    for (auto _ : state) {
        auto result = reconstruct(data.delta_v, data.model, config);
        benchmark::DoNotOptimize(result);
    }
}
BENCHMARK(BM_reconstruct_100_iters)->Unit(benchmark::kMillisecond);

void BM_noser_64x64(benchmark::State& state) {
    const auto& data = bench_data();
    for (auto _ : state) {
        auto x = noser(data.delta_v, data.model.jacobian, 20.0);
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(BM_noser_64x64)->Unit(benchmark::kMillisecond);

void BM_mssim_64x64(benchmark::State& state) {
    const auto g = GeometrySpec::grid2d(64, 64);
    Eigen::VectorXd a(g.element_count()), b(g.element_count());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a[i] = 0.5 + 0.4 * std::sin(i * 0.01);
        b[i] = 0.5 + 0.4 * std::cos(i * 0.013);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(mssim(a, b, g, 1.0));
    }
}
BENCHMARK(BM_mssim_64x64);

} // namespace

BENCHMARK_MAIN();

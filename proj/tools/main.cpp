#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include <quanteit/io.hpp>
#include <quanteit/metrics.hpp>
#include <quanteit/qanet.hpp>
#include <quanteit/reconstruction.hpp>

#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace quanteit;
using cli::RunConfig;

namespace {

std::vector<int> parse_grid(const std::string& text) {
    std::vector<int> dims;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find('x', pos);
        const std::string part = text.substr(pos, next == std::string::npos ? next : next - pos);
        try {
            dims.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw ValidationError("bad grid '" + text + "', expected WxH or WxHxD");
        }
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (dims.size() != 2 && dims.size() != 3)
        throw ValidationError("bad grid '" + text + "', expected WxH or WxHxD");
    return dims;
}

std::optional<double> parse_snr(const std::string& text) {
    if (text.empty() || text == "none") return std::nullopt;
    try {
        const double v = std::stod(text);
        if (!std::isfinite(v)) throw std::invalid_argument("inf");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("bad --snr '" + text + "', expected a finite dB value or 'none'");
    }
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

int env_thread_cap() {
    if (const char* env = std::getenv("QUANTEIT_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) return cap;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// ---------------------------------------------------------------------------

void write_metrics_csv(const fs::path& path, const std::string& method, std::uint64_t seed,
                       std::optional<double> snr_db, const Eigen::VectorXd& recon,
                       const Eigen::VectorXd& truth, const GeometrySpec& geometry) {
    std::string csv = metrics_csv_header() + "\n";
    for (bool normalized : {true, false}) {
        const MetricsReport report = evaluate_images(recon, truth, geometry, normalized);
        csv += metrics_csv_row(method, seed, snr_db, report) + "\n";
    }
    write_text_atomic(path, csv);
}

void write_loss_trace(const fs::path& path, const std::vector<LossBreakdown>& trace) {
    std::string csv = "iter,total,fidelity,reg_laplacian,reg_tv,reg_l1\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        csv += std::to_string(k) + ',' + format_double(trace[k].total) + ',' +
               format_double(trace[k].fidelity) + ',' + format_double(trace[k].laplacian) +
               ',' + format_double(trace[k].tv) + ',' + format_double(trace[k].l1) + '\n';
    }
    write_text_atomic(path, csv);
}

void write_checkpoint(const fs::path& dir, const RunConfig& config,
                      const ReconstructionResult& result) {
    write_vector(dir / "theta.mat", result.final_params);
    std::string layout = "W|b";
    if (config.method == "quanteit") layout = "phi|W|b";
    if (config.method == "ablation_learned") layout = "latent|W|b";
    std::string sidecar = "{\n  \"layout\": \"" + layout + "\",\n  \"method\": \"" +
                          config.method + "\",\n  \"seed\": " + std::to_string(config.seed) +
                          ",\n  \"iterations\": " + std::to_string(config.iterations) +
                          ",\n  \"lr\": " + format_double(config.lr) + ",\n  \"lambda\": [" +
                          format_double(config.lambda[0]) + ", " +
                          format_double(config.lambda[1]) + ", " +
                          format_double(config.lambda[2]) + "],\n  \"n_circuits\": " +
                          std::to_string(config.n_circuits) + ",\n  \"n_qubits\": " +
                          std::to_string(config.n_qubits) + ",\n  \"signed_output\": " +
                          (config.signed_output ? "true" : "false") + ",\n  \"seconds\": " +
                          format_double(result.seconds) + "\n}\n";
    write_text_atomic(dir / "theta.json", sidecar);
}

// ---------------------------------------------------------------------------

int cmd_simulate(RunConfig config) {
    config.task = "simulate";
    if (config.output_dir.empty()) throw ValidationError("simulate: --out is required");
    const GeometrySpec geometry = config.geometry();
    if (geometry.kind == GridKind::Grid3D)
        throw ValidationError("simulate: the built-in forward solver is 2D-only; 3D "
                              "sensitivity models must be produced externally and used via "
                              "'reconstruct --import <dir>'");

    const Phantom phantom = make_phantom(config.phantom_spec());
    const Protocol protocol = Protocol::adjacent(config.electrodes);

    const SensitivityModel model = build_jacobian_adjoint(phantom.reference, protocol);
    const Eigen::VectorXd v_obs = simulate_measurements(phantom.observed, protocol);
    const Eigen::VectorXd delta_v_clean = normalize_voltages(v_obs, model.v_ref);
    const Eigen::VectorXd delta_v = config.snr_db
                                        ? add_noise(delta_v_clean, *config.snr_db, config.seed)
                                        : delta_v_clean;
    const Eigen::VectorXd truth = normalize_conductivity(phantom.observed, phantom.reference);

    const fs::path out(config.output_dir);
    fs::create_directories(out);
    export_sensitivity(model, out); // J.mat, vref.vec, geometry.json
    write_image(out / "sigma_ref.mat", phantom.reference.values, geometry);
    write_image(out / "sigma_obs.mat", phantom.observed.values, geometry);
    write_vector(out / "v_ref.vec", model.v_ref);
    write_vector(out / "v_obs.vec", v_obs);
    write_vector(out / "delta_v.vec", delta_v);
    write_vector(out / "delta_v_clean.vec", delta_v_clean);
    write_image(out / "delta_sigma_truth.mat", truth, geometry);
    config.write(out);

    std::printf("simulated %s, %d electrodes, %ld measurements -> %s\n",
                geometry.to_string().c_str(), config.electrodes,
                static_cast<long>(model.v_ref.size()), out.string().c_str());
    return 0;
}

struct DataPaths {
    std::string data_dir;
    std::string import_dir;
    std::string voltages;
    std::string truth;
};

int cmd_reconstruct(RunConfig config, const DataPaths& paths) {
    config.task = "reconstruct";
    if (config.output_dir.empty()) throw ValidationError("reconstruct: --out is required");
    if (paths.data_dir.empty() && paths.import_dir.empty())
        throw ValidationError("reconstruct: pass --data <simulate dir> or --import "
                              "<sensitivity dir>");

    const fs::path src(paths.import_dir.empty() ? paths.data_dir : paths.import_dir);
    if (!fs::exists(src / "geometry.json"))
        throw ValidationError("reconstruct: " + (src / "geometry.json").string() +
                              " not found; expected a sensitivity model directory");
    const SensitivityModel model = import_sensitivity(src);
    config.grid = model.geometry.kind == GridKind::Grid2D
                      ? std::vector<int>{model.geometry.width, model.geometry.height}
                      : std::vector<int>{model.geometry.width, model.geometry.height,
                                         model.geometry.depth};
    config.electrodes = model.protocol.n_electrodes;

    fs::path voltages_path;
    if (!paths.voltages.empty())
        voltages_path = paths.voltages;
    else if (!paths.data_dir.empty())
        voltages_path = fs::path(paths.data_dir) / "delta_v.vec";
    else
        throw ValidationError("reconstruct: --import needs --voltages <file>");
    if (!fs::exists(voltages_path))
        throw ValidationError("reconstruct: voltage file " + voltages_path.string() +
                              " not found");
    const Eigen::VectorXd delta_v = read_vector(voltages_path);

    // Recover the noise label of simulated data for the metrics row.
    if (!paths.data_dir.empty() && !config.snr_db) {
        if (const auto data_config = cli::try_load_dir_config(paths.data_dir))
            config.snr_db = data_config->snr_db;
    }

    fs::path truth_path;
    if (!paths.truth.empty())
        truth_path = paths.truth;
    else if (!paths.data_dir.empty() &&
             fs::exists(fs::path(paths.data_dir) / "delta_sigma_truth.mat"))
        truth_path = fs::path(paths.data_dir) / "delta_sigma_truth.mat";

    const fs::path out(config.output_dir);
    fs::create_directories(out);

    Eigen::VectorXd delta_sigma;
    if (config.method == "noser") {
        delta_sigma = noser(delta_v, model.jacobian, config.mu);
    } else {
        const ReconstructionResult result = reconstruct(delta_v, model, config.reconstruction());
        delta_sigma = result.delta_sigma;
        write_loss_trace(out / "loss_trace.csv", result.trace);
        write_checkpoint(out, config, result);
    }

    write_image(out / "delta_sigma.mat", delta_sigma, model.geometry);
    if (model.geometry.kind == GridKind::Grid2D)
        write_pgm(out / "delta_sigma.pgm", max_normalize(delta_sigma), model.geometry);
    if (!truth_path.empty()) {
        const Eigen::VectorXd truth = read_image(truth_path, model.geometry);
        write_metrics_csv(out / "metrics.csv", config.method, config.seed, config.snr_db,
                          delta_sigma, truth, model.geometry);
    }
    config.write(out);

    std::printf("reconstructed %s with %s -> %s\n", model.geometry.to_string().c_str(),
                config.method.c_str(), out.string().c_str());
    return 0;
}

struct EvaluateArgs {
    std::string recon_path;
    std::string truth_path;
    std::string dims;
    std::string label = "unknown";
    std::string out_path;
};

int cmd_evaluate(const EvaluateArgs& args, const RunConfig& config) {
    const Eigen::MatrixXd truth_matrix = read_matrix(args.truth_path);
    GeometrySpec geometry;
    if (!args.dims.empty()) {
        const auto dims = parse_grid(args.dims);
        geometry = dims.size() == 2 ? GeometrySpec::grid2d(dims[0], dims[1])
                                    : GeometrySpec::grid3d(dims[0], dims[1], dims[2]);
    } else {
        geometry = GeometrySpec::grid2d(static_cast<int>(truth_matrix.cols()),
                                        static_cast<int>(truth_matrix.rows()));
    }
    const Eigen::VectorXd truth = read_image(args.truth_path, geometry);
    const Eigen::VectorXd recon = read_image(args.recon_path, geometry);

    std::string csv = metrics_csv_header() + "\n";
    for (bool normalized : {true, false}) {
        const MetricsReport report = evaluate_images(recon, truth, geometry, normalized);
        csv += metrics_csv_row(args.label, config.seed, config.snr_db, report) + "\n";
    }
    std::fputs(csv.c_str(), stdout);
    if (!args.out_path.empty()) write_text_atomic(args.out_path, csv);
    return 0;
}

struct SweepArgs {
    std::string data_dir;
    std::string axis;
    std::vector<double> values;
};

int cmd_sweep(RunConfig config, const SweepArgs& args) {
    config.task = "sweep";
    if (config.output_dir.empty()) throw ValidationError("sweep: --out is required");
    if (args.axis != "lr" && args.axis != "snr")
        throw ValidationError("sweep: --axis must be lr or snr");
    if (args.values.empty()) throw ValidationError("sweep: --values must not be empty");
    for (double v : args.values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError("sweep: values must be positive and finite");

    const fs::path data(args.data_dir);
    const SensitivityModel model = import_sensitivity(data);
    const Eigen::VectorXd base_dv =
        read_vector(data / (args.axis == "snr" ? "delta_v_clean.vec" : "delta_v.vec"));
    const fs::path truth_path = data / "delta_sigma_truth.mat";
    if (!fs::exists(truth_path))
        throw ValidationError("sweep: " + truth_path.string() +
                              " not found; sweeps score against the simulated ground truth");
    const Eigen::VectorXd truth = read_image(truth_path, model.geometry);

    const fs::path out(config.output_dir);
    fs::create_directories(out);

    struct Row {
        double value;
        MetricsReport report;
        double final_loss;
    };
    std::vector<Row> rows(args.values.size());

    const int workers =
        std::min<int>(env_thread_cap(), static_cast<int>(args.values.size()));
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= args.values.size() || failed.load()) return;
            try {
                const double value = args.values[i];
                RunConfig run = config;
                run.task = "reconstruct";
                Eigen::VectorXd dv = base_dv;
                if (args.axis == "lr") {
                    run.lr = value;
                } else {
                    run.snr_db = value;
                    dv = add_noise(base_dv, value, run.seed);
                }
                const fs::path run_dir = out / ("run_" + args.axis + "_" + short_number(value));
                fs::create_directories(run_dir);
                run.output_dir = run_dir.string();

                const ReconstructionResult result =
                    reconstruct(dv, model, run.reconstruction());
                write_image(run_dir / "delta_sigma.mat", result.delta_sigma, model.geometry);
                write_loss_trace(run_dir / "loss_trace.csv", result.trace);
                write_metrics_csv(run_dir / "metrics.csv", run.method, run.seed, run.snr_db,
                                  result.delta_sigma, truth, model.geometry);
                run.write(run_dir);

                rows[i] = {value, evaluate_images(result.delta_sigma, truth, model.geometry,
                                                  true),
                           result.trace.back().total};
            } catch (const std::exception& e) {
                std::scoped_lock lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) throw NumericError("sweep: " + first_error);

    std::string csv = "axis,cc,psnr,err,mssim,final_loss\n";
    for (const Row& row : rows) {
        csv += short_number(row.value) + ',' + format_double(row.report.cc) + ',' +
               format_double(row.report.psnr) + ',' + format_double(row.report.err) + ',' +
               format_double(row.report.mssim) + ',' + format_double(row.final_loss) + '\n';
    }
    write_text_atomic(out / ("sweep_" + args.axis + ".csv"), csv);
    config.write(out);
    std::printf("swept %s over %zu values -> %s\n", args.axis.c_str(), args.values.size(),
                out.string().c_str());
    return 0;
}

struct ParamsArgs {
    long n = 0;
    int circuits = 2;
    int qubits = 2;
};

int cmd_params(const ParamsArgs& args) {
    std::printf("%-28s %10s %12s\n", "configuration", "elements", "parameters");
    auto print_row = [&](const std::string& name, std::size_t n, int nc, int nq) {
        std::printf("%-28s %10zu %12zu\n", name.c_str(), n, parameter_count(n, nc, nq));
    };
    if (args.n > 0) {
        print_row("custom (nc=" + std::to_string(args.circuits) +
                      ", nq=" + std::to_string(args.qubits) + ")",
                  static_cast<std::size_t>(args.n), args.circuits, args.qubits);
    } else {
        print_row("2D 64x64 (nc=2, nq=2)", 64 * 64, 2, 2);
        print_row("3D 32x32x40 (nc=2, nq=2)", 32 * 32 * 40, 2, 2);
    }
    return 0;
}

int cmd_import_check(const std::string& dir) {
    const SensitivityModel model = import_sensitivity(dir);
    std::printf("ok: %s\n", dir.c_str());
    std::printf("  geometry:     %s (%zu elements)\n", model.geometry.to_string().c_str(),
                model.geometry.element_count());
    std::printf("  measurements: %ld\n", static_cast<long>(model.jacobian.rows()));
    std::printf("  electrodes:   %d\n", model.protocol.n_electrodes);
    std::printf("  protocol:     %s\n", model.protocol.measurements.empty()
                                            ? "external (structure not declared)"
                                            : "adjacent single-ring");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised EIT reconstruction with a quantum-circuit latent generator"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path, grid_text, snr_text, lambda_preset;
    std::vector<double> lambda_override;

    // Global flags, also accepted by every subcommand.
    app.add_option("--config", config_path, "JSON run configuration file")->expected(1);
    app.add_option("--out", config.output_dir, "output directory");
    app.add_option("--seed", config.seed, "RNG seed");
    app.fallthrough();

    auto* simulate = app.add_subcommand("simulate", "simulate phantom measurements and build "
                                                    "the sensitivity model");
    simulate->add_option("--grid", grid_text, "grid dimensions, e.g. 64x64");
    simulate->add_option("--electrodes", config.electrodes, "electrode count");
    simulate->add_option("--phantom", config.phantom, "phantom preset (two-lung)");
    simulate->add_option("--snr", snr_text, "measurement SNR in dB, or 'none'");

    DataPaths paths;
    auto* reconstruct_cmd =
        app.add_subcommand("reconstruct", "reconstruct a conductivity change image");
    reconstruct_cmd->add_option("--data", paths.data_dir, "directory produced by simulate");
    reconstruct_cmd->add_option("--import", paths.import_dir,
                                "external sensitivity model directory");
    reconstruct_cmd->add_option("--voltages", paths.voltages, "normalized voltage vector file");
    reconstruct_cmd->add_option("--truth", paths.truth, "ground-truth image for metrics");
    reconstruct_cmd->add_option("--method", config.method,
                                "quanteit | ablation_ones | ablation_learned | noser");
    reconstruct_cmd->add_option("--iterations", config.iterations, "optimization iterations");
    reconstruct_cmd->add_option("--lr", config.lr, "learning rate");
    reconstruct_cmd->add_option("--lambda", lambda_override,
                                "regularization weights: laplacian tv l1")
        ->expected(3);
    reconstruct_cmd->add_option("--lambda-preset", lambda_preset, "2d-sim | 2d-real | 3d");
    reconstruct_cmd->add_option("--mu", config.mu, "Noser damping parameter");
    reconstruct_cmd->add_flag("--signed-output", config.signed_output,
                              "map the generator output to (-1, 1)");

    EvaluateArgs eval_args;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a reconstruction against truth");
    evaluate_cmd->add_option("--recon", eval_args.recon_path, "reconstruction image file")
        ->required();
    evaluate_cmd->add_option("--truth", eval_args.truth_path, "ground-truth image file")
        ->required();
    evaluate_cmd->add_option("--dims", eval_args.dims, "image dims WxH or WxHxD (3D requires it)");
    evaluate_cmd->add_option("--method-label", eval_args.label, "method column value");
    evaluate_cmd->add_option("--snr", snr_text, "snr column value in dB, or 'none'");
    evaluate_cmd->add_option("--csv-out", eval_args.out_path, "also write the CSV here");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "reconstruct across a range of lr or snr");
    sweep_cmd->add_option("--data", sweep_args.data_dir, "directory produced by simulate")
        ->required();
    sweep_cmd->add_option("--axis", sweep_args.axis, "lr | snr")->required();
    sweep_cmd->add_option("--values", sweep_args.values, "axis values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--method", config.method, "reconstruction method");
    sweep_cmd->add_option("--iterations", config.iterations, "optimization iterations");
    sweep_cmd->add_option("--lr", config.lr, "learning rate (fixed when sweeping snr)");
    sweep_cmd->add_option("--lambda", lambda_override,
                          "regularization weights: laplacian tv l1")
        ->expected(3);
    sweep_cmd->add_option("--lambda-preset", lambda_preset, "2d-sim | 2d-real | 3d");

    ParamsArgs params_args;
    auto* params_cmd = app.add_subcommand("params", "print trainable parameter counts");
    params_cmd->add_option("--n", params_args.n, "output element count");
    params_cmd->add_option("--circuits", params_args.circuits, "parallel circuits");
    params_cmd->add_option("--qubits", params_args.qubits, "qubits per circuit");

    std::string check_dir;
    auto* check_cmd =
        app.add_subcommand("import-check", "validate a sensitivity model directory");
    check_cmd->add_option("dir", check_dir, "sensitivity model directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        // Resolution order: defaults, then config file, then explicit flags.
        if (!config_path.empty()) {
            RunConfig from_file;
            from_file.load_file(config_path);
            const RunConfig cli_values = config;
            config = from_file;
            for (const CLI::Option* opt : app.get_options())
                if (opt->count() && opt->get_name() == "--out")
                    config.output_dir = cli_values.output_dir;
            for (const CLI::Option* opt : app.get_options())
                if (opt->count() && opt->get_name() == "--seed") config.seed = cli_values.seed;
            for (CLI::App* sub : {simulate, reconstruct_cmd, sweep_cmd})
                for (const CLI::Option* opt : sub->get_options())
                    if (opt->count()) {
                        const std::string name = opt->get_name();
                        if (name == "--electrodes") config.electrodes = cli_values.electrodes;
                        if (name == "--phantom") config.phantom = cli_values.phantom;
                        if (name == "--method") config.method = cli_values.method;
                        if (name == "--iterations") config.iterations = cli_values.iterations;
                        if (name == "--lr") config.lr = cli_values.lr;
                        if (name == "--mu") config.mu = cli_values.mu;
                        if (name == "--signed-output")
                            config.signed_output = cli_values.signed_output;
                    }
        }
        if (!grid_text.empty()) config.grid = parse_grid(grid_text);
        if (simulate->parsed() || evaluate_cmd->parsed()) {
            if (simulate->count("--snr") || evaluate_cmd->count("--snr"))
                config.snr_db = parse_snr(snr_text);
        }
        if (!lambda_preset.empty()) cli::apply_lambda_preset(config, lambda_preset);
        if (!lambda_override.empty()) {
            if (lambda_override.size() != 3)
                throw ValidationError("--lambda needs exactly 3 values");
            config.lambda = {lambda_override[0], lambda_override[1], lambda_override[2]};
        }

        if (simulate->parsed()) return cmd_simulate(config);
        if (reconstruct_cmd->parsed()) return cmd_reconstruct(config, paths);
        if (evaluate_cmd->parsed()) return cmd_evaluate(eval_args, config);
        if (sweep_cmd->parsed()) return cmd_sweep(config, sweep_args);
        if (params_cmd->parsed()) return cmd_params(params_args);
        if (check_cmd->parsed()) return cmd_import_check(check_dir);
        throw ValidationError("no subcommand given");
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

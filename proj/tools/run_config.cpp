#include "run_config.hpp"

#include <fstream>

#include <json.hpp>

#include <quanteit/io.hpp>

namespace quanteit::cli {

using nlohmann::json;

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    try {
        if (doc.contains("task")) task = doc["task"].get<std::string>();
        if (doc.contains("grid")) {
            const json& g = doc["grid"];
            grid = g.is_object() ? g.at("dims").get<std::vector<int>>()
                                 : g.get<std::vector<int>>();
        }
        if (doc.contains("electrodes")) electrodes = doc["electrodes"].get<int>();
        if (doc.contains("phantom")) {
            const json& p = doc["phantom"];
            if (p.is_string()) {
                phantom = p.get<std::string>();
            } else {
                phantom = "custom";
                ellipses.clear();
                for (const json& e : p) {
                    ellipses.push_back({e.at("center_x").get<double>(),
                                        e.at("center_y").get<double>(),
                                        e.at("semi_x").get<double>(),
                                        e.at("semi_y").get<double>(),
                                        e.at("conductivity").get<double>()});
                }
            }
        }
        if (doc.contains("background")) background = doc["background"].get<double>();
        if (doc.contains("snr_db")) {
            if (doc["snr_db"].is_null())
                snr_db.reset();
            else
                snr_db = doc["snr_db"].get<double>();
        }
        if (doc.contains("method")) method = doc["method"].get<std::string>();
        if (doc.contains("iterations")) iterations = doc["iterations"].get<int>();
        if (doc.contains("lr")) lr = doc["lr"].get<double>();
        if (doc.contains("lambda")) {
            const auto v = doc["lambda"].get<std::vector<double>>();
            if (v.size() != 3)
                throw ValidationError(path.string() + ": lambda must have 3 entries");
            lambda = {v[0], v[1], v[2]};
        }
        if (doc.contains("mu")) mu = doc["mu"].get<double>();
        if (doc.contains("seed")) seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("output_dir")) output_dir = doc["output_dir"].get<std::string>();
        if (doc.contains("signed_output")) signed_output = doc["signed_output"].get<bool>();
        if (doc.contains("n_circuits")) n_circuits = doc["n_circuits"].get<int>();
        if (doc.contains("n_qubits")) n_qubits = doc["n_qubits"].get<int>();
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

GeometrySpec RunConfig::geometry() const {
    if (grid.size() == 2) return GeometrySpec::grid2d(grid[0], grid[1]);
    if (grid.size() == 3) return GeometrySpec::grid3d(grid[0], grid[1], grid[2]);
    throw ValidationError("grid must have 2 or 3 dimensions");
}

PhantomSpec RunConfig::phantom_spec() const {
    if (phantom == "two-lung") return PhantomSpec::two_lung(geometry());
    if (phantom == "custom") {
        PhantomSpec spec;
        spec.geometry = geometry();
        spec.background = background;
        spec.ellipses = ellipses;
        return spec;
    }
    throw ValidationError("unknown phantom preset '" + phantom +
                          "' (expected two-lung, or custom with an ellipse list)");
}

ReconstructionConfig RunConfig::reconstruction() const {
    ReconstructionConfig rc;
    rc.method = parse_method(method);
    rc.iterations = iterations;
    rc.learning_rate = lr;
    rc.weights = weights();
    rc.seed = seed;
    rc.n_circuits = n_circuits;
    rc.n_qubits = n_qubits;
    rc.noser_mu = mu;
    rc.signed_output = signed_output;
    return rc;
}

std::string RunConfig::to_json() const {
    json doc;
    doc["task"] = task;
    doc["grid"] = {{"dims", grid}};
    doc["electrodes"] = electrodes;
    if (phantom == "custom") {
        json list = json::array();
        for (const auto& e : ellipses)
            list.push_back({{"center_x", e.center_x},
                            {"center_y", e.center_y},
                            {"semi_x", e.semi_x},
                            {"semi_y", e.semi_y},
                            {"conductivity", e.conductivity}});
        doc["phantom"] = list;
    } else {
        doc["phantom"] = phantom;
    }
    doc["background"] = background;
    doc["snr_db"] = snr_db ? json(*snr_db) : json(nullptr);
    doc["method"] = method;
    doc["iterations"] = iterations;
    doc["lr"] = lr;
    doc["lambda"] = lambda;
    doc["mu"] = mu;
    doc["seed"] = seed;
    doc["output_dir"] = output_dir;
    doc["signed_output"] = signed_output;
    doc["n_circuits"] = n_circuits;
    doc["n_qubits"] = n_qubits;
    return doc.dump(2) + "\n";
}

void RunConfig::write(const std::filesystem::path& out_dir) const {
    write_text_atomic(out_dir / "config.json", to_json());
}

std::optional<RunConfig> try_load_dir_config(const std::filesystem::path& dir) {
    const auto path = dir / "config.json";
    if (!std::filesystem::exists(path)) return std::nullopt;
    RunConfig config;
    config.load_file(path);
    return config;
}

void apply_lambda_preset(RunConfig& config, const std::string& preset) {
    RegWeights w;
    if (preset == "2d-sim")
        w = lambda_preset_2d_sim();
    else if (preset == "2d-real")
        w = lambda_preset_2d_real();
    else if (preset == "3d")
        w = lambda_preset_3d();
    else
        throw ValidationError("unknown lambda preset '" + preset +
                              "' (expected 2d-sim, 2d-real or 3d)");
    config.lambda = {w.laplacian, w.tv, w.l1};
}

} // namespace quanteit::cli

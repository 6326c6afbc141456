#include "quanteit/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <system_error>

#include <json.hpp>

namespace quanteit {

namespace fs = std::filesystem;

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw ValidationError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw ValidationError("rename to " + path.string() + " failed: " + ec.message());
}

void write_matrix(const fs::path& path, const Eigen::MatrixXd& matrix) {
    std::string out;
    out.reserve(static_cast<std::size_t>(matrix.size()) * 20 + 32);
    out += std::to_string(matrix.rows());
    out += ' ';
    out += std::to_string(matrix.cols());
    out += '\n';
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            if (c > 0) out += ' ';
            out += format_double(matrix(r, c));
        }
        out += '\n';
    }
    write_text_atomic(path, out);
}

namespace {

[[noreturn]] void parse_fail(const fs::path& path, int line, const std::string& what) {
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + what);
}

} // namespace

Eigen::MatrixXd read_matrix(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) parse_fail(path, 1, "missing header line");
    long rows = 0, cols = 0;
    if (std::sscanf(line.c_str(), "%ld %ld", &rows, &cols) != 2 || rows < 1 || cols < 1)
        parse_fail(path, 1, "header must be 'ROWS COLS' with positive integers, got '" + line +
                                "'");
    if (rows > 1'000'000 || cols > 1'000'000 || rows * cols > 200'000'000)
        parse_fail(path, 1, "implausible dimensions " + std::to_string(rows) + "x" +
                                std::to_string(cols));

    Eigen::MatrixXd matrix(rows, cols);
    for (long r = 0; r < rows; ++r) {
        const int line_no = static_cast<int>(r) + 2;
        if (!std::getline(in, line))
            parse_fail(path, line_no, "unexpected end of file, expected " +
                                          std::to_string(rows) + " data rows");
        const char* cursor = line.c_str();
        for (long c = 0; c < cols; ++c) {
            char* end = nullptr;
            errno = 0;
            const double value = std::strtod(cursor, &end);
            if (end == cursor || errno == ERANGE)
                parse_fail(path, line_no,
                           "expected " + std::to_string(cols) + " numbers, failed at column " +
                               std::to_string(c + 1));
            matrix(r, c) = value;
            cursor = end;
        }
        while (*cursor == ' ' || *cursor == '\t' || *cursor == '\r') ++cursor;
        if (*cursor != '\0')
            parse_fail(path, line_no, "trailing content after " + std::to_string(cols) +
                                          " numbers: '" + std::string(cursor) + "'");
    }
    return matrix;
}

void write_vector(const fs::path& path, const Eigen::VectorXd& vector) {
    write_matrix(path, vector);
}

Eigen::VectorXd read_vector(const fs::path& path) {
    const Eigen::MatrixXd m = read_matrix(path);
    if (m.cols() != 1)
        throw ValidationError(path.string() + ": expected a single column, got " +
                              std::to_string(m.cols()));
    return m.col(0);
}

void write_image(const fs::path& path, const Eigen::VectorXd& flat,
                 const GeometrySpec& geometry) {
    geometry.validate();
    if (static_cast<std::size_t>(flat.size()) != geometry.element_count())
        throw ValidationError("write_image: " + std::to_string(flat.size()) +
                              " values for geometry " + geometry.to_string());
    const Eigen::Index rows = static_cast<Eigen::Index>(geometry.height) * geometry.depth;
    Eigen::MatrixXd m(rows, geometry.width);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < geometry.width; ++c)
            m(r, c) = flat[r * geometry.width + c];
    write_matrix(path, m);
}

Eigen::VectorXd read_image(const fs::path& path, const GeometrySpec& geometry) {
    geometry.validate();
    const Eigen::MatrixXd m = read_matrix(path);
    const Eigen::Index rows = static_cast<Eigen::Index>(geometry.height) * geometry.depth;
    if (m.rows() != rows || m.cols() != geometry.width)
        throw ValidationError(path.string() + ": image is " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + ", geometry " + geometry.to_string() +
                              " expects " + std::to_string(rows) + "x" +
                              std::to_string(geometry.width));
    Eigen::VectorXd flat(geometry.element_count());
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < geometry.width; ++c)
            flat[r * geometry.width + c] = m(r, c);
    return flat;
}

void write_pgm(const fs::path& path, const Eigen::VectorXd& flat, const GeometrySpec& geometry) {
    geometry.validate();
    if (geometry.kind != GridKind::Grid2D)
        throw ValidationError("write_pgm: only 2D images can be rendered");
    if (static_cast<std::size_t>(flat.size()) != geometry.element_count())
        throw ValidationError("write_pgm: " + std::to_string(flat.size()) +
                              " values for geometry " + geometry.to_string());
    const double max = flat.maxCoeff();
    std::string out = "P2\n" + std::to_string(geometry.width) + " " +
                      std::to_string(geometry.height) + "\n255\n";
    for (int y = 0; y < geometry.height; ++y) {
        for (int x = 0; x < geometry.width; ++x) {
            double v = flat[geometry.index(x, y)];
            int gray = 0;
            if (max > 0.0) {
                v = std::clamp(v, 0.0, max);
                gray = static_cast<int>(std::lround(255.0 * v / max));
            }
            if (x > 0) out += ' ';
            out += std::to_string(gray);
        }
        out += '\n';
    }
    write_text_atomic(path, out);
}

void export_sensitivity(const SensitivityModel& model, const fs::path& dir) {
    model.validate();
    fs::create_directories(dir);
    write_matrix(dir / "J.mat", model.jacobian);
    write_vector(dir / "vref.vec", model.v_ref);

    nlohmann::json geo;
    geo["kind"] = model.geometry.kind == GridKind::Grid2D ? "grid2d" : "grid3d";
    if (model.geometry.kind == GridKind::Grid2D)
        geo["dims"] = {model.geometry.width, model.geometry.height};
    else
        geo["dims"] = {model.geometry.width, model.geometry.height, model.geometry.depth};
    geo["n_electrodes"] = model.protocol.n_electrodes;
    geo["m"] = model.v_ref.size();
    write_text_atomic(dir / "geometry.json", geo.dump(2) + "\n");
}

SensitivityModel import_sensitivity(const fs::path& dir) {
    const fs::path geo_path = dir / "geometry.json";
    std::ifstream geo_in(geo_path);
    if (!geo_in) throw ValidationError("cannot open " + geo_path.string());
    nlohmann::json geo;
    try {
        geo = nlohmann::json::parse(geo_in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(geo_path.string() + ": " + e.what());
    }

    SensitivityModel model;
    try {
        const std::string kind = geo.at("kind").get<std::string>();
        const auto dims = geo.at("dims").get<std::vector<int>>();
        if (kind == "grid2d" && dims.size() == 2)
            model.geometry = GeometrySpec::grid2d(dims[0], dims[1]);
        else if (kind == "grid3d" && dims.size() == 3)
            model.geometry = GeometrySpec::grid3d(dims[0], dims[1], dims[2]);
        else
            throw ValidationError(geo_path.string() + ": kind '" + kind + "' with " +
                                  std::to_string(dims.size()) + " dims is not a valid geometry");
        model.protocol.n_electrodes = geo.at("n_electrodes").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(geo_path.string() + ": " + e.what());
    }

    model.jacobian = read_matrix(dir / "J.mat");
    model.v_ref = read_vector(dir / "vref.vec");

    const long declared_m = geo.value("m", -1);
    if (declared_m >= 0 && declared_m != model.jacobian.rows())
        throw ValidationError(geo_path.string() + ": declares m=" + std::to_string(declared_m) +
                              " but J.mat has " + std::to_string(model.jacobian.rows()) +
                              " rows");

    // Data rows start at line 2, after the header.
    for (Eigen::Index k = 0; k < model.jacobian.rows(); ++k)
        if (model.jacobian.row(k).cwiseAbs().maxCoeff() == 0.0)
            throw ValidationError((dir / "J.mat").string() + ":" + std::to_string(k + 2) +
                                  ": row " + std::to_string(k) + " is all zeros");
    for (Eigen::Index k = 0; k < model.v_ref.size(); ++k)
        if (model.v_ref[k] == 0.0)
            throw ValidationError((dir / "vref.vec").string() + ":" + std::to_string(k + 2) +
                                  ": reference voltage is zero");

    // The adjacent single-ring protocol is reconstructible when the count
    // matches; otherwise the measurement structure stays external and only
    // the electrode count is carried.
    const Protocol adjacent = Protocol::adjacent(model.protocol.n_electrodes);
    if (static_cast<Eigen::Index>(adjacent.measurement_count()) == model.jacobian.rows())
        model.protocol = adjacent;

    try {
        model.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(dir.string() + ": " + e.what());
    }
    return model;
}

} // namespace quanteit

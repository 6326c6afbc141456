#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <quanteit/io.hpp>

#include "testutil.hpp"

using namespace quanteit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("quanteit_io_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("matrix round trip is exact") {
    TempDir tmp;
    std::mt19937 rng(1);
    Eigen::MatrixXd m(7, 5);
    for (Eigen::Index r = 0; r < 7; ++r)
        for (Eigen::Index c = 0; c < 5; ++c)
            m(r, c) = std::uniform_real_distribution<double>(-1e3, 1e3)(rng) *
                      std::pow(10.0, std::uniform_int_distribution<int>(-12, 12)(rng));
    m(0, 0) = 0.0;
    m(1, 1) = -0.1;
    write_matrix(tmp.path / "m.mat", m);
    const Eigen::MatrixXd back = read_matrix(tmp.path / "m.mat");
    CHECK(back == m); // bitwise

    SUBCASE("rewrite is byte-identical") {
        const std::string first = slurp(tmp.path / "m.mat");
        write_matrix(tmp.path / "m.mat", back);
        CHECK(slurp(tmp.path / "m.mat") == first);
    }
}

TEST_CASE("header and format") {
    TempDir tmp;
    Eigen::MatrixXd m(2, 3);
    m << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
    write_matrix(tmp.path / "m.mat", m);
    const std::string text = slurp(tmp.path / "m.mat");
    CHECK(text.substr(0, 4) == "2 3\n");
    CHECK(text.back() == '\n');
    CHECK(text.find(".tmp") == std::string::npos);
    CHECK(!fs::exists(tmp.path / "m.mat.tmp"));
}

TEST_CASE("parse errors carry the line number") {
    TempDir tmp;
    auto write_raw = [&](const std::string& name, const std::string& content) {
        std::ofstream(tmp.path / name) << content;
        return tmp.path / name;
    };

    CHECK_THROWS_WITH_AS(read_matrix(write_raw("bad1.mat", "not a header\n")),
                         doctest::Contains(":1:"), ValidationError);
    CHECK_THROWS_WITH_AS(read_matrix(write_raw("bad2.mat", "2 2\n1 2\n")),
                         doctest::Contains(":3:"), ValidationError);
    CHECK_THROWS_WITH_AS(read_matrix(write_raw("bad3.mat", "2 2\n1 2\n3 oops\n")),
                         doctest::Contains(":3:"), ValidationError);
    CHECK_THROWS_WITH_AS(read_matrix(write_raw("bad4.mat", "1 2\n1 2 3\n")),
                         doctest::Contains(":2:"), ValidationError);
    CHECK_THROWS_AS(read_matrix(tmp.path / "missing.mat"), ValidationError);
}

TEST_CASE("image layout: rows are grid rows") {
    TempDir tmp;
    const auto g = GeometrySpec::grid2d(3, 2);
    Eigen::VectorXd flat(6);
    flat << 1, 2, 3, 4, 5, 6; // row y=0 then y=1
    write_image(tmp.path / "img.mat", flat, g);
    const Eigen::MatrixXd m = read_matrix(tmp.path / "img.mat");
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(0, 2) == 3.0);
    CHECK(m(1, 0) == 4.0);
    CHECK(read_image(tmp.path / "img.mat", g) == flat);

    SUBCASE("3d volumes stack slices") {
        const auto g3 = GeometrySpec::grid3d(2, 2, 2);
        Eigen::VectorXd vol = Eigen::VectorXd::LinSpaced(8, 1.0, 8.0);
        write_image(tmp.path / "vol.mat", vol, g3);
        const Eigen::MatrixXd mv = read_matrix(tmp.path / "vol.mat");
        CHECK(mv.rows() == 4);
        CHECK(mv.cols() == 2);
        CHECK(read_image(tmp.path / "vol.mat", g3) == vol);
    }
}

TEST_CASE("pgm rendering") {
    TempDir tmp;
    const auto g = GeometrySpec::grid2d(2, 2);
    Eigen::VectorXd img(4);
    img << 0.0, 0.5, 1.0, -0.3; // negatives clamp to black
    write_pgm(tmp.path / "img.pgm", img, g);
    const std::string text = slurp(tmp.path / "img.pgm");
    CHECK(text == "P2\n2 2\n255\n0 128\n255 0\n");
}

TEST_CASE("sensitivity model export/import") {
    TempDir tmp;
    const auto g = GeometrySpec::grid2d(12, 12);
    const auto model = build_jacobian_adjoint(ConductivityField::uniform(g, 0.24),
                                              Protocol::adjacent(8));
    export_sensitivity(model, tmp.path / "sens");
    CHECK(fs::exists(tmp.path / "sens" / "J.mat"));
    CHECK(fs::exists(tmp.path / "sens" / "vref.vec"));
    CHECK(fs::exists(tmp.path / "sens" / "geometry.json"));

    const SensitivityModel back = import_sensitivity(tmp.path / "sens");
    CHECK(back.jacobian == model.jacobian); // bitwise through the text format
    CHECK(back.v_ref == model.v_ref);
    CHECK(back.geometry == model.geometry);
    CHECK(back.protocol.n_electrodes == 8);
    CHECK(back.protocol.measurement_count() == 20);

    SUBCASE("declared m must match J") {
        std::ofstream(tmp.path / "sens" / "geometry.json")
            << R"({"kind":"grid2d","dims":[12,12],"n_electrodes":8,"m":21})";
        CHECK_THROWS_WITH_AS(import_sensitivity(tmp.path / "sens"),
                             doctest::Contains("m=21"), ValidationError);
    }
    SUBCASE("dimension mismatch against the geometry is rejected") {
        std::ofstream(tmp.path / "sens" / "geometry.json")
            << R"({"kind":"grid2d","dims":[10,12],"n_electrodes":8,"m":20})";
        CHECK_THROWS_AS(import_sensitivity(tmp.path / "sens"), ValidationError);
    }
    SUBCASE("a zero jacobian row is rejected on load") {
        Eigen::MatrixXd j = model.jacobian;
        j.row(5).setZero();
        write_matrix(tmp.path / "sens" / "J.mat", j);
        CHECK_THROWS_WITH_AS(import_sensitivity(tmp.path / "sens"),
                             doctest::Contains("row 5"), ValidationError);
    }
    SUBCASE("malformed json is reported") {
        std::ofstream(tmp.path / "sens" / "geometry.json") << "{ nope";
        CHECK_THROWS_AS(import_sensitivity(tmp.path / "sens"), ValidationError);
    }
    SUBCASE("a 3d declaration with unknown protocol structure still loads") {
        // 328-row jacobian is not an adjacent single-ring count for E=32, so
        // the measurement structure stays external.
        const int m = 328, n = 4 * 4 * 4;
        Eigen::MatrixXd j = Eigen::MatrixXd::Constant(m, n, 0.5);
        Eigen::VectorXd vr = Eigen::VectorXd::Constant(m, 1.0);
        fs::create_directories(tmp.path / "ext");
        write_matrix(tmp.path / "ext" / "J.mat", j);
        write_vector(tmp.path / "ext" / "vref.vec", vr);
        std::ofstream(tmp.path / "ext" / "geometry.json")
            << R"({"kind":"grid3d","dims":[4,4,4],"n_electrodes":32,"m":328})";
        const SensitivityModel ext = import_sensitivity(tmp.path / "ext");
        CHECK(ext.geometry.kind == GridKind::Grid3D);
        CHECK(ext.protocol.n_electrodes == 32);
        CHECK(ext.protocol.measurements.empty());
        CHECK(ext.jacobian.rows() == 328);
    }
}

}

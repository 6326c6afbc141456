#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "quanteit/forward_model.hpp"
#include "quanteit/geometry.hpp"

namespace quanteit {

// Plain-text matrix format: first line "ROWS COLS", then ROWS lines of COLS
// space-separated decimals. Doubles are printed with 17 significant digits so
// a write/read round trip is exact.

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

// Vectors are stored as n x 1 matrices.
void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& vector);
Eigen::VectorXd read_vector(const std::filesystem::path& path);

// Flat images are stored with COLS = width; 3D volumes stack their 2D slices,
// giving ROWS = height * depth.
void write_image(const std::filesystem::path& path, const Eigen::VectorXd& flat,
                 const GeometrySpec& geometry);
Eigen::VectorXd read_image(const std::filesystem::path& path, const GeometrySpec& geometry);

// ASCII PGM (P2) rendering of a 2D image: [0, max] mapped linearly to
// [0, 255], negatives clamped to 0.
void write_pgm(const std::filesystem::path& path, const Eigen::VectorXd& flat,
               const GeometrySpec& geometry);

// On-disk sensitivity model: a directory holding J.mat, vref.vec and
// geometry.json (keys: kind, dims, n_electrodes, m).
void export_sensitivity(const SensitivityModel& model, const std::filesystem::path& dir);
SensitivityModel import_sensitivity(const std::filesystem::path& dir);

// All writers go through write-then-rename so partially written files are
// never observed.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string format_double(double value); // 17 significant digits, round-trip safe

} // namespace quanteit

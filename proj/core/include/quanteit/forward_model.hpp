#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "quanteit/geometry.hpp"

namespace quanteit {

// Per-pixel conductivity in S/m on a 2D grid. Values live on grid nodes;
// faces between adjacent nodes carry the harmonic mean.
struct ConductivityField {
    GeometrySpec geometry;
    Eigen::VectorXd values;

    void validate() const; // grid2d, positive finite values
    static ConductivityField uniform(const GeometrySpec& geometry, double sigma);
};

// One four-terminal measurement: current through adjacent electrode pair
// (drive, drive+1 mod E), differential voltage on (sense, sense+1 mod E).
struct MeasurementPair {
    int drive = 0;
    int sense = 0;
    bool operator==(const MeasurementPair&) const = default;
};

// Adjacent drive / adjacent measure with pairs touching the drive skipped and
// reciprocal duplicates removed (the lexicographically smaller (drive, sense)
// survives). Measurement order is drive-major, sense-minor.
struct Protocol {
    int n_electrodes = 0;
    std::vector<MeasurementPair> measurements;

    static Protocol adjacent(int n_electrodes);
    std::size_t measurement_count() const { return measurements.size(); }
    void validate() const;
};

// Evenly spaced boundary nodes, clockwise from the (0, 0) corner. Returns
// flat node indices.
std::vector<int> electrode_nodes(const GeometrySpec& geometry, int n_electrodes);

// Discrete conservation law div(sigma grad u) = 0 on the grid: 5-point
// stencil, harmonic face conductances, homogeneous Neumann boundary, and the
// potential pinned to zero at the grid center node. Factorizes once; each
// solve injects +I/-I at two nodes.
class GridSolver {
public:
    explicit GridSolver(const ConductivityField& field);
    ~GridSolver();
    GridSolver(GridSolver&&) noexcept;
    GridSolver& operator=(GridSolver&&) noexcept;

    // Node potentials for +current at node_source, -current at node_sink.
    // Verifies the full-system residual is <= 1e-10 relative.
    Eigen::VectorXd solve_injection(int node_source, int node_sink, double current) const;

    const ConductivityField& field() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Single solve against a drive electrode pair; electrodes indexed within the
// n_electrodes ring.
Eigen::VectorXd solve_potential(const ConductivityField& field,
                                std::pair<int, int> drive_electrodes, int n_electrodes,
                                double current = 1.0);

// One differential voltage per protocol measurement, in protocol order.
Eigen::VectorXd simulate_measurements(const ConductivityField& field, const Protocol& protocol);

// (v_obs - v_ref) / v_ref elementwise; a zero reference entry is an error.
Eigen::VectorXd normalize_voltages(const Eigen::VectorXd& v_obs, const Eigen::VectorXd& v_ref);

// -(sigma_obs - sigma_ref) / sigma_ref elementwise; positive where
// conductivity drops.
Eigen::VectorXd normalize_conductivity(const ConductivityField& obs, const ConductivityField& ref);

// Linearization of the normalized forward map around a reference field.
struct SensitivityModel {
    Eigen::MatrixXd jacobian; // m x n, normalized units
    Eigen::VectorXd v_ref;    // m, volts at the reference conductivity
    Protocol protocol;
    GeometrySpec geometry;

    void validate() const; // no zero jacobian rows, nonzero v_ref, shape consistency
};

// Column-by-column perturbation oracle: J[k][p] from re-solving with
// sigma_p nudged by delta_rel * sigma_p.
SensitivityModel build_jacobian_bruteforce(const ConductivityField& sigma_ref,
                                           const Protocol& protocol, double delta_rel = 1e-6);

// Sensitivity-theorem construction from drive-field/measurement-field
// products; one factorization and E solves total. Matches the brute-force
// oracle within 1% relative Frobenius norm.
SensitivityModel build_jacobian_adjoint(const ConductivityField& sigma_ref,
                                        const Protocol& protocol);

struct Ellipse {
    double center_x = 0.0;
    double center_y = 0.0;
    double semi_x = 0.0;
    double semi_y = 0.0;
    double conductivity = 0.0; // S/m
};

struct PhantomSpec {
    GeometrySpec geometry;
    double background = 0.24; // S/m
    std::vector<Ellipse> ellipses;

    // Two vertically elongated lungs symmetric about the vertical midline:
    // background 0.24, left lung 0.17, right lung 0.14 S/m.
    static PhantomSpec two_lung(const GeometrySpec& geometry);
};

struct Phantom {
    ConductivityField reference; // uniform background
    ConductivityField observed;  // ellipses stamped over the background
};

Phantom make_phantom(const PhantomSpec& spec);

// Adds i.i.d. Gaussian noise scaled to hit the requested SNR:
// std = rms(delta_v) * 10^(-snr_db/20). An infinite snr_db is the no-noise
// sentinel and returns the input unchanged.
Eigen::VectorXd add_noise(const Eigen::VectorXd& delta_v, double snr_db, std::uint64_t seed);

} // namespace quanteit

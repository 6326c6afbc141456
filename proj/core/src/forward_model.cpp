#include "quanteit/forward_model.hpp"

#include <cmath>
#include <string>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "rng.hpp"

namespace quanteit {

void ConductivityField::validate() const {
    geometry.validate();
    if (geometry.kind != GridKind::Grid2D)
        throw ValidationError("conductivity field: only 2D grids are solvable here; "
                              "3D sensitivity models must be imported");
    if (static_cast<std::size_t>(values.size()) != geometry.element_count())
        throw ValidationError("conductivity field: " + std::to_string(values.size()) +
                              " values for geometry " + geometry.to_string());
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (!(values[i] > 0.0) || !std::isfinite(values[i]))
            throw ValidationError("conductivity field: value at index " + std::to_string(i) +
                                  " must be positive and finite");
}

ConductivityField ConductivityField::uniform(const GeometrySpec& geometry, double sigma) {
    ConductivityField f{geometry, Eigen::VectorXd::Constant(geometry.element_count(), sigma)};
    f.validate();
    return f;
}

Protocol Protocol::adjacent(int n_electrodes) {
    if (n_electrodes < 4)
        throw ValidationError("protocol: need at least 4 electrodes, got " +
                              std::to_string(n_electrodes));
    Protocol p;
    p.n_electrodes = n_electrodes;
    const int e = n_electrodes;
    for (int drive = 0; drive < e; ++drive) {
        for (int sense = 0; sense < e; ++sense) {
            // Skip sense pairs sharing an electrode with the drive pair.
            const int lo = (drive + e - 1) % e;
            const int hi = (drive + 1) % e;
            if (sense == drive || sense == lo || sense == hi) continue;
            // Reciprocity dedup: keep the lexicographically smaller combination.
            if (drive < sense) p.measurements.push_back({drive, sense});
        }
    }
    return p;
}

void Protocol::validate() const {
    if (n_electrodes < 4) throw ValidationError("protocol: need at least 4 electrodes");
    for (const auto& mp : measurements) {
        if (mp.drive < 0 || mp.drive >= n_electrodes || mp.sense < 0 ||
            mp.sense >= n_electrodes)
            throw ValidationError("protocol: measurement pair indices out of range");
    }
}

std::vector<int> electrode_nodes(const GeometrySpec& geometry, int n_electrodes) {
    geometry.validate();
    if (geometry.kind != GridKind::Grid2D)
        throw ValidationError("electrodes: only 2D grids carry a boundary ring");
    const int w = geometry.width, h = geometry.height;
    if (w < 2 || h < 2) throw ValidationError("electrodes: grid must be at least 2x2");

    // Boundary walk, clockwise from corner (0, 0).
    std::vector<int> boundary;
    boundary.reserve(2 * w + 2 * h - 4);
    for (int x = 0; x < w; ++x) boundary.push_back(static_cast<int>(geometry.index(x, 0)));
    for (int y = 1; y < h; ++y) boundary.push_back(static_cast<int>(geometry.index(w - 1, y)));
    for (int x = w - 2; x >= 0; --x)
        boundary.push_back(static_cast<int>(geometry.index(x, h - 1)));
    for (int y = h - 2; y >= 1; --y) boundary.push_back(static_cast<int>(geometry.index(0, y)));

    const int ring = static_cast<int>(boundary.size());
    if (n_electrodes < 1 || n_electrodes > ring)
        throw ValidationError("electrodes: " + std::to_string(n_electrodes) +
                              " electrodes do not fit a boundary of " + std::to_string(ring) +
                              " nodes");
    std::vector<int> nodes(n_electrodes);
    for (int e = 0; e < n_electrodes; ++e)
        nodes[e] = boundary[static_cast<std::size_t>(e) * ring / n_electrodes];
    return nodes;
}

// ---------------------------------------------------------------------------
// Grid solver

struct GridSolver::Impl {
    ConductivityField field;
    int ref_node = 0; // grid center, potential pinned to 0
    Eigen::SparseMatrix<double> reduced; // conductance matrix without the ref row/col
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factorization;

    int reduced_index(int node) const { return node < ref_node ? node : node - 1; }
};

GridSolver::GridSolver(const ConductivityField& field) : impl_(std::make_unique<Impl>()) {
    field.validate();
    impl_->field = field;
    const GeometrySpec& g = field.geometry;
    const int w = g.width, h = g.height;
    const int n = static_cast<int>(g.element_count());
    impl_->ref_node = static_cast<int>(g.index(w / 2, h / 2));

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n) * 8);
    auto add_entry = [&](int a, int b, double value) {
        const int ra = impl_->reduced_index(a);
        const int rb = impl_->reduced_index(b);
        if (a == impl_->ref_node || b == impl_->ref_node) return;
        triplets.emplace_back(ra, rb, value);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int p = static_cast<int>(g.index(x, y));
            auto face = [&](int qx, int qy) {
                const int q = static_cast<int>(g.index(qx, qy));
                const double sp = field.values[p], sq = field.values[q];
                const double cond = 2.0 * sp * sq / (sp + sq); // harmonic mean
                add_entry(p, p, cond);
                add_entry(q, q, cond);
                add_entry(p, q, -cond);
                add_entry(q, p, -cond);
            };
            if (x + 1 < w) face(x + 1, y);
            if (y + 1 < h) face(x, y + 1);
        }
    }
    impl_->reduced.resize(n - 1, n - 1);
    impl_->reduced.setFromTriplets(triplets.begin(), triplets.end());
    impl_->factorization.compute(impl_->reduced);
    if (impl_->factorization.info() != Eigen::Success)
        throw NumericError("grid solver: factorization failed (singular or ill-conditioned "
                           "conductance matrix)");
}

GridSolver::~GridSolver() = default;
GridSolver::GridSolver(GridSolver&&) noexcept = default;
GridSolver& GridSolver::operator=(GridSolver&&) noexcept = default;

const ConductivityField& GridSolver::field() const { return impl_->field; }

Eigen::VectorXd GridSolver::solve_injection(int node_source, int node_sink,
                                            double current) const {
    const int n = static_cast<int>(impl_->field.geometry.element_count());
    if (node_source < 0 || node_source >= n || node_sink < 0 || node_sink >= n)
        throw ValidationError("grid solver: injection node out of range");
    if (node_source == node_sink)
        throw ValidationError("grid solver: source and sink nodes must differ");
    if (!std::isfinite(current)) throw ValidationError("grid solver: current must be finite");

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
    const int ref = impl_->ref_node;
    if (node_source != ref) rhs[impl_->reduced_index(node_source)] += current;
    if (node_sink != ref) rhs[impl_->reduced_index(node_sink)] -= current;

    const Eigen::VectorXd u_reduced = impl_->factorization.solve(rhs);
    if (impl_->factorization.info() != Eigen::Success)
        throw NumericError("grid solver: solve failed");
    const double rhs_norm = rhs.norm();
    if (rhs_norm > 0.0) {
        const double residual = (impl_->reduced * u_reduced - rhs).norm() / rhs_norm;
        if (residual > 1e-10)
            throw NumericError("grid solver: relative residual " + std::to_string(residual) +
                               " exceeds 1e-10");
    }

    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i)
        u[i] = (i == ref) ? 0.0 : u_reduced[impl_->reduced_index(i)];
    return u;
}

Eigen::VectorXd solve_potential(const ConductivityField& field,
                                std::pair<int, int> drive_electrodes, int n_electrodes,
                                double current) {
    const auto nodes = electrode_nodes(field.geometry, n_electrodes);
    auto [a, b] = drive_electrodes;
    if (a < 0 || a >= n_electrodes || b < 0 || b >= n_electrodes)
        throw ValidationError("solve_potential: drive electrode out of range");
    if (a == b) throw ValidationError("solve_potential: drive electrodes must differ");
    GridSolver solver(field);
    return solver.solve_injection(nodes[a], nodes[b], current);
}

namespace {

// Shared by simulation and jacobian assembly: one potential field per
// adjacent electrode pair, unit current.
std::vector<Eigen::VectorXd> pair_fields(const GridSolver& solver,
                                         const std::vector<int>& nodes) {
    const int e = static_cast<int>(nodes.size());
    std::vector<Eigen::VectorXd> fields;
    fields.reserve(e);
    for (int i = 0; i < e; ++i)
        fields.push_back(solver.solve_injection(nodes[i], nodes[(i + 1) % e], 1.0));
    return fields;
}

double pair_voltage(const Eigen::VectorXd& u, const std::vector<int>& nodes, int sense) {
    const int e = static_cast<int>(nodes.size());
    return u[nodes[sense]] - u[nodes[(sense + 1) % e]];
}

} // namespace

Eigen::VectorXd simulate_measurements(const ConductivityField& field, const Protocol& protocol) {
    protocol.validate();
    const auto nodes = electrode_nodes(field.geometry, protocol.n_electrodes);
    GridSolver solver(field);

    // Solve per distinct drive pair; measurements are drive-major so a tiny
    // cache of the last field suffices.
    Eigen::VectorXd v(protocol.measurement_count());
    int cached_drive = -1;
    Eigen::VectorXd u;
    for (std::size_t k = 0; k < protocol.measurements.size(); ++k) {
        const auto& mp = protocol.measurements[k];
        if (mp.drive != cached_drive) {
            u = solver.solve_injection(nodes[mp.drive],
                                       nodes[(mp.drive + 1) % protocol.n_electrodes], 1.0);
            cached_drive = mp.drive;
        }
        v[k] = pair_voltage(u, nodes, mp.sense);
    }
    return v;
}

Eigen::VectorXd normalize_voltages(const Eigen::VectorXd& v_obs, const Eigen::VectorXd& v_ref) {
    if (v_obs.size() != v_ref.size())
        throw ValidationError("normalize_voltages: lengths differ (" +
                              std::to_string(v_obs.size()) + " vs " +
                              std::to_string(v_ref.size()) + ")");
    for (Eigen::Index i = 0; i < v_ref.size(); ++i)
        if (v_ref[i] == 0.0)
            throw ValidationError("normalize_voltages: reference entry " + std::to_string(i) +
                                  " is zero");
    return (v_obs - v_ref).cwiseQuotient(v_ref);
}

Eigen::VectorXd normalize_conductivity(const ConductivityField& obs,
                                       const ConductivityField& ref) {
    obs.validate();
    ref.validate();
    if (obs.geometry != ref.geometry)
        throw ValidationError("normalize_conductivity: geometries differ (" +
                              obs.geometry.to_string() + " vs " + ref.geometry.to_string() + ")");
    return -(obs.values - ref.values).cwiseQuotient(ref.values);
}

void SensitivityModel::validate() const {
    geometry.validate();
    protocol.validate();
    const Eigen::Index m = jacobian.rows();
    const Eigen::Index n = jacobian.cols();
    if (static_cast<std::size_t>(n) != geometry.element_count())
        throw ValidationError("sensitivity model: jacobian has " + std::to_string(n) +
                              " columns but geometry " + geometry.to_string() + " has " +
                              std::to_string(geometry.element_count()) + " elements");
    // Imported models may carry an external measurement structure, in which
    // case only the electrode count is known and the list is empty.
    if (!protocol.measurements.empty() &&
        static_cast<std::size_t>(m) != protocol.measurement_count())
        throw ValidationError("sensitivity model: jacobian has " + std::to_string(m) +
                              " rows but protocol has " +
                              std::to_string(protocol.measurement_count()) + " measurements");
    if (v_ref.size() != m)
        throw ValidationError("sensitivity model: v_ref length " + std::to_string(v_ref.size()) +
                              " != measurement count " + std::to_string(m));
    if (!jacobian.allFinite() || !v_ref.allFinite())
        throw ValidationError("sensitivity model: non-finite entries");
    for (Eigen::Index k = 0; k < m; ++k) {
        if (v_ref[k] == 0.0)
            throw ValidationError("sensitivity model: v_ref entry " + std::to_string(k) +
                                  " is zero");
        if (jacobian.row(k).cwiseAbs().maxCoeff() == 0.0)
            throw ValidationError("sensitivity model: jacobian row " + std::to_string(k) +
                                  " is all zeros");
    }
}

SensitivityModel build_jacobian_bruteforce(const ConductivityField& sigma_ref,
                                           const Protocol& protocol, double delta_rel) {
    sigma_ref.validate();
    if (!(delta_rel > 0.0) || !std::isfinite(delta_rel))
        throw ValidationError("jacobian: perturbation step must be positive and finite");
    const Eigen::VectorXd v_ref = simulate_measurements(sigma_ref, protocol);
    const Eigen::Index n = sigma_ref.values.size();
    const Eigen::Index m = v_ref.size();

    SensitivityModel model;
    model.jacobian.resize(m, n);
    model.v_ref = v_ref;
    model.protocol = protocol;
    model.geometry = sigma_ref.geometry;

    ConductivityField perturbed = sigma_ref;
    for (Eigen::Index p = 0; p < n; ++p) {
        const double delta = delta_rel * sigma_ref.values[p];
        perturbed.values[p] = sigma_ref.values[p] + delta;
        const Eigen::VectorXd v_pert = simulate_measurements(perturbed, protocol);
        perturbed.values[p] = sigma_ref.values[p];
        model.jacobian.col(p) =
            (-sigma_ref.values[p] / delta) * (v_pert - v_ref).cwiseQuotient(v_ref);
    }
    model.validate();
    return model;
}

SensitivityModel build_jacobian_adjoint(const ConductivityField& sigma_ref,
                                        const Protocol& protocol) {
    sigma_ref.validate();
    protocol.validate();
    const GeometrySpec& g = sigma_ref.geometry;
    const auto nodes = electrode_nodes(g, protocol.n_electrodes);
    GridSolver solver(sigma_ref);
    const std::vector<Eigen::VectorXd> fields = pair_fields(solver, nodes);

    const Eigen::Index m = static_cast<Eigen::Index>(protocol.measurement_count());
    const Eigen::Index n = sigma_ref.values.size();

    SensitivityModel model;
    model.protocol = protocol;
    model.geometry = g;
    model.v_ref.resize(m);
    for (Eigen::Index k = 0; k < m; ++k)
        model.v_ref[k] = pair_voltage(fields[protocol.measurements[k].drive], nodes,
                                      protocol.measurements[k].sense);

    // Faces with the derivative of the harmonic-mean conductance w.r.t. each
    // endpoint's conductivity.
    struct Face {
        int p, q;
        double dg_dp, dg_dq;
    };
    std::vector<Face> faces;
    faces.reserve(g.element_count() * 2);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const int p = static_cast<int>(g.index(x, y));
            auto push = [&](int qx, int qy) {
                const int q = static_cast<int>(g.index(qx, qy));
                const double sp = sigma_ref.values[p], sq = sigma_ref.values[q];
                const double denom = (sp + sq) * (sp + sq);
                faces.push_back({p, q, 2.0 * sq * sq / denom, 2.0 * sp * sp / denom});
            };
            if (x + 1 < g.width) push(x + 1, y);
            if (y + 1 < g.height) push(x, y + 1);
        }
    }

    // dv_k/dsigma_p = -w_m^T (dG/dsigma_p) u_d expands over faces incident to
    // p; normalizing by -sigma_p / v_ref flips the sign back.
    model.jacobian = Eigen::MatrixXd::Zero(m, n);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::VectorXd& u_drive = fields[protocol.measurements[k].drive];
        const Eigen::VectorXd& u_sense = fields[protocol.measurements[k].sense];
        for (const Face& f : faces) {
            const double du = u_drive[f.p] - u_drive[f.q];
            const double dw = u_sense[f.p] - u_sense[f.q];
            const double t = du * dw;
            model.jacobian(k, f.p) += f.dg_dp * t;
            model.jacobian(k, f.q) += f.dg_dq * t;
        }
        model.jacobian.row(k) *= 1.0 / model.v_ref[k];
    }
    model.jacobian = model.jacobian * sigma_ref.values.asDiagonal();
    model.validate();
    return model;
}

PhantomSpec PhantomSpec::two_lung(const GeometrySpec& geometry) {
    geometry.validate();
    const double w = geometry.width, h = geometry.height;
    PhantomSpec spec;
    spec.geometry = geometry;
    spec.background = 0.24;
    spec.ellipses = {
        {0.275 * w, 0.50 * h, 0.22 * w, 0.36 * h, 0.17}, // left lung
        {0.725 * w, 0.50 * h, 0.22 * w, 0.36 * h, 0.14}, // right lung
    };
    return spec;
}

Phantom make_phantom(const PhantomSpec& spec) {
    spec.geometry.validate();
    if (spec.geometry.kind != GridKind::Grid2D)
        throw ValidationError("phantom: only 2D grids are supported");
    if (!(spec.background > 0.0) || !std::isfinite(spec.background))
        throw ValidationError("phantom: background conductivity must be positive");
    const double w = spec.geometry.width, h = spec.geometry.height;
    for (std::size_t i = 0; i < spec.ellipses.size(); ++i) {
        const Ellipse& e = spec.ellipses[i];
        if (!(e.conductivity > 0.0) || !std::isfinite(e.conductivity))
            throw ValidationError("phantom: ellipse " + std::to_string(i) +
                                  " conductivity must be positive");
        if (!(e.semi_x > 0.0) || !(e.semi_y > 0.0))
            throw ValidationError("phantom: ellipse " + std::to_string(i) +
                                  " semi-axes must be positive");
        if (e.center_x + e.semi_x < 0.0 || e.center_x - e.semi_x > w ||
            e.center_y + e.semi_y < 0.0 || e.center_y - e.semi_y > h)
            throw ValidationError("phantom: ellipse " + std::to_string(i) +
                                  " lies entirely outside the grid");
    }

    Phantom phantom{ConductivityField::uniform(spec.geometry, spec.background),
                    ConductivityField::uniform(spec.geometry, spec.background)};
    for (const Ellipse& e : spec.ellipses) {
        for (int y = 0; y < spec.geometry.height; ++y) {
            for (int x = 0; x < spec.geometry.width; ++x) {
                // Pixel centers at (x + 0.5, y + 0.5).
                const double px = (x + 0.5 - e.center_x) / e.semi_x;
                const double py = (y + 0.5 - e.center_y) / e.semi_y;
                if (px * px + py * py <= 1.0)
                    phantom.observed.values[spec.geometry.index(x, y)] = e.conductivity;
            }
        }
    }
    return phantom;
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& delta_v, double snr_db, std::uint64_t seed) {
    if (delta_v.size() == 0 || delta_v.cwiseAbs().maxCoeff() == 0.0)
        throw ValidationError("add_noise: signal is all zeros; SNR is undefined");
    if (std::isnan(snr_db)) throw ValidationError("add_noise: snr_db is NaN");
    if (std::isinf(snr_db)) {
        if (snr_db > 0.0) return delta_v; // no-noise sentinel
        throw ValidationError("add_noise: snr_db must be finite or +inf");
    }

    const double rms = std::sqrt(delta_v.squaredNorm() / static_cast<double>(delta_v.size()));
    const double stddev = rms * std::pow(10.0, -snr_db / 20.0);
    detail::Rng rng(seed);
    Eigen::VectorXd noisy(delta_v.size());
    for (Eigen::Index i = 0; i < delta_v.size(); ++i)
        noisy[i] = delta_v[i] + stddev * rng.gaussian();
    return noisy;
}

} // namespace quanteit

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lnld/kernels.hpp"

namespace lnld {

/// Degrees of freedom ordered [u_0..u_{N_l}, v_0..v_{N_nl-1}].
using StateField = Eigen::VectorXd;

/**
 * Two-subdomain mesh of (-1, 1).
 *
 * Local unknowns are nodal on [-1, 0] (including the interface node x = 0),
 * nonlocal unknowns sit at cell centres of (0, 1). Weights are trapezoid on
 * the nodes and midpoint on the centres, so they sum to 2.
 *
 * The diagnostic heat layout (build_heat_grid) reuses the same type with
 * nodes spanning all of [-1, 1] and no nonlocal cells.
 */
struct Grid {
    int n_local = 0;
    int n_nonlocal = 0;
    double h_local = 0.0;
    double h_nonlocal = 0.0;
    int interface_index = 0;
    std::vector<double> x;
    Eigen::VectorXd weights;

    int size() const { return static_cast<int>(x.size()); }
    int local_size() const { return n_local + 1; }
    int nonlocal_offset() const { return n_local + 1; }
    bool is_local(int dof) const { return dof <= n_local; }

    auto local(const StateField& w) const { return w.head(local_size()); }
    auto nonlocal(const StateField& w) const { return w.tail(n_nonlocal); }

    bool operator==(const Grid& other) const {
        return n_local == other.n_local && n_nonlocal == other.n_nonlocal && x == other.x;
    }
};

inline Grid build_grid(int n_local, int n_nonlocal) {
    if (n_local < 4) throw std::invalid_argument("grid.n_local must be >= 4");
    if (n_nonlocal < 4) throw std::invalid_argument("grid.n_nonlocal must be >= 4");
    Grid g;
    g.n_local = n_local;
    g.n_nonlocal = n_nonlocal;
    g.h_local = 1.0 / n_local;
    g.h_nonlocal = 1.0 / n_nonlocal;
    g.interface_index = n_local;
    const int n = n_local + 1 + n_nonlocal;
    g.x.resize(n);
    g.weights.resize(n);
    for (int i = 0; i <= n_local; ++i) {
        // Exact endpoints; i * h would leave roundoff at x = 0.
        g.x[i] = i == n_local ? 0.0 : -1.0 + i * g.h_local;
        g.weights[i] = g.h_local;
    }
    g.weights[0] *= 0.5;
    g.weights[n_local] *= 0.5;
    for (int j = 0; j < n_nonlocal; ++j) {
        g.x[n_local + 1 + j] = (j + 0.5) * g.h_nonlocal;
        g.weights[n_local + 1 + j] = g.h_nonlocal;
    }
    return g;
}

/// Uniform nodal grid over [-1, 1] with n intervals, for the pure heat check.
inline Grid build_heat_grid(int n) {
    if (n < 4) throw std::invalid_argument("heat grid needs at least 4 intervals");
    Grid g;
    g.n_local = n;
    g.n_nonlocal = 0;
    g.h_local = 2.0 / n;
    g.interface_index = n;
    g.x.resize(n + 1);
    g.weights = Eigen::VectorXd::Constant(n + 1, g.h_local);
    for (int i = 0; i <= n; ++i) g.x[i] = i == n ? 1.0 : -1.0 + i * g.h_local;
    g.weights[0] *= 0.5;
    g.weights[n] *= 0.5;
    return g;
}

inline void check_field(const Grid& grid, const StateField& w) {
    if (w.size() != grid.size())
        throw std::invalid_argument("state field size " + std::to_string(w.size()) +
                                    " does not match grid size " + std::to_string(grid.size()));
}

/// int_{-1}^{1} w by the grid quadrature.
inline double mass(const Grid& grid, const StateField& w) {
    check_field(grid, w);
    return grid.weights.dot(w);
}

inline double weighted_inner(const Grid& grid, const StateField& a, const StateField& b) {
    check_field(grid, a);
    check_field(grid, b);
    return (grid.weights.array() * a.array() * b.array()).sum();
}

inline double weighted_norm(const Grid& grid, const StateField& w) {
    return std::sqrt(weighted_inner(grid, w, w));
}

/// ||w - mean(w)||_W, the distance to the constant state of equal mass.
inline double dist_to_mean(const Grid& grid, const StateField& w) {
    const double mean = mass(grid, w) / grid.weights.sum();
    return weighted_norm(grid, (w.array() - mean).matrix());
}

inline void check_resolution(const Grid& grid, const Kernel& kernel) {
    if (grid.n_nonlocal == 0) return;
    const double limit = kernel.support() / 4.0;
    if (grid.h_nonlocal > limit * (1.0 + 1e-12))
        throw std::invalid_argument("under-resolved kernel: h_nl = " + std::to_string(grid.h_nonlocal) +
                                    " exceeds eps*R/4 = " + std::to_string(limit));
}

/**
 * Discrete generator L of the semi-discrete system w' = L w.
 *
 * L = -W^{-1} K where K is the Hessian of the discrete energy, so W L is
 * symmetric and L 1 = 0 by construction. The kernel matrix and coupling
 * profile are kept for fast energy evaluation along trajectories.
 */
struct GeneratorMatrix {
    Grid grid;
    std::optional<Kernel> kernel; // empty for the pure heat diagnostic
    CouplingConstants constants;
    Eigen::MatrixXd stiffness;
    Eigen::MatrixXd entries;
    Eigen::MatrixXd kernel_matrix; // J^eps(y_j - y_k), N_nl x N_nl
    Eigen::VectorXd profile;       // q(y_j)

    int size() const { return grid.size(); }
    StateField apply(const StateField& w) const { return entries * w; }
    bool is_heat_diagnostic() const { return !kernel.has_value(); }
};

namespace detail {

inline void add_edge(Eigen::MatrixXd& k, int a, int b, double weight) {
    k(a, b) -= weight;
    k(b, a) -= weight;
    k(a, a) += weight;
    k(b, b) += weight;
}

inline Eigen::MatrixXd generator_from_stiffness(const Grid& grid, const Eigen::MatrixXd& k) {
    Eigen::MatrixXd l = -(grid.weights.cwiseInverse().asDiagonal() * k);
    // Diagonal as the exact negative off-diagonal row sum.
    for (int a = 0; a < l.rows(); ++a) {
        l(a, a) = 0.0;
        l(a, a) = -l.row(a).sum();
    }
    return l;
}

} // namespace detail

inline GeneratorMatrix assemble_generator(const Grid& grid, const Kernel& kernel,
                                          const CouplingConstants& constants) {
    constants.validate();
    if (grid.n_nonlocal == 0) throw std::invalid_argument("coupled generator needs nonlocal cells");
    check_resolution(grid, kernel);

    const int n = grid.size();
    const int nl = grid.n_nonlocal;
    const int off = grid.nonlocal_offset();
    const int iface = grid.interface_index;
    const double hl = grid.h_local;
    const double hn = grid.h_nonlocal;

    GeneratorMatrix gen;
    gen.grid = grid;
    gen.kernel = kernel;
    gen.constants = constants;
    gen.kernel_matrix.resize(nl, nl);
    gen.profile.resize(nl);
    for (int j = 0; j < nl; ++j) {
        const double yj = grid.x[off + j];
        gen.profile[j] = coupling_profile_analytic(kernel, yj);
        for (int k = 0; k < nl; ++k) gen.kernel_matrix(j, k) = kernel(yj - grid.x[off + k]);
    }

    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    // 1/2 sum (u_{i+1} - u_i)^2 / h_l
    for (int i = 0; i < grid.n_local; ++i) detail::add_edge(k, i, i + 1, 1.0 / hl);
    // (c1/4) sum_j sum_k J_jk (v_k - v_j)^2 h_nl^2
    for (int j = 0; j < nl; ++j)
        for (int m = j + 1; m < nl; ++m)
            detail::add_edge(k, off + j, off + m, constants.c1 * gen.kernel_matrix(j, m) * hn * hn);
    // (c2/2) sum_j q_j (v_j - u_N)^2 h_nl
    for (int j = 0; j < nl; ++j) detail::add_edge(k, iface, off + j, constants.c2 * gen.profile[j] * hn);

    gen.stiffness = std::move(k);
    gen.entries = detail::generator_from_stiffness(grid, gen.stiffness);
    return gen;
}

inline GeneratorMatrix assemble_generator(const Grid& grid, const Kernel& kernel) {
    return assemble_generator(grid, kernel, coupling_constants(kernel));
}

/// Three-point Neumann Laplacian on a heat grid: the eps -> 0 limit problem.
inline GeneratorMatrix assemble_heat_generator(const Grid& grid) {
    if (grid.n_nonlocal != 0) throw std::invalid_argument("heat generator needs a heat grid");
    const int n = grid.size();
    GeneratorMatrix gen;
    gen.grid = grid;
    gen.stiffness = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) detail::add_edge(gen.stiffness, i, i + 1, 1.0 / grid.h_local);
    gen.entries = detail::generator_from_stiffness(grid, gen.stiffness);
    return gen;
}

} // namespace lnld

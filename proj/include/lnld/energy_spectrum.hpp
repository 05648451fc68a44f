#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

#include "lnld/discretization.hpp"
#include "lnld/kernels.hpp"

namespace lnld {

/// Discrete energy split into its three nonnegative contributions.
struct EnergyBreakdown {
    double local_term = 0.0;
    double nonlocal_term = 0.0;
    double coupling_term = 0.0;
    double total = 0.0;
};

namespace detail {

inline double local_energy(const Grid& grid, const StateField& w) {
    double s = 0.0;
    for (int i = 0; i < grid.n_local; ++i) {
        const double d = w[i + 1] - w[i];
        s += d * d;
    }
    return 0.5 * s / grid.h_local;
}

inline EnergyBreakdown finish(EnergyBreakdown e) {
    e.total = e.local_term + e.nonlocal_term + e.coupling_term;
    return e;
}

} // namespace detail

/// Energy evaluated straight from the kernel, without an assembled generator.
inline EnergyBreakdown energy(const Grid& grid, const Kernel& kernel, const CouplingConstants& constants,
                              const StateField& w) {
    check_field(grid, w);
    check_resolution(grid, kernel);
    EnergyBreakdown e;
    e.local_term = detail::local_energy(grid, w);
    const int off = grid.nonlocal_offset();
    const double hn = grid.h_nonlocal;
    const double u0 = w[grid.interface_index];
    double nonlocal = 0.0;
    double coupling = 0.0;
    for (int j = 0; j < grid.n_nonlocal; ++j) {
        const double yj = grid.x[off + j];
        const double vj = w[off + j];
        for (int k = 0; k < grid.n_nonlocal; ++k) {
            const double d = w[off + k] - vj;
            nonlocal += kernel(yj - grid.x[off + k]) * d * d;
        }
        coupling += coupling_profile_analytic(kernel, yj) * (vj - u0) * (vj - u0);
    }
    e.nonlocal_term = 0.25 * constants.c1 * nonlocal * hn * hn;
    e.coupling_term = 0.5 * constants.c2 * coupling * hn;
    return detail::finish(e);
}

/// Same quantity using the kernel matrix cached in the generator.
inline EnergyBreakdown energy(const GeneratorMatrix& gen, const StateField& w) {
    const Grid& grid = gen.grid;
    check_field(grid, w);
    EnergyBreakdown e;
    e.local_term = detail::local_energy(grid, w);
    if (gen.is_heat_diagnostic()) return detail::finish(e);
    const int off = grid.nonlocal_offset();
    const int nl = grid.n_nonlocal;
    const double hn = grid.h_nonlocal;
    const double u0 = w[grid.interface_index];
    const auto v = w.tail(nl);
    double nonlocal = 0.0;
    for (int j = 0; j < nl; ++j) {
        const double vj = v[j];
        double row = 0.0;
        for (int k = 0; k < nl; ++k) {
            const double d = v[k] - vj;
            row += gen.kernel_matrix(j, k) * d * d;
        }
        nonlocal += row;
    }
    double coupling = 0.0;
    for (int j = 0; j < nl; ++j) coupling += gen.profile[j] * (w[off + j] - u0) * (w[off + j] - u0);
    e.nonlocal_term = 0.25 * gen.constants.c1 * nonlocal * hn * hn;
    e.coupling_term = 0.5 * gen.constants.c2 * coupling * hn;
    return detail::finish(e);
}

/// Matrix A_ab = W_a W_b J^eps(x_a - x_b) over every pair of degrees of freedom.
inline Eigen::MatrixXd full_kernel_weights(const Grid& grid, const Kernel& kernel) {
    const int n = grid.size();
    Eigen::MatrixXd a(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) a(p, q) = grid.weights[p] * grid.weights[q] * kernel(grid.x[p] - grid.x[q]);
    return a;
}

namespace detail {

inline double pair_energy(const Eigen::MatrixXd& a, const StateField& w) {
    double s = 0.0;
    const int n = static_cast<int>(w.size());
    for (int q = 0; q < n; ++q)
        for (int p = 0; p < n; ++p) {
            const double d = w[q] - w[p];
            s += a(p, q) * d * d;
        }
    return s;
}

} // namespace detail

/// int int_{(-1,1)^2} J^eps(x - y) (w(y) - w(x))^2, local and nonlocal pairs alike.
inline double nonlocal_energy_full(const Grid& grid, const Kernel& kernel, const StateField& w) {
    check_field(grid, w);
    check_resolution(grid, kernel);
    return detail::pair_energy(full_kernel_weights(grid, kernel), w);
}

/// Spectral gap of the generator in the weighted inner product.
struct SpectralReport {
    double beta1 = 0.0;
    double lambda2 = 0.0;
    StateField eigvec;
    double residual = 0.0;
    double lambda0 = 0.0; // eigenvalue of the constant mode, ~0
};

/**
 * Solves K x = lambda W x through the symmetric matrix W^-1/2 K W^-1/2.
 * The constant mode is the smallest eigenvalue; the next one is lambda2 and
 * beta1 = lambda2 / 2 because E(w) = 1/2 <w, -L w>_W.
 */
inline SpectralReport estimate_beta1(const GeneratorMatrix& gen) {
    const Eigen::VectorXd inv_sqrt_w = gen.grid.weights.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd s = inv_sqrt_w.asDiagonal() * gen.stiffness * inv_sqrt_w.asDiagonal();
    const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver failed to converge");

    SpectralReport report;
    report.lambda0 = solver.eigenvalues()[0];
    report.lambda2 = solver.eigenvalues()[1];
    report.beta1 = 0.5 * report.lambda2;
    report.eigvec = inv_sqrt_w.asDiagonal() * solver.eigenvectors().col(1);
    // Remove the roundoff-level constant component, then renormalize in W.
    report.eigvec.array() -= mass(gen.grid, report.eigvec) / gen.grid.weights.sum();
    report.eigvec /= weighted_norm(gen.grid, report.eigvec);

    const StateField r = -gen.apply(report.eigvec) - report.lambda2 * report.eigvec;
    report.residual = weighted_norm(gen.grid, r);
    if (!(report.residual <= 1e-8 * report.lambda2))
        throw std::runtime_error("eigenpair residual " + std::to_string(report.residual) + " above tolerance");
    return report;
}

/// E(w - mean) / ||w - mean||_W^2.
inline double rayleigh(const GeneratorMatrix& gen, const StateField& w) {
    check_field(gen.grid, w);
    StateField centred = w.array() - mass(gen.grid, w) / gen.grid.weights.sum();
    const double norm2 = weighted_inner(gen.grid, centred, centred);
    const double scale = weighted_inner(gen.grid, w, w);
    if (!(norm2 > 1e-24 * std::max(scale, 1e-300))) throw std::domain_error("rayleigh quotient of a constant state");
    return energy(gen, centred).total / norm2;
}

inline double rayleigh(const Grid& grid, const Kernel& kernel, const CouplingConstants& constants,
                       const StateField& w) {
    check_field(grid, w);
    StateField centred = w.array() - mass(grid, w) / grid.weights.sum();
    const double norm2 = weighted_inner(grid, centred, centred);
    const double scale = weighted_inner(grid, w, w);
    if (!(norm2 > 1e-24 * std::max(scale, 1e-300))) throw std::domain_error("rayleigh quotient of a constant state");
    return energy(grid, kernel, constants, centred).total / norm2;
}

/**
 * Randomized estimate of the constant k with E(w) >= k * full nonlocal energy:
 * the minimum ratio over mean-zero states with i.i.d. standard normal entries.
 * Samples are drawn sequentially from one stream, so a larger sample count
 * extends the smaller one.
 */
inline double estimate_energy_control_k(const Grid& grid, const Kernel& kernel, const CouplingConstants& constants,
                                        int n_samples, std::uint64_t seed) {
    if (n_samples < 10) throw std::invalid_argument("energy control estimate needs n_samples >= 10");
    const GeneratorMatrix gen = assemble_generator(grid, kernel, constants);
    const Eigen::MatrixXd pairs = full_kernel_weights(grid, kernel);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double total_weight = grid.weights.sum();

    double best = std::numeric_limits<double>::infinity();
    StateField w(grid.size());
    for (int s = 0; s < n_samples; ++s) {
        for (int a = 0; a < w.size(); ++a) w[a] = normal(rng);
        w.array() -= mass(grid, w) / total_weight;
        const double denom = detail::pair_energy(pairs, w);
        if (denom < 1e-14) continue;
        best = std::min(best, energy(gen, w).total / denom);
    }
    if (!std::isfinite(best)) throw std::runtime_error("all energy control samples were degenerate");
    return best;
}

/**
 * Exact discrete infimum of E(w) / full nonlocal energy over non-constant
 * states, as the smallest generalized eigenvalue on the W-complement of the
 * constants.
 */
inline double energy_control_infimum(const Grid& grid, const Kernel& kernel, const CouplingConstants& constants) {
    const GeneratorMatrix gen = assemble_generator(grid, kernel, constants);
    const Eigen::MatrixXd a = full_kernel_weights(grid, kernel);
    // w^T N w with N = 2 (diag(rowsum(A + A^T)/2) - A_sym)
    const Eigen::MatrixXd a_sym = 0.5 * (a + a.transpose());
    Eigen::MatrixXd pair_form = -2.0 * a_sym;
    pair_form.diagonal() += 2.0 * a_sym.rowwise().sum();
    const Eigen::MatrixXd energy_form = 0.5 * gen.stiffness;

    // Orthonormal basis of the complement of W 1 (Householder on the weight vector).
    const int n = grid.size();
    Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(grid.weights);
    basis = qr.householderQ() * basis;
    const Eigen::MatrixXd q = basis.rightCols(n - 1);

    const Eigen::MatrixXd lhs = q.transpose() * energy_form * q;
    const Eigen::MatrixXd rhs = q.transpose() * pair_form * q;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (lhs + lhs.transpose()),
                                                                      0.5 * (rhs + rhs.transpose()));
    if (solver.info() != Eigen::Success) throw std::runtime_error("generalized eigensolver failed");
    return solver.eigenvalues()[0];
}

/// ||w - mean||_W^2 / full nonlocal energy: the constant a Poincare inequality must dominate.
inline double poincare_ratio(const Grid& grid, const Kernel& kernel, const StateField& w) {
    const double d = dist_to_mean(grid, w);
    return d * d / nonlocal_energy_full(grid, kernel, w);
}

} // namespace lnld

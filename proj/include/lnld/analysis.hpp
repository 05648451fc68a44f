#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "lnld/discretization.hpp"
#include "lnld/energy_spectrum.hpp"
#include "lnld/evolution.hpp"
#include "lnld/kernels.hpp"

namespace lnld {

/// Initial profile w0(x); `local` tells which side of the interface x is on
/// (x = 0 belongs to the local side).
using InitialProfile = std::function<double(double x, bool local)>;

inline StateField sample(const Grid& grid, const InitialProfile& profile) {
    StateField w(grid.size());
    for (int a = 0; a < grid.size(); ++a) w[a] = profile(grid.x[a], grid.is_local(a));
    return w;
}

/**
 * Exact Neumann heat flow on (-1, 1) by cosine series. The coefficients
 * a_n = int w0 cos(n pi (x + 1) / 2) are integrated exactly against the
 * grid's own interpolant of w0: piecewise linear between nodes, constant on
 * each nonlocal cell. That interpolant has the same integral as the grid
 * quadrature, and plain sampling of cos would alias for n near the grid scale.
 */
class HeatReference {
public:
    HeatReference(const Grid& grid, const StateField& w0, int n_modes) : grid_(grid) {
        check_field(grid, w0);
        if (n_modes < 1) throw std::invalid_argument("heat reference needs n_modes >= 1");
        const int n = grid.size();
        basis_.resize(n, n_modes);
        rates_.resize(n_modes);
        for (int m = 1; m <= n_modes; ++m) {
            const double k = m * std::numbers::pi / 2.0;
            rates_[m - 1] = k * k;
            for (int a = 0; a < n; ++a) basis_(a, m - 1) = std::cos(k * (grid.x[a] + 1.0));
        }
        coeffs_.resize(n_modes);
        for (int m = 1; m <= n_modes; ++m) coeffs_[m - 1] = projection(grid, w0, m * std::numbers::pi / 2.0);
        mean_ = mass(grid, w0) / 2.0;
    }

    StateField operator()(double t) const {
        const Eigen::VectorXd decayed = coeffs_.array() * (-rates_.array() * t).exp();
        return (basis_ * decayed).array() + mean_;
    }

private:
    static double projection(const Grid& g, const StateField& w, double k) {
        const auto phase = [k](double x) { return k * (x + 1.0); };
        double a = 0.0;
        // nodes: int over [x_i, x_i+1] of the linear interpolant times cos(k (x + 1))
        for (int i = 0; i < g.n_local; ++i) {
            const double p0 = phase(g.x[i]), p1 = phase(g.x[i + 1]);
            const double h = g.x[i + 1] - g.x[i];
            a += (w[i + 1] * std::sin(p1) - w[i] * std::sin(p0)) / k +
                 (w[i + 1] - w[i]) * (std::cos(p1) - std::cos(p0)) / (h * k * k);
        }
        // cells: constant value over [j h, (j + 1) h]
        const int off = g.nonlocal_offset();
        for (int j = 0; j < g.n_nonlocal; ++j) {
            const double lo = j * g.h_nonlocal, hi = j + 1 == g.n_nonlocal ? 1.0 : (j + 1) * g.h_nonlocal;
            a += w[off + j] * (std::sin(phase(hi)) - std::sin(phase(lo))) / k;
        }
        return a;
    }

    Grid grid_;
    Eigen::MatrixXd basis_;
    Eigen::VectorXd rates_;
    Eigen::VectorXd coeffs_;
    double mean_ = 0.0;
};

inline StateField heat_reference(const Grid& grid, const StateField& w0, double t, int n_modes = 256) {
    return HeatReference(grid, w0, n_modes)(t);
}

struct DecayReport {
    double fitted_rate = 0.0;
    double fit_start = 0.0;
    double fit_end = 0.0;
    int fit_samples = 0;
    double r_squared = 0.0;
    double beta1_used = 0.0;
    double lambda2 = 0.0;
    bool bound_satisfied = false;
    double worst_bound_ratio = 0.0; // max over samples of dist(t) / (dist(0) e^{-beta1 t})
};

/**
 * Least-squares slope of -ln dist_to_mean over samples with
 * dist in [1e-10, dist(0) / 2], plus a pointwise check of
 * dist(t) <= dist(0) e^{-beta1 t} (1 + 1e-6).
 */
inline DecayReport decay_report(const Trajectory& traj, const SpectralReport& spectral) {
    const auto& s = traj.series;
    const int usable = static_cast<int>(std::count_if(s.begin(), s.end(), [](const SeriesRecord& r) {
        return r.dist_to_mean >= 1e-12;
    }));
    if (usable < 20) throw std::invalid_argument("decay report needs >= 20 samples with dist_to_mean >= 1e-12");
    const double d0 = s.front().dist_to_mean;

    DecayReport rep;
    rep.beta1_used = spectral.beta1;
    rep.lambda2 = spectral.lambda2;
    rep.bound_satisfied = true;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    for (const auto& r : s) {
        const double bound = d0 * std::exp(-spectral.beta1 * r.t);
        if (bound > 0.0) rep.worst_bound_ratio = std::max(rep.worst_bound_ratio, r.dist_to_mean / bound);
        if (r.dist_to_mean > bound * (1.0 + 1e-6)) rep.bound_satisfied = false;
        if (r.dist_to_mean < 1e-10 || r.dist_to_mean > 0.5 * d0) continue;
        const double y = std::log(r.dist_to_mean);
        if (n == 0) rep.fit_start = r.t;
        rep.fit_end = r.t;
        sx += r.t;
        sy += y;
        sxx += r.t * r.t;
        sxy += r.t * y;
        syy += y * y;
        ++n;
    }
    if (n < 3) throw std::invalid_argument("decay report: fewer than 3 samples inside the fit window");
    const double cxx = sxx - sx * sx / n;
    const double cxy = sxy - sx * sy / n;
    const double cyy = syy - sy * sy / n;
    if (!(cxx > 0.0)) throw std::invalid_argument("decay report: degenerate fit window");
    rep.fitted_rate = -cxy / cxx;
    rep.r_squared = cyy > 0.0 ? std::clamp(cxy * cxy / (cxx * cyy), 0.0, 1.0) : 1.0;
    rep.fit_samples = n;
    return rep;
}

struct SweepOptions {
    KernelFamily family = KernelFamily::triangle;
    double radius = 1.0;
    int n_local = 200;
    int n_nonlocal = 200;
    double dt = 1e-4;
    double horizon = 0.5;
    int n_modes = 256;
    bool parallel = true;
};

struct SweepRow {
    double epsilon = 0.0;
    int n_nonlocal = 0;
    double dt = 0.0;
    double sup_error = 0.0;
    double beta1_eps = 0.0;
    double interface_jump = 0.0; // sup over time of |u(0) - v(0+)|, v extrapolated from the first two centres
};

/// |u_N - v(0+)| with v(0+) linearly extrapolated from the first two cell centres.
inline double interface_jump(const Grid& grid, const StateField& w) {
    const int off = grid.nonlocal_offset();
    const double v0 = 1.5 * w[off] - 0.5 * w[off + 1];
    return std::abs(w[grid.interface_index] - v0);
}

inline SweepRow sweep_member(const SweepOptions& opt, double eps, const InitialProfile& w0) {
    const Kernel kernel = make_kernel(opt.family, opt.radius, eps);
    const int n_nl = std::max(opt.n_nonlocal, static_cast<int>(std::ceil(4.0 / (eps * opt.radius) - 1e-9)));
    const Grid grid = build_grid(opt.n_local, n_nl);
    check_resolution(grid, kernel);
    const GeneratorMatrix gen = assemble_generator(grid, kernel);
    const StateField start = sample(grid, w0);
    const HeatReference ref(grid, start, opt.n_modes);

    const int n = detail::step_count(opt.horizon, opt.dt);
    const double dt = opt.horizon / n;
    const ImplicitStepper step(gen, dt);
    SweepRow row;
    row.epsilon = eps;
    row.n_nonlocal = n_nl;
    row.dt = dt;
    StateField w = start;
    row.sup_error = weighted_norm(grid, w - ref(0.0));
    row.interface_jump = interface_jump(grid, w);
    for (int k = 1; k <= n; ++k) {
        w = step(w);
        detail::check_finite(w, k, k * dt);
        const double t = k == n ? opt.horizon : k * dt;
        row.sup_error = std::max(row.sup_error, weighted_norm(grid, w - ref(t)));
        row.interface_jump = std::max(row.interface_jump, interface_jump(grid, w));
    }
    row.beta1_eps = estimate_beta1(gen).beta1;
    return row;
}

/**
 * Runs the coupled model for each eps (implicit Euler, nonlocal resolution
 * raised to ceil(4 / (eps R)) when needed) from the same initial profile and
 * measures the sup-in-time weighted L2 distance to the exact heat flow.
 */
inline std::vector<SweepRow> epsilon_sweep(const SweepOptions& opt, const std::vector<double>& eps_list,
                                           const InitialProfile& w0) {
    if (eps_list.empty()) throw std::invalid_argument("epsilon sweep needs at least one epsilon");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw std::invalid_argument("epsilon values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("epsilon list must be strictly decreasing");
    }
    if (!(opt.dt > 0.0) || !(opt.horizon > 0.0)) throw std::invalid_argument("sweep dt and horizon must be positive");

    std::vector<SweepRow> rows;
    if (opt.parallel) {
        std::vector<std::future<SweepRow>> jobs;
        for (double eps : eps_list) jobs.push_back(std::async(std::launch::async, sweep_member, opt, eps, w0));
        for (auto& job : jobs) rows.push_back(job.get());
    } else {
        for (double eps : eps_list) rows.push_back(sweep_member(opt, eps, w0));
    }
    return rows;
}

/**
 * Self-similar barrier w(x, t) = (T + t)^{1/2} g(x / (T + t)^{1/2}) with
 * g(xi) = f(a xi) / a and the cubic profile
 *   f(xi) = 1                               for xi <= -xi0,
 *   f(xi) = 1 + (xi + xi0)^3 / (3 xi0^2)    for -xi0 < xi <= 0.
 */
struct BarrierSpec {
    double xi0 = 2.0;
    double a = 0.5;
    double T = 0.03;

    void validate() const {
        if (!(xi0 > 1.0)) throw std::invalid_argument("barrier xi0 must exceed 1");
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("barrier a must lie in (0,1)");
        if (!(T > 0.0 && T < a * a / (2.0 * xi0 * xi0)))
            throw std::invalid_argument("barrier T must lie in (0, a^2 / (2 xi0^2))");
        if (!(0.5 >= a * a * max_f2())) throw std::invalid_argument("barrier needs 1/2 >= a^2 max|f''|");
    }

    double f(double xi) const {
        if (xi <= -xi0) return 1.0;
        const double s = xi + xi0;
        return 1.0 + s * s * s / (3.0 * xi0 * xi0);
    }
    double f1(double xi) const {
        if (xi <= -xi0) return 0.0;
        const double s = xi + xi0;
        return s * s / (xi0 * xi0);
    }
    double f2(double xi) const {
        if (xi <= -xi0) return 0.0;
        return 2.0 * (xi + xi0) / (xi0 * xi0);
    }
    double max_f2() const { return 2.0 / xi0; }

    double g(double eta) const { return f(a * eta) / a; }

    double value(double x, double t) const {
        const double s = std::sqrt(T + t);
        return s * g(x / s);
    }
};

/// Barrier on the local nodes, with v set to the constant trace value so the
/// discrete Robin flux vanishes. Negate for the matching subsolution.
inline StateField barrier_state(const Grid& grid, const BarrierSpec& spec, double t, double sign = 1.0) {
    StateField w(grid.size());
    for (int i = 0; i < grid.local_size(); ++i) w[i] = sign * spec.value(grid.x[i], t);
    w.tail(grid.n_nonlocal).setConstant(sign * spec.value(0.0, t));
    return w;
}

struct SupersolutionReport {
    // Worst margins; each inequality holds when its margin is >= -tol.
    double interior = std::numeric_limits<double>::infinity();  // (1) d_t u - Delta_h u
    double left = std::numeric_limits<double>::infinity();      // (2) -(one-sided derivative at -1)
    double interface = std::numeric_limits<double>::infinity(); // (3) derivative at 0 minus Robin flux
    double nonlocal = std::numeric_limits<double>::infinity();  // (4) d_t v - nonlocal row
    bool pass_interior = false;
    bool pass_left = false;
    bool pass_interface = false;
    bool pass_nonlocal = false;
    bool checked_nonlocal = false;

    bool pass() const {
        return pass_interior && pass_left && pass_interface && (!checked_nonlocal || pass_nonlocal);
    }
};

/**
 * Discrete sub/supersolution test on uniformly spaced samples w(t_0..t_M).
 *
 * With r = d_t w - L w (centred time differences at t_1..t_{M-1}), the four
 * conditions read r_i >= 0 on interior local rows; (h/2) r_0 >= 0, i.e. the
 * ghost-consistent derivative (u_1 - u_0)/h - (h/2) d_t u_0 is <= 0; and
 * (h/2) r_N >= 0, i.e. (u_N - u_{N-1})/h + (h/2) d_t u_N is at least the Robin
 * flux; r_j >= 0 on nonlocal rows. Boundary margins are reported in
 * derivative units.
 */
inline SupersolutionReport supersolution_check(const GeneratorMatrix& gen, double dt, int n_samples,
                                               const std::function<StateField(int)>& sampler, double tol,
                                               bool check_nonlocal = true) {
    if (n_samples < 3) throw std::invalid_argument("supersolution check needs at least 3 time samples");
    if (!(dt > 0.0)) throw std::invalid_argument("sample spacing must be positive");
    const Grid& grid = gen.grid;
    const Eigen::MatrixXd& l = gen.entries;
    const int nu = grid.local_size();
    const int iface = grid.interface_index;
    const double h = grid.h_local;

    SupersolutionReport rep;
    rep.checked_nonlocal = check_nonlocal && grid.n_nonlocal > 0;
    StateField prev = sampler(0);
    StateField cur = sampler(1);
    check_field(grid, prev);
    for (int k = 1; k + 1 < n_samples; ++k) {
        StateField next = sampler(k + 1);
        check_field(grid, next);
        const StateField dtw = (next - prev) / (2.0 * dt);
        for (int i = 1; i < nu - 1; ++i) {
            const double li = l(i, i - 1) * cur[i - 1] + l(i, i) * cur[i] + l(i, i + 1) * cur[i + 1];
            rep.interior = std::min(rep.interior, dtw[i] - li);
        }
        const double l0 = l(0, 0) * cur[0] + l(0, 1) * cur[1];
        rep.left = std::min(rep.left, 0.5 * h * (dtw[0] - l0));
        rep.interface = std::min(rep.interface, 0.5 * h * (dtw[iface] - l.row(iface).dot(cur)));
        if (rep.checked_nonlocal) {
            const Eigen::VectorXd lv = l.bottomRows(grid.n_nonlocal) * cur;
            rep.nonlocal = std::min(rep.nonlocal, (dtw.tail(grid.n_nonlocal) - lv).minCoeff());
        }
        prev = std::move(cur);
        cur = std::move(next);
    }
    rep.pass_interior = rep.interior >= -tol;
    rep.pass_left = rep.left >= -tol;
    rep.pass_interface = rep.interface >= -tol;
    rep.pass_nonlocal = !rep.checked_nonlocal || rep.nonlocal >= -tol;
    return rep;
}

inline SupersolutionReport supersolution_check(const GeneratorMatrix& gen, double dt,
                                               const std::vector<StateField>& samples, double tol,
                                               bool check_nonlocal = true) {
    return supersolution_check(
        gen, dt, static_cast<int>(samples.size()), [&](int k) { return samples[k]; }, tol, check_nonlocal);
}

} // namespace lnld

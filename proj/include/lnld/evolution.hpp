#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lnld/discretization.hpp"
#include "lnld/energy_spectrum.hpp"

namespace lnld {

enum class SchemeKind { explicit_euler, implicit_euler, picard };

inline std::string_view to_string(SchemeKind kind) {
    switch (kind) {
    case SchemeKind::explicit_euler: return "explicit";
    case SchemeKind::implicit_euler: return "implicit";
    case SchemeKind::picard: return "picard";
    }
    return "unknown";
}

inline SchemeKind parse_scheme(std::string_view name) {
    if (name == "explicit") return SchemeKind::explicit_euler;
    if (name == "implicit") return SchemeKind::implicit_euler;
    if (name == "picard") return SchemeKind::picard;
    throw std::invalid_argument("unknown time scheme '" + std::string(name) + "'");
}

struct StepScheme {
    SchemeKind kind = SchemeKind::implicit_euler;
    std::optional<double> dt; // empty means "auto"
    double picard_window = 0.0;
    double picard_tol = 1e-10;
    int picard_max_iters = 50;
    int picard_substeps = 32;
};

/// Default implicit step when dt is "auto".
inline constexpr double kDefaultImplicitDt = 1e-3;

/// Largest Picard window for which the alternating construction contracts.
inline double picard_window_limit(const CouplingConstants& c) { return 1.0 / (2.0 * c.c1 + c.c2); }

/// Lipschitz constant of one H2(H1(.)) sweep over a window of length t_w.
inline double picard_kappa(const CouplingConstants& c, double t_w) {
    const double denom = 1.0 - (2.0 * c.c1 + c.c2) * t_w;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return 0.5 * c.c2 * (c.c2 * t_w) / denom;
}

struct SeriesRecord {
    double t = 0.0;
    double mass = 0.0;
    EnergyBreakdown energy;
    double dist_to_mean = 0.0;
};

struct Trajectory {
    Grid grid;
    std::vector<double> times;
    std::vector<SeriesRecord> series;
    std::vector<std::pair<double, StateField>> snapshots;
    StateField final_state;
    double dt = 0.0;
    int steps = 0;
};

/// 0.9 / max |L_ii|; with zero row sums this keeps I + dt L entrywise nonnegative.
inline double cfl_limit(const GeneratorMatrix& gen) {
    const double max_diag = gen.entries.diagonal().cwiseAbs().maxCoeff();
    if (!(max_diag > 0.0)) throw std::invalid_argument("cfl_limit of a zero generator");
    return 0.9 / max_diag;
}

inline StateField step_explicit(const GeneratorMatrix& gen, const StateField& w, double dt) {
    check_field(gen.grid, w);
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    const double limit = cfl_limit(gen);
    if (dt > limit * (1.0 + 1e-12))
        throw std::invalid_argument("explicit dt " + std::to_string(dt) + " exceeds CFL limit " +
                                    std::to_string(limit));
    return w + dt * gen.apply(w);
}

/// Factorizes I - dt L once and reuses it for every step.
class ImplicitStepper {
public:
    ImplicitStepper(const GeneratorMatrix& gen, double dt) : gen_(&gen), dt_(dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
        system_ = Eigen::MatrixXd::Identity(gen.size(), gen.size()) - dt * gen.entries;
        lu_.compute(system_);
    }

    double dt() const { return dt_; }

    // Solved for the increment d = x - w, (I - dt L) d = dt L w, so that
    // roundoff scales with |d| rather than |w| and mass drift stays small
    // over long runs.
    StateField operator()(const StateField& w) const {
        check_field(gen_->grid, w);
        const StateField rhs = dt_ * gen_->apply(w);
        StateField d = lu_.solve(rhs);
        StateField x = w + d;
        const double scale = std::max(w.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
        StateField r = w - system_ * x;
        if (r.cwiseAbs().maxCoeff() > 1e-12 * scale) {
            d += lu_.solve(r);
            x = w + d;
            r = w - system_ * x;
            if (r.cwiseAbs().maxCoeff() > 1e-12 * scale)
                throw std::runtime_error("implicit step residual " + std::to_string(r.cwiseAbs().maxCoeff()) +
                                         " above 1e-12 relative");
        }
        return x;
    }

private:
    const GeneratorMatrix* gen_;
    double dt_;
    Eigen::MatrixXd system_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline StateField step_implicit(const GeneratorMatrix& gen, const StateField& w, double dt) {
    return ImplicitStepper(gen, dt)(w);
}

inline SeriesRecord make_record(const GeneratorMatrix& gen, double t, const StateField& w) {
    return {t, mass(gen.grid, w), energy(gen, w), dist_to_mean(gen.grid, w)};
}

namespace detail {

inline void check_finite(const StateField& w, int step, double t) {
    if (!w.allFinite())
        throw std::runtime_error("non-finite state at step " + std::to_string(step) + " (t = " + std::to_string(t) +
                                 ")");
}

inline int step_count(double horizon, double dt) {
    return std::max(1, static_cast<int>(std::ceil(horizon / dt * (1.0 - 1e-12))));
}

} // namespace detail

/// Resolved step size: explicit "auto" takes the CFL limit.
inline double resolve_dt(const GeneratorMatrix& gen, const StepScheme& scheme) {
    if (scheme.dt) return *scheme.dt;
    return scheme.kind == SchemeKind::explicit_euler ? cfl_limit(gen) : kDefaultImplicitDt;
}

/**
 * Integrates w' = L w up to `horizon` with uniform steps no larger than the
 * requested dt. The series gets one record per step; states are stored every
 * `snapshot_stride` steps (0 disables snapshots) and always at the end.
 */
inline Trajectory evolve(const GeneratorMatrix& gen, const StateField& w0, const StepScheme& scheme, double horizon,
                         int snapshot_stride = 0) {
    check_field(gen.grid, w0);
    if (!(horizon > 0.0)) throw std::invalid_argument("time horizon must be positive");
    if (scheme.kind == SchemeKind::picard) throw std::invalid_argument("use picard_window_solve for the picard scheme");
    const double dt_req = resolve_dt(gen, scheme);
    if (!(dt_req > 0.0)) throw std::invalid_argument("time step must be positive");
    const int n = detail::step_count(horizon, dt_req);
    const double dt = horizon / n;

    std::optional<ImplicitStepper> implicit;
    if (scheme.kind == SchemeKind::implicit_euler) implicit.emplace(gen, dt);
    else if (dt > cfl_limit(gen) * (1.0 + 1e-12))
        throw std::invalid_argument("explicit dt " + std::to_string(dt) + " exceeds CFL limit " +
                                    std::to_string(cfl_limit(gen)));

    Trajectory traj;
    traj.grid = gen.grid;
    traj.dt = dt;
    traj.steps = n;
    traj.times.reserve(n + 1);
    traj.series.reserve(n + 1);
    StateField w = w0;
    traj.times.push_back(0.0);
    traj.series.push_back(make_record(gen, 0.0, w));
    if (snapshot_stride > 0) traj.snapshots.emplace_back(0.0, w);
    for (int k = 1; k <= n; ++k) {
        w = implicit ? (*implicit)(w) : StateField(w + dt * gen.apply(w));
        const double t = k == n ? horizon : k * dt;
        detail::check_finite(w, k, t);
        traj.times.push_back(t);
        traj.series.push_back(make_record(gen, t, w));
        if (snapshot_stride > 0 && (k % snapshot_stride == 0 || k == n)) traj.snapshots.emplace_back(t, w);
    }
    traj.final_state = std::move(w);
    return traj;
}

struct PicardReport {
    int windows = 0;
    std::vector<int> iterations;
    std::vector<double> final_update;
    std::vector<double> max_ratio; // largest ratio of successive update norms per window, 0 if none measured
    double kappa = 0.0;
    double window = 0.0;
    double substep_dt = 0.0;
};

class PicardError : public std::runtime_error {
public:
    PicardError(const std::string& what, PicardReport report)
        : std::runtime_error(what), report_(std::move(report)) {}
    const PicardReport& report() const { return report_; }

private:
    PicardReport report_;
};

/**
 * Alternating fixed-point construction on windows of length T_w.
 *
 * Each sweep freezes the interface trace history u(0, t_k), integrates the
 * nonlocal rows over the window, then integrates the local rows with that
 * v history as Robin data. Both sub-integrations use implicit Euler with the
 * same sub-step, so the fixed point coincides with the monolithic implicit
 * Euler solution. Convergence is measured as max_k ||u_k^new - u_k||_W.
 */
inline std::pair<Trajectory, PicardReport> picard_window_solve(const Grid& grid, const Kernel& kernel,
                                                               const CouplingConstants& constants,
                                                               const StateField& w0, const StepScheme& scheme,
                                                               double horizon, int snapshot_stride = 0) {
    check_field(grid, w0);
    if (!(horizon > 0.0)) throw std::invalid_argument("time horizon must be positive");
    const double t_w = scheme.picard_window;
    if (!(t_w > 0.0) || t_w >= picard_window_limit(constants))
        throw std::invalid_argument("picard window must lie in (0, 1/(2 c1 + c2)) = (0, " +
                                    std::to_string(picard_window_limit(constants)) + ")");
    if (!(scheme.picard_tol > 0.0)) throw std::invalid_argument("picard tolerance must be positive");
    if (scheme.picard_max_iters < 1) throw std::invalid_argument("picard max iterations must be >= 1");

    double dt = scheme.dt ? *scheme.dt : t_w / scheme.picard_substeps;
    const double ratio = t_w / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
        throw std::invalid_argument("picard sub-step must divide the window length");
    const int per_window = static_cast<int>(std::round(ratio));
    dt = t_w / per_window;
    const int total_steps = detail::step_count(horizon, dt);
    if (std::abs(horizon / dt - total_steps) > 1e-9 * total_steps)
        throw std::invalid_argument("picard sub-step must divide the horizon");

    const GeneratorMatrix gen = assemble_generator(grid, kernel, constants);
    const int nu = grid.local_size();
    const int nv = grid.n_nonlocal;
    const int iface = grid.interface_index;
    const Eigen::MatrixXd& l = gen.entries;
    const Eigen::MatrixXd l_uu = l.topLeftCorner(nu, nu);
    const Eigen::VectorXd l_vu = l.block(nu, iface, nv, 1); // nonlocal rows, interface column
    const Eigen::RowVectorXd l_uv = l.block(iface, nu, 1, nv);
    const Eigen::MatrixXd l_vv = l.bottomRightCorner(nv, nv);
    const Eigen::PartialPivLU<Eigen::MatrixXd> solve_u(Eigen::MatrixXd::Identity(nu, nu) - dt * l_uu);
    const Eigen::PartialPivLU<Eigen::MatrixXd> solve_v(Eigen::MatrixXd::Identity(nv, nv) - dt * l_vv);
    const Eigen::VectorXd w_local = grid.weights.head(nu);

    PicardReport report;
    report.kappa = picard_kappa(constants, t_w);
    report.window = t_w;
    report.substep_dt = dt;

    Trajectory traj;
    traj.grid = grid;
    traj.dt = dt;
    traj.steps = total_steps;
    traj.times.push_back(0.0);
    traj.series.push_back(make_record(gen, 0.0, w0));
    if (snapshot_stride > 0) traj.snapshots.emplace_back(0.0, w0);

    Eigen::VectorXd u_start = w0.head(nu);
    Eigen::VectorXd v_start = w0.tail(nv);
    int done = 0;
    while (done < total_steps) {
        const int k_steps = std::min(per_window, total_steps - done);
        std::vector<Eigen::VectorXd> u_hist(k_steps + 1, u_start);
        std::vector<Eigen::VectorXd> v_hist(k_steps + 1, v_start);
        std::vector<Eigen::VectorXd> u_new(k_steps + 1, u_start);

        double update = std::numeric_limits<double>::infinity();
        double prev_update = 0.0;
        double max_ratio = 0.0;
        int iter = 0;
        while (iter < scheme.picard_max_iters) {
            ++iter;
            for (int k = 1; k <= k_steps; ++k)
                v_hist[k] = solve_v.solve(v_hist[k - 1] + dt * l_vu * u_hist[k][iface]);
            update = 0.0;
            for (int k = 1; k <= k_steps; ++k) {
                u_new[k] = solve_u.solve(u_new[k - 1] + (dt * l_uv.dot(v_hist[k])) * Eigen::VectorXd::Unit(nu, iface));
                const Eigen::VectorXd d = u_new[k] - u_hist[k];
                update = std::max(update, std::sqrt((w_local.array() * d.array().square()).sum()));
            }
            std::swap(u_hist, u_new);
            const double floor = 1e-13 * std::max(1.0, u_start.cwiseAbs().maxCoeff());
            if (iter > 1 && prev_update > floor && update > floor) max_ratio = std::max(max_ratio, update / prev_update);
            prev_update = update;
            if (update <= scheme.picard_tol) break;
        }
        report.iterations.push_back(iter);
        report.final_update.push_back(update);
        report.max_ratio.push_back(max_ratio);
        ++report.windows;
        if (!(update <= scheme.picard_tol))
            throw PicardError("picard iteration did not converge in window " + std::to_string(report.windows) +
                                  ": last update " + std::to_string(update) + ", kappa " +
                                  std::to_string(report.kappa),
                              report);

        StateField w(grid.size());
        for (int k = 1; k <= k_steps; ++k) {
            w << u_hist[k], v_hist[k];
            const int step = done + k;
            const double t = step == total_steps ? horizon : step * dt;
            detail::check_finite(w, step, t);
            traj.times.push_back(t);
            traj.series.push_back(make_record(gen, t, w));
            if (snapshot_stride > 0 && (step % snapshot_stride == 0 || step == total_steps))
                traj.snapshots.emplace_back(t, w);
        }
        u_start = u_hist[k_steps];
        v_start = v_hist[k_steps];
        done += k_steps;
    }
    traj.final_state.resize(grid.size());
    traj.final_state << u_start, v_start;
    return {std::move(traj), std::move(report)};
}

} // namespace lnld

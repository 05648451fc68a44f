#pragma once

// Subcommand implementations shared by the `lnld` executable and the tests.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lnld/analysis.hpp"
#include "lnld/config.hpp"
#include "lnld/discretization.hpp"
#include "lnld/energy_spectrum.hpp"
#include "lnld/evolution.hpp"
#include "lnld/io.hpp"
#include "lnld/oracles.hpp"

namespace lnld::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kRuntimeError = 3 };

struct CommandOptions {
    bool svg = false;
    bool corrupt_generator = false; // verify test hook: zero one coupling entry
    std::ostream* out = &std::cout;
};

namespace detail {

inline std::filesystem::path out_dir(const SimConfig& c) { return c.output_dir; }

inline void write_manifest(const SimConfig& c, std::optional<double> dt = std::nullopt) {
    io::write_atomic(out_dir(c) / "manifest.cfg", manifest(c, dt));
}

/// Breaks the interface coupling on the local side only, so the operator stops conserving mass.
inline void corrupt(GeneratorMatrix& gen) {
    const int a = gen.grid.interface_index;
    const int b = gen.grid.nonlocal_offset();
    gen.entries(a, b) = 0.0;
}

} // namespace detail

inline void run_simulate(const SimConfig& c, const CommandOptions& opt = {}) {
    validate(c);
    const Grid grid = c.grid();
    const Kernel kernel = c.kernel();
    const CouplingConstants cc = coupling_constants(kernel);
    const StateField w0 = initial_state(c, grid);
    const StepScheme scheme = c.step_scheme();

    Trajectory traj;
    double dt = 0.0;
    if (c.scheme == SchemeKind::picard) {
        auto [t, report] = picard_window_solve(grid, kernel, cc, w0, scheme, c.horizon, c.snapshot_stride);
        traj = std::move(t);
        dt = report.substep_dt;
        int worst = 0;
        for (int it : report.iterations) worst = std::max(worst, it);
        *opt.out << "picard: " << report.windows << " windows, max " << worst << " iterations, kappa "
                 << io::format_number(report.kappa) << '\n';
    } else {
        const GeneratorMatrix gen = assemble_generator(grid, kernel, cc);
        dt = resolve_dt(gen, scheme);
        traj = evolve(gen, w0, scheme, c.horizon, c.snapshot_stride);
    }

    const auto dir = detail::out_dir(c);
    io::timeseries_csv(traj).save(dir / "timeseries.csv");
    io::CsvTable index({"index", "t", "file"});
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%05zu.csv", i);
        io::snapshot_csv(grid, traj.snapshots[i].second).save(dir / name);
        index.row(static_cast<int>(i), traj.snapshots[i].first, std::string(name));
    }
    index.save(dir / "snapshots.csv");
    io::snapshot_csv(grid, traj.final_state).save(dir / "final.csv");
    if (opt.svg) {
        io::SvgPlot plot{"distance to mean", "t", "dist_to_mean", false, true, {}, {}};
        for (const auto& r : traj.series) {
            plot.xs.push_back(r.t);
            plot.ys.push_back(r.dist_to_mean);
        }
        io::write_atomic(dir / "dist_to_mean.svg", plot.render());
    }
    detail::write_manifest(c, dt);

    const double m0 = traj.series.front().mass;
    const double m1 = traj.series.back().mass;
    *opt.out << "simulate: " << traj.steps << " steps of dt " << io::format_number(traj.dt) << ", mass drift "
             << io::format_number(std::abs(m1 - m0) / std::max(std::abs(m0), 1e-300)) << ", output "
             << dir.string() << '\n';
}

inline void run_spectrum(const SimConfig& c, const CommandOptions& opt = {}) {
    validate(c);
    io::CsvTable table({"n_local", "n_nonlocal", "epsilon", "beta1", "lambda2", "residual", "k_estimate"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (c.spectrum_heat_diagnostic) {
        const Grid grid = build_heat_grid(c.n_local);
        const SpectralReport s = estimate_beta1(assemble_heat_generator(grid));
        table.row(grid.n_local, 0, nan, s.beta1, s.lambda2, s.residual, nan);
    } else {
        const Grid grid = c.grid();
        const Kernel kernel = c.kernel();
        const CouplingConstants cc = coupling_constants(kernel);
        const SpectralReport s = estimate_beta1(assemble_generator(grid, kernel, cc));
        const double k = estimate_energy_control_k(grid, kernel, cc, c.spectrum_samples, c.seed);
        table.row(grid.n_local, grid.n_nonlocal, kernel.epsilon(), s.beta1, s.lambda2, s.residual, k);
    }
    table.save(detail::out_dir(c) / "spectrum.csv");
    detail::write_manifest(c);
    *opt.out << table.str();
}

inline void run_sweep(const SimConfig& c, const CommandOptions& opt = {}) {
    validate(c);
    if (c.init_kind == InitKind::file)
        throw ConfigError("init.kind", "the epsilon sweep needs an analytic initial profile");
    SweepOptions so;
    so.family = c.kernel_family;
    so.radius = c.kernel_radius;
    so.n_local = c.n_local;
    so.n_nonlocal = c.n_nonlocal;
    so.dt = c.sweep_dt;
    so.horizon = c.sweep_horizon;
    so.n_modes = c.sweep_modes;
    const auto rows = epsilon_sweep(so, c.sweep_eps, initial_profile(c));
    const auto dir = detail::out_dir(c);
    io::sweep_csv(rows).save(dir / "sweep.csv");
    if (opt.svg) {
        io::SvgPlot plot{"sup-in-time error against the heat flow", "epsilon", "sup_error_l2", true, true, {}, {}};
        for (const auto& r : rows) {
            plot.xs.push_back(r.epsilon);
            plot.ys.push_back(r.sup_error);
        }
        io::write_atomic(dir / "sweep.svg", plot.render());
    }
    detail::write_manifest(c);
    for (const auto& r : rows)
        *opt.out << "epsilon " << io::format_number(r.epsilon) << ": sup_error " << io::format_number(r.sup_error)
                 << ", beta1 " << io::format_number(r.beta1_eps) << ", interface jump "
                 << io::format_number(r.interface_jump) << '\n';
}

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline CheckResult check_structure(const GeneratorMatrix& gen, double dt) {
    const Grid& g = gen.grid;
    const Eigen::MatrixXd& l = gen.entries;
    const Eigen::MatrixXd wl = g.weights.asDiagonal() * l;
    const double scale = wl.cwiseAbs().maxCoeff();
    const double sym = (wl - wl.transpose()).cwiseAbs().maxCoeff() / scale;
    const double rows = (l * Eigen::VectorXd::Ones(g.size())).cwiseAbs().maxCoeff() / l.cwiseAbs().maxCoeff();
    double min_off = 0.0;
    for (int a = 0; a < g.size(); ++a)
        for (int b = 0; b < g.size(); ++b)
            if (a != b) min_off = std::min(min_off, l(a, b));
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(g.size(), g.size()) - dt * l;
    const double min_inv = m.partialPivLu().inverse().minCoeff();
    const bool pass = sym <= 1e-12 && rows <= 1e-12 && min_off >= 0.0 && min_inv >= -1e-14;
    return {"operator structure", pass,
            "symmetry " + sci(sym) + ", row sums " + sci(rows) + ", min off-diagonal " + sci(min_off) +
                ", min inverse entry " + sci(min_inv)};
}

inline CheckResult check_mass_identity(const GeneratorMatrix& gen, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < 5; ++s) {
        StateField w(gen.grid.size());
        for (auto& x : w) x = normal(rng);
        const StateField lw = gen.apply(w);
        worst = std::max(worst, std::abs(mass(gen.grid, lw)) / weighted_norm(gen.grid, lw));
    }
    return {"mass identity", worst <= 1e-12, "max |sum W L w| / |L w| = " + sci(worst)};
}

inline CheckResult check_conservation(const Trajectory& traj) {
    const double m0 = traj.series.front().mass;
    double drift = 0.0;
    for (const auto& r : traj.series) drift = std::max(drift, std::abs(r.mass - m0));
    drift /= std::max(std::abs(m0), 1.0);
    return {"mass conservation", drift <= 1e-11, "relative drift " + sci(drift)};
}

inline CheckResult check_dissipation(const Trajectory& traj) {
    double worst = 0.0;
    for (std::size_t k = 1; k < traj.series.size(); ++k)
        worst = std::max(worst, traj.series[k].energy.total - traj.series[k - 1].energy.total);
    return {"energy dissipation", worst <= 1e-12, "largest energy increase " + sci(worst)};
}

inline CheckResult check_decay_bound(const Trajectory& traj, const SpectralReport& spec) {
    const double d0 = traj.series.front().dist_to_mean;
    double worst = 0.0;
    for (const auto& r : traj.series)
        if (d0 > 0.0) worst = std::max(worst, r.dist_to_mean / (d0 * std::exp(-spec.beta1 * r.t)));
    return {"decay bound", worst <= 1.0 + 1e-6,
            "beta1 " + sci(spec.beta1) + ", max dist / bound " + sci(worst)};
}

/// Small instance sharing the configured kernel; N_nl is raised to meet the resolution rule.
inline Grid small_grid(const Kernel& kernel, int n) {
    const double span = kernel.support();
    const int n_nl = std::max(n, static_cast<int>(std::ceil(4.0 / span - 1e-9)));
    return build_grid(n, n_nl);
}

inline CheckResult check_comparison(const Kernel& kernel, std::uint64_t seed) {
    const Grid grid = small_grid(kernel, 30);
    const GeneratorMatrix gen = assemble_generator(grid, kernel);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> gap(0.0, 0.5);
    double worst = 0.0;
    for (int p = 0; p < 10; ++p) {
        StateField lo(grid.size()), hi(grid.size());
        for (int a = 0; a < grid.size(); ++a) {
            lo[a] = unif(rng);
            hi[a] = lo[a] + gap(rng);
        }
        for (SchemeKind kind : {SchemeKind::explicit_euler, SchemeKind::implicit_euler}) {
            StepScheme s;
            s.kind = kind;
            s.dt = kind == SchemeKind::explicit_euler ? cfl_limit(gen) : 1e-3;
            const double horizon = std::min(0.05, 200 * *s.dt);
            const Trajectory a = evolve(gen, lo, s, horizon, 1);
            const Trajectory b = evolve(gen, hi, s, horizon, 1);
            for (std::size_t k = 0; k < a.snapshots.size(); ++k)
                worst = std::max(worst, (a.snapshots[k].second - b.snapshots[k].second).maxCoeff());
        }
    }
    return {"comparison principle", worst <= 1e-12, "largest ordering violation " + sci(std::max(worst, 0.0))};
}

inline CheckResult check_picard(const Kernel& kernel) {
    const Grid grid = small_grid(kernel, 40);
    const CouplingConstants cc = coupling_constants(kernel);
    StepScheme s;
    s.kind = SchemeKind::picard;
    s.picard_window = 0.8 * picard_window_limit(cc);
    s.picard_tol = 1e-10;
    const StateField w0 = sample(grid, [](double x, bool) { return std::exp(-(x + 0.5) * (x + 0.5) / 0.045); });
    const double horizon = 2.0 * s.picard_window;
    try {
        const auto [traj, rep] = picard_window_solve(grid, kernel, cc, w0, s, horizon);
        StepScheme imp;
        imp.kind = SchemeKind::implicit_euler;
        imp.dt = rep.substep_dt;
        const Trajectory ref = evolve(assemble_generator(grid, kernel, cc), w0, imp, horizon);
        const double err = weighted_norm(grid, traj.final_state - ref.final_state);
        double ratio = 0.0;
        for (double r : rep.max_ratio) ratio = std::max(ratio, r);
        const bool ratio_ok = !(rep.kappa < 1.0) || ratio <= rep.kappa;
        return {"picard vs implicit", err <= 1e-6 && ratio_ok,
                "L2 distance " + sci(err) + ", max ratio " + sci(ratio) + ", kappa " + sci(rep.kappa)};
    } catch (const PicardError& e) {
        return {"picard vs implicit", false, e.what()};
    }
}

inline CheckResult check_semigroup(const Kernel& kernel) {
    const Grid grid = small_grid(kernel, 20);
    const GeneratorMatrix gen = assemble_generator(grid, kernel);
    const StateField w0 = sample(grid, [](double x, bool) { return std::exp(-(x + 0.5) * (x + 0.5) / 0.045); });
    StepScheme s;
    s.kind = SchemeKind::implicit_euler;
    s.dt = 1e-4;
    const Trajectory traj = evolve(gen, w0, s, 0.5);
    const double err = weighted_norm(grid, traj.final_state - oracle::Semigroup(gen)(w0, 0.5));
    return {"semigroup oracle", err <= 1e-5, "L2 distance at t = 0.5: " + sci(err)};
}

} // namespace detail

/// Runs the invariant checklist on the configured model; returns the per-check results.
inline std::vector<CheckResult> verify_checks(const SimConfig& c, const CommandOptions& opt = {}) {
    validate(c);
    const Grid grid = c.grid();
    const Kernel kernel = c.kernel();
    GeneratorMatrix gen = assemble_generator(grid, kernel, coupling_constants(kernel));
    if (opt.corrupt_generator) detail::corrupt(gen);

    std::vector<CheckResult> out;
    out.push_back(detail::check_structure(gen, kDefaultImplicitDt));
    out.push_back(detail::check_mass_identity(gen, c.seed));

    StateField w0 = initial_state(c, grid);
    StepScheme s;
    s.kind = SchemeKind::implicit_euler;
    s.dt = c.scheme == SchemeKind::implicit_euler && c.dt ? *c.dt : kDefaultImplicitDt;
    const Trajectory traj = evolve(gen, w0, s, c.horizon);
    out.push_back(detail::check_conservation(traj));
    out.push_back(detail::check_dissipation(traj));
    try {
        out.push_back(detail::check_decay_bound(traj, estimate_beta1(gen)));
    } catch (const std::exception& e) {
        out.push_back({"decay bound", false, e.what()});
    }
    out.push_back(detail::check_comparison(kernel, c.seed));
    out.push_back(detail::check_picard(kernel));
    out.push_back(detail::check_semigroup(kernel));
    return out;
}

inline bool run_verify(const SimConfig& c, const CommandOptions& opt = {}) {
    const auto checks = verify_checks(c, opt);
    bool all = true;
    for (const auto& r : checks) {
        char line[64];
        std::snprintf(line, sizeof line, "%-4s  %-22s  ", r.pass ? "PASS" : "FAIL", r.name.c_str());
        *opt.out << line << r.detail << '\n';
        all = all && r.pass;
    }
    *opt.out << (all ? "all checks passed" : "verification FAILED") << '\n';
    return all;
}

/// Runs one subcommand and maps failures onto exit codes, printing a one-line diagnostic to `err`.
inline int dispatch(const std::string& command, const SimConfig& c, const CommandOptions& opt, std::ostream& err) {
    try {
        if (command == "simulate") run_simulate(c, opt);
        else if (command == "spectrum") run_spectrum(c, opt);
        else if (command == "sweep-epsilon") run_sweep(c, opt);
        else if (command == "verify") return run_verify(c, opt) ? kOk : kVerifyFailed;
        else {
            err << "error: unknown command '" << command << "'\n";
            return kConfigError;
        }
        return kOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "runtime error in " << command << ": " << e.what() << '\n';
        return kRuntimeError;
    }
}

} // namespace lnld::cli

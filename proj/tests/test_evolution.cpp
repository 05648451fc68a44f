#include <gtest/gtest.h>

#include <random>

#include "lnld/analysis.hpp"
#include "lnld/evolution.hpp"
#include "lnld/oracles.hpp"

using namespace lnld;

namespace {

StateField random_field(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    StateField w(n);
    for (auto& x : w) x = normal(rng);
    return w;
}

StateField step_profile(const Grid& g) {
    return sample(g, [](double, bool local) { return local ? 1.0 : 0.0; });
}

StepScheme scheme(SchemeKind kind, std::optional<double> dt = std::nullopt) {
    StepScheme s;
    s.kind = kind;
    s.dt = dt;
    return s;
}

const Kernel kTriangle(KernelFamily::triangle, 1.0, 1.0);

} // namespace

TEST(Cfl, HeatDiagnosticValue) {
    const GeneratorMatrix gen = assemble_heat_generator(build_heat_grid(200));
    EXPECT_NEAR(cfl_limit(gen), 4.5e-5, 1e-15);
}

TEST(Cfl, DecreasesWithEpsilon) {
    const Grid g = build_grid(50, 50);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {1.0, 0.5, 0.25}) {
        const double c = cfl_limit(assemble_generator(g, Kernel(KernelFamily::triangle, 1.0, eps)));
        EXPECT_LT(c, prev);
        prev = c;
    }
}

TEST(Explicit, MaxNormContractsAtCfl) {
    const GeneratorMatrix gen = assemble_generator(build_grid(20, 20), kTriangle);
    const double dt = cfl_limit(gen);
    StateField w = random_field(gen.size(), 5);
    double prev = w.cwiseAbs().maxCoeff();
    for (int k = 0; k < 10000; ++k) {
        w = step_explicit(gen, w, dt);
        const double m = w.cwiseAbs().maxCoeff();
        ASSERT_LE(m, prev * (1.0 + 1e-15));
        prev = m;
    }
}

TEST(Explicit, StepProperties) {
    const GeneratorMatrix gen = assemble_generator(build_grid(30, 30), kTriangle);
    const double dt = cfl_limit(gen);
    const StateField c = StateField::Constant(gen.size(), 2.5);
    EXPECT_LE((step_explicit(gen, c, dt) - c).cwiseAbs().maxCoeff(), 1e-13);
    const StateField w = random_field(gen.size(), 6);
    EXPECT_NEAR(mass(gen.grid, step_explicit(gen, w, dt)) / mass(gen.grid, w), 1.0, 1e-13);
    const StateField hi = (w.array() + random_field(gen.size(), 7).array().abs()).matrix();
    EXPECT_GE((step_explicit(gen, hi, dt) - step_explicit(gen, w, dt)).minCoeff(), -1e-14);
    EXPECT_THROW(step_explicit(gen, w, 1.01 * dt), std::invalid_argument);
}

TEST(Implicit, StepProperties) {
    const GeneratorMatrix gen = assemble_generator(build_grid(30, 30), kTriangle);
    const StateField c = StateField::Constant(gen.size(), -1.0);
    EXPECT_LE((step_implicit(gen, c, 0.1) - c).cwiseAbs().maxCoeff(), 1e-12);
    for (int s = 0; s < 10; ++s) {
        const StateField w = random_field(gen.size(), 20 + s);
        const StateField next = step_implicit(gen, w, 1e-2);
        EXPECT_NEAR(mass(gen.grid, next), mass(gen.grid, w), 1e-12 * std::max(1.0, std::abs(mass(gen.grid, w))));
        EXPECT_LE(energy(gen, next).total, energy(gen, w).total);
        // residual of the linear solve
        const StateField r = next - 1e-2 * gen.apply(next) - w;
        EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-12 * w.cwiseAbs().maxCoeff());
    }
}

TEST(Evolve, ConstantStateStaysAtMean) {
    const GeneratorMatrix gen = assemble_generator(build_grid(30, 30), kTriangle);
    const Trajectory t = evolve(gen, StateField::Constant(gen.size(), 4.0), scheme(SchemeKind::implicit_euler), 0.5, 10);
    for (const auto& r : t.series) EXPECT_LE(r.dist_to_mean, 1e-12);
    EXPECT_EQ(t.series.size(), static_cast<std::size_t>(t.steps + 1));
    for (std::size_t k = 1; k < t.times.size(); ++k) EXPECT_GT(t.times[k], t.times[k - 1]);
    EXPECT_EQ(t.times.back(), 0.5);
}

TEST(Evolve, StepProfileConservesMassAndDecays) {
    const GeneratorMatrix gen = assemble_generator(build_grid(100, 100), kTriangle);
    const StateField w0 = step_profile(gen.grid);
    const Trajectory t = evolve(gen, w0, scheme(SchemeKind::implicit_euler, 1e-3), 3.0);
    const double m0 = mass(gen.grid, w0);
    EXPECT_NEAR(m0, 1.0, 1e-14);
    for (std::size_t k = 0; k < t.series.size(); ++k) {
        EXPECT_LE(std::abs(t.series[k].mass - m0), 1e-11 * m0);
        if (k > 0) {
            EXPECT_LE(t.series[k].dist_to_mean, t.series[k - 1].dist_to_mean);
            EXPECT_LE(t.series[k].energy.total, t.series[k - 1].energy.total + 1e-12);
        }
    }
}

TEST(Evolve, SnapshotsAndDtAdjustment) {
    const GeneratorMatrix gen = assemble_generator(build_grid(20, 20), kTriangle);
    const Trajectory t = evolve(gen, step_profile(gen.grid), scheme(SchemeKind::implicit_euler, 0.03), 0.1, 2);
    EXPECT_EQ(t.steps, 4);
    EXPECT_DOUBLE_EQ(t.dt, 0.025);
    ASSERT_EQ(t.snapshots.size(), 3u);
    EXPECT_EQ(t.snapshots.back().first, 0.1);
    EXPECT_EQ(t.snapshots.back().second, t.final_state);
}

TEST(Evolve, RejectsExplicitAboveCfl) {
    const GeneratorMatrix gen = assemble_generator(build_grid(20, 20), kTriangle);
    EXPECT_THROW(evolve(gen, step_profile(gen.grid), scheme(SchemeKind::explicit_euler, 2.0 * cfl_limit(gen)), 0.01),
                 std::invalid_argument);
    const Trajectory t = evolve(gen, step_profile(gen.grid), scheme(SchemeKind::explicit_euler), 0.01);
    EXPECT_LE(t.dt, cfl_limit(gen));
}

TEST(Evolve, ComparisonPrinciple) {
    const GeneratorMatrix gen = assemble_generator(build_grid(50, 50), kTriangle);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unif(-1.0, 1.0), gap(0.0, 0.3);
    double worst = 0.0;
    for (int p = 0; p < 50; ++p) {
        StateField lo(gen.size()), hi(gen.size());
        for (int a = 0; a < gen.size(); ++a) {
            lo[a] = unif(rng);
            hi[a] = lo[a] + gap(rng);
        }
        for (auto s : {scheme(SchemeKind::explicit_euler), scheme(SchemeKind::implicit_euler, 1e-3)}) {
            const double horizon = s.kind == SchemeKind::explicit_euler ? 0.01 : 0.05;
            const Trajectory a = evolve(gen, lo, s, horizon, 1);
            const Trajectory b = evolve(gen, hi, s, horizon, 1);
            for (std::size_t k = 0; k < a.snapshots.size(); ++k)
                worst = std::max(worst, (a.snapshots[k].second - b.snapshots[k].second).maxCoeff());
        }
    }
    EXPECT_LE(worst, 1e-12);
}

TEST(Evolve, ExplicitImplicitGapIsFirstOrder) {
    const GeneratorMatrix gen = assemble_generator(build_grid(20, 20), kTriangle);
    const StateField w0 = step_profile(gen.grid);
    const auto gap = [&](double dt) {
        const Trajectory e = evolve(gen, w0, scheme(SchemeKind::explicit_euler, dt), 0.1);
        const Trajectory i = evolve(gen, w0, scheme(SchemeKind::implicit_euler, dt), 0.1);
        return weighted_norm(gen.grid, e.final_state - i.final_state);
    };
    const double n = std::ceil(0.1 / cfl_limit(gen));
    const double dt = 0.1 / n;
    const double ratio = gap(dt) / gap(0.5 * dt);
    EXPECT_GE(ratio, 1.5);
    EXPECT_LE(ratio, 2.5);
}

TEST(Evolve, SmallInstanceSemigroupOracle) {
    const GeneratorMatrix gen = assemble_generator(build_grid(20, 20), kTriangle);
    const StateField w0 = sample(gen.grid, [](double x, bool) { return std::exp(-(x + 0.5) * (x + 0.5) / 0.045); });
    const oracle::Semigroup exact(gen);
    EXPECT_LE((exact(w0, 0.0) - w0).cwiseAbs().maxCoeff(), 1e-12);
    const Trajectory t = evolve(gen, w0, scheme(SchemeKind::implicit_euler, 1e-4), 0.5);
    EXPECT_LE(weighted_norm(gen.grid, t.final_state - exact(w0, 0.5)), 1e-5);
}

TEST(Evolve, NanAborts) {
    const GeneratorMatrix gen = assemble_generator(build_grid(20, 20), kTriangle);
    StateField w = step_profile(gen.grid);
    w[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(evolve(gen, w, scheme(SchemeKind::implicit_euler, 1e-2), 0.1), std::runtime_error);
}

TEST(Picard, WindowBoundAndKappa) {
    const CouplingConstants c = coupling_constants(kTriangle);
    EXPECT_DOUBLE_EQ(picard_window_limit(c), 1.0 / 25.0);
    EXPECT_NEAR(picard_kappa(c, 0.8 / 25.0), 0.08, 1e-15);
}

TEST(Picard, ConstantStateOneIterationPerWindow) {
    const Grid g = build_grid(30, 30);
    const CouplingConstants c = coupling_constants(kTriangle);
    StepScheme s = scheme(SchemeKind::picard);
    s.picard_window = 0.8 * picard_window_limit(c);
    const auto [t, rep] = picard_window_solve(g, kTriangle, c, StateField::Constant(g.size(), 3.0), s,
                                              4 * s.picard_window);
    EXPECT_EQ(rep.windows, 4);
    for (int it : rep.iterations) EXPECT_EQ(it, 1);
    EXPECT_LE((t.final_state.array() - 3.0).abs().maxCoeff(), 1e-12);
}

TEST(Picard, MatchesMonolithicImplicit) {
    const Grid g = build_grid(100, 100);
    const CouplingConstants c = coupling_constants(kTriangle);
    StepScheme s = scheme(SchemeKind::picard);
    s.picard_window = 0.8 * picard_window_limit(c);
    s.picard_tol = 1e-10;
    const StateField w0 = step_profile(g);
    const auto [t, rep] = picard_window_solve(g, kTriangle, c, w0, s, 0.5);
    EXPECT_EQ(t.times.back(), 0.5);
    for (double u : rep.final_update) EXPECT_LE(u, 1e-10);
    EXPECT_LT(rep.kappa, 1.0);
    for (double r : rep.max_ratio) EXPECT_LE(r, rep.kappa);
    const Trajectory ref = evolve(assemble_generator(g, kTriangle, c), w0, scheme(SchemeKind::implicit_euler, rep.substep_dt), 0.5);
    EXPECT_LE(weighted_norm(g, t.final_state - ref.final_state), 1e-6);
    for (std::size_t k = 0; k < t.series.size(); ++k) EXPECT_NEAR(t.series[k].mass, 1.0, 1e-9);
}

TEST(Picard, RejectsBadWindows) {
    const Grid g = build_grid(20, 20);
    const CouplingConstants c = coupling_constants(kTriangle);
    StepScheme s = scheme(SchemeKind::picard);
    s.picard_window = picard_window_limit(c);
    EXPECT_THROW(picard_window_solve(g, kTriangle, c, step_profile(g), s, 0.1), std::invalid_argument);
    s.picard_window = 0.02;
    s.dt = 0.003;
    EXPECT_THROW(picard_window_solve(g, kTriangle, c, step_profile(g), s, 0.1), std::invalid_argument);
}

TEST(Picard, ReportsNonConvergence) {
    const Grid g = build_grid(20, 20);
    const CouplingConstants c = coupling_constants(kTriangle);
    StepScheme s = scheme(SchemeKind::picard);
    s.picard_window = 0.8 * picard_window_limit(c);
    s.picard_max_iters = 1;
    try {
        picard_window_solve(g, kTriangle, c, step_profile(g), s, s.picard_window);
        FAIL() << "expected PicardError";
    } catch (const PicardError& e) {
        EXPECT_EQ(e.report().windows, 1);
        EXPECT_GT(e.report().final_update.back(), s.picard_tol);
    }
}

TEST(Scheme, NamesRoundTrip) {
    for (auto k : {SchemeKind::explicit_euler, SchemeKind::implicit_euler, SchemeKind::picard})
        EXPECT_EQ(parse_scheme(to_string(k)), k);
    EXPECT_THROW(parse_scheme("rk4"), std::invalid_argument);
}

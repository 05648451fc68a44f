#include <gtest/gtest.h>

#include <random>

#include "lnld/kernels.hpp"
#include "lnld/oracles.hpp"

using namespace lnld;

namespace {

const KernelFamily kFamilies[] = {KernelFamily::uniform, KernelFamily::triangle, KernelFamily::epanechnikov};

// Midpoint rule over the support with n points.
template <class F>
double midpoint(F&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += f(a + (i + 0.5) * h);
    return s * h;
}

} // namespace

TEST(Kernel, PointValues) {
    EXPECT_DOUBLE_EQ(make_kernel(KernelFamily::uniform, 1.0, 1.0)(0.0), 0.5);
    EXPECT_DOUBLE_EQ(make_kernel(KernelFamily::triangle, 1.0, 1.0)(0.5), 0.5);
    EXPECT_DOUBLE_EQ(make_kernel("epanechnikov", 1.0, 1.0)(0.0), 0.75);
}

TEST(Kernel, RejectsBadArguments) {
    EXPECT_THROW(make_kernel("gauss", 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(make_kernel(KernelFamily::triangle, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(make_kernel(KernelFamily::triangle, 1.0, -0.5), std::invalid_argument);
    EXPECT_THROW(make_kernel(KernelFamily::triangle, 1.0, 0.0), std::invalid_argument);
}

TEST(Kernel, EvenNonnegativeCompactSupport) {
    for (auto fam : kFamilies)
        for (double eps : {1.0, 0.3}) {
            const Kernel k(fam, 1.5, eps);
            for (double z = -3.0; z <= 3.0; z += 0.0137) {
                EXPECT_GE(k(z), 0.0);
                EXPECT_EQ(k(z), k(-z));
                if (std::abs(z) > k.support()) EXPECT_EQ(k(z), 0.0);
            }
        }
}

TEST(Kernel, UniformRescaledMass) {
    const Kernel k(KernelFamily::uniform, 1.0, 0.25);
    EXPECT_NEAR(midpoint(k, -0.25, 0.25, 10000), 16.0, 1e-10);
}

TEST(Kernel, QuadratureMassAndMoment) {
    for (auto fam : kFamilies)
        for (double eps : {1.0, 0.5, 0.25, 0.1}) {
            const Kernel k(fam, 1.0, eps);
            const double s = k.support();
            const double m0 = midpoint(k, -s, s, 10000);
            EXPECT_NEAR(m0 * eps * eps, 1.0, 1e-8) << to_string(fam) << " eps " << eps;
            // the z^2 weight has a nonzero end slope, so midpoint needs a finer mesh for 1e-8
            const double m2 = midpoint([&](double z) { return k(z) * z * z; }, -s, s, 100000);
            EXPECT_NEAR(m2 / second_moment(k), 1.0, 1e-8) << to_string(fam) << " eps " << eps;
        }
}

TEST(Kernel, UnscaledMassByAdaptiveQuadrature) {
    for (auto fam : kFamilies) {
        const Kernel k(fam, 1.0, 1.0);
        const double m = oracle::adaptive_simpson(k, -1.0, 0.0, 1e-14) + oracle::adaptive_simpson(k, 0.0, 1.0, 1e-14);
        EXPECT_NEAR(m, 1.0, 1e-12);
    }
}

TEST(Kernel, SecondMomentClosedForm) {
    EXPECT_DOUBLE_EQ(second_moment(make_kernel(KernelFamily::uniform, 1.0, 1.0)), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(second_moment(make_kernel(KernelFamily::triangle, 1.0, 1.0)), 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(second_moment(make_kernel(KernelFamily::epanechnikov, 1.0, 1.0)), 1.0 / 5.0);
    // independent of eps, scales with R^2
    EXPECT_DOUBLE_EQ(second_moment(make_kernel(KernelFamily::triangle, 2.0, 0.1)), 4.0 / 6.0);
}

TEST(Kernel, CouplingConstants) {
    const auto c = [](KernelFamily f) { return coupling_constants(make_kernel(f, 1.0, 0.5)); };
    EXPECT_DOUBLE_EQ(c(KernelFamily::uniform).c1, 6.0);
    EXPECT_DOUBLE_EQ(c(KernelFamily::triangle).c1, 12.0);
    EXPECT_DOUBLE_EQ(c(KernelFamily::epanechnikov).c1, 10.0);
    EXPECT_DOUBLE_EQ(c(KernelFamily::triangle).c2, 1.0);
    EXPECT_DOUBLE_EQ(c(KernelFamily::triangle).m_j, 1.0 / 6.0);
    EXPECT_NO_THROW(c(KernelFamily::uniform).validate());
    EXPECT_THROW((CouplingConstants{0.0, 1.0, 1.0}.validate()), std::invalid_argument);
}

TEST(CouplingProfile, ClosedFormExamples) {
    EXPECT_DOUBLE_EQ(coupling_profile_analytic(make_kernel(KernelFamily::uniform, 1.0, 1.0), 0.5), 0.25);
    EXPECT_DOUBLE_EQ(coupling_profile_analytic(make_kernel(KernelFamily::triangle, 1.0, 1.0), 0.5), 0.125);
    for (auto fam : kFamilies) {
        const Kernel k(fam, 1.0, 0.3);
        EXPECT_EQ(coupling_profile_analytic(k, 0.3), 0.0);
        EXPECT_EQ(coupling_profile_analytic(k, 0.7), 0.0);
    }
}

TEST(CouplingProfile, RejectsOutsideUnitInterval) {
    const Kernel k(KernelFamily::triangle, 1.0, 1.0);
    EXPECT_THROW(coupling_profile_analytic(k, 0.0), std::domain_error);
    EXPECT_THROW(coupling_profile_analytic(k, 1.0), std::domain_error);
    EXPECT_THROW(coupling_profile_analytic(k, -0.2), std::domain_error);
}

TEST(CouplingProfile, MatchesAdaptiveQuadrature) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto fam : kFamilies)
        for (double eps : {1.0, 0.5, 0.25}) {
            const Kernel k(fam, 1.0, eps);
            for (int n = 0; n < 100; ++n) {
                const double y = unif(rng);
                if (y <= 0.0) continue;
                // integrate s over [-1, 0]; split at kinks of J^eps(y - s)
                const double lo = std::max(-1.0, y - k.support());
                double q = 0.0;
                if (lo < 0.0) {
                    const double kink = std::clamp(y, lo, 0.0);
                    const auto f = [&](double s) { return k(y - s); };
                    q = oracle::adaptive_simpson(f, lo, kink, 1e-13) + oracle::adaptive_simpson(f, kink, 0.0, 1e-13);
                }
                EXPECT_NEAR(coupling_profile_analytic(k, y), q, 1e-10) << to_string(fam) << " y " << y;
            }
        }
}

TEST(CouplingProfile, NonincreasingAndVanishing) {
    for (auto fam : kFamilies)
        for (double eps : {1.0, 0.25}) {
            const Kernel k(fam, 1.0, eps);
            double prev = coupling_profile_analytic(k, 1e-6);
            for (double y = 0.001; y < 1.0; y += 0.001) {
                const double q = coupling_profile_analytic(k, y);
                EXPECT_LE(q, prev + 1e-15);
                if (y >= k.support()) EXPECT_EQ(q, 0.0);
                prev = q;
            }
        }
}

TEST(Kernel, FamilyNamesRoundTrip) {
    for (auto fam : kFamilies) EXPECT_EQ(parse_family(to_string(fam)), fam);
}

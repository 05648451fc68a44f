#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lnld {

/// Built-in kernel shapes. All are even, nonnegative, supported on [-R, R]
/// and normalized to unit mass before rescaling.
enum class KernelFamily { uniform, triangle, epanechnikov };

inline std::string_view to_string(KernelFamily family) {
    switch (family) {
    case KernelFamily::uniform: return "uniform";
    case KernelFamily::triangle: return "triangle";
    case KernelFamily::epanechnikov: return "epanechnikov";
    }
    return "unknown";
}

inline KernelFamily parse_family(std::string_view name) {
    if (name == "uniform") return KernelFamily::uniform;
    if (name == "triangle") return KernelFamily::triangle;
    if (name == "epanechnikov") return KernelFamily::epanechnikov;
    throw std::invalid_argument("unknown kernel family '" + std::string(name) + "'");
}

/**
 * Convolution kernel J^eps(z) = eps^-3 J(z / eps), where J is one of the
 * unit-mass families on [-R, R]. With eps = 1 this is the base kernel.
 *
 * The eps^-3 scaling keeps the second moment of J^eps independent of eps,
 * so the rescaled nonlocal operator approaches the Laplacian.
 */
class Kernel {
public:
    Kernel(KernelFamily family, double radius, double epsilon)
        : family_(family), radius_(radius), epsilon_(epsilon) {
        if (!(radius > 0.0) || !std::isfinite(radius))
            throw std::invalid_argument("kernel radius must be positive");
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
            throw std::invalid_argument("kernel epsilon must be positive");
    }

    KernelFamily family() const { return family_; }
    double radius() const { return radius_; }
    double epsilon() const { return epsilon_; }

    /// Half-width of the support of the rescaled kernel.
    double support() const { return radius_ * epsilon_; }

    /// Unscaled unit-mass profile J(z).
    double base(double z) const {
        const double s = std::abs(z) / radius_;
        if (s > 1.0) return 0.0;
        switch (family_) {
        case KernelFamily::uniform: return 0.5 / radius_;
        case KernelFamily::triangle: return (1.0 - s) / radius_;
        case KernelFamily::epanechnikov: return 0.75 * (1.0 - s * s) / radius_;
        }
        return 0.0;
    }

    double operator()(double z) const {
        return base(z / epsilon_) / (epsilon_ * epsilon_ * epsilon_);
    }

    /// Tail mass of the base kernel, int_a^inf J(z) dz, for a >= 0.
    double base_tail(double a) const {
        const double s = a / radius_;
        if (s >= 1.0) return 0.0;
        if (s <= 0.0) return 0.5;
        switch (family_) {
        case KernelFamily::uniform: return 0.5 * (1.0 - s);
        case KernelFamily::triangle: return 0.5 * (1.0 - s) * (1.0 - s);
        case KernelFamily::epanechnikov: return 0.25 * (1.0 - s) * (1.0 - s) * (2.0 + s);
        }
        return 0.0;
    }

private:
    KernelFamily family_;
    double radius_;
    double epsilon_;
};

inline Kernel make_kernel(KernelFamily family, double radius, double epsilon) {
    return Kernel(family, radius, epsilon);
}

inline Kernel make_kernel(std::string_view family, double radius, double epsilon) {
    return Kernel(parse_family(family), radius, epsilon);
}

/// M(J) = int J(z) z^2 dz of the unscaled family.
inline double second_moment(const Kernel& kernel) {
    const double r2 = kernel.radius() * kernel.radius();
    switch (kernel.family()) {
    case KernelFamily::uniform: return r2 / 3.0;
    case KernelFamily::triangle: return r2 / 6.0;
    case KernelFamily::epanechnikov: return r2 / 5.0;
    }
    return 0.0;
}

/// Weights in front of the nonlocal and coupling terms of the energy.
struct CouplingConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double m_j = 0.0;

    void validate() const {
        if (!(c1 > 0.0) || !std::isfinite(c1))
            throw std::invalid_argument("coupling constant c1 must be positive");
        if (!(c2 > 0.0) || !std::isfinite(c2))
            throw std::invalid_argument("coupling constant c2 must be positive");
        if (!(m_j > 0.0) || !std::isfinite(m_j))
            throw std::invalid_argument("second moment must be positive and finite");
    }
};

/// Fixed choice c1 = 2 / M(J), c2 = 1. Depends on the unscaled kernel only.
inline CouplingConstants coupling_constants(const Kernel& kernel) {
    const double m = second_moment(kernel);
    return {2.0 / m, 1.0, m};
}

/// q(y) = int_{-1}^{0} J^eps(y - s) ds for y in (0, 1): the mass of the kernel
/// centred at y that falls on the local subdomain.
inline double coupling_profile_analytic(const Kernel& kernel, double y) {
    if (!(y > 0.0 && y < 1.0))
        throw std::domain_error("coupling profile evaluated outside (0,1)");
    const double eps = kernel.epsilon();
    return (kernel.base_tail(y / eps) - kernel.base_tail((y + 1.0) / eps)) / (eps * eps);
}

} // namespace lnld

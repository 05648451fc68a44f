#pragma once

// Independent reference solutions used by the test suites and `lnld verify`.
// Nothing in the solver path depends on this header.

#include <Eigen/Dense>

#include <stdexcept>

#include "lnld/discretization.hpp"

namespace lnld::oracle {

/// Exact action of e^{tL} from a dense eigendecomposition of the
/// W-symmetrized generator W^{1/2} L W^{-1/2}.
class Semigroup {
public:
    explicit Semigroup(const GeneratorMatrix& gen) : weights_(gen.grid.weights) {
        const Eigen::VectorXd sw = weights_.cwiseSqrt();
        const Eigen::MatrixXd s = sw.asDiagonal() * gen.entries * sw.cwiseInverse().asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (s + s.transpose()));
        if (solver.info() != Eigen::Success) throw std::runtime_error("oracle eigendecomposition failed");
        values_ = solver.eigenvalues();
        vectors_ = solver.eigenvectors();
    }

    StateField operator()(const StateField& w0, double t) const {
        const Eigen::VectorXd sw = weights_.cwiseSqrt();
        const Eigen::VectorXd c = vectors_.transpose() * (sw.asDiagonal() * w0);
        const Eigen::VectorXd y = vectors_ * (c.array() * (values_.array() * t).exp()).matrix();
        return sw.cwiseInverse().asDiagonal() * y;
    }

    const Eigen::VectorXd& eigenvalues() const { return values_; }

private:
    Eigen::VectorXd weights_;
    Eigen::VectorXd values_;
    Eigen::MatrixXd vectors_;
};

/// Adaptive Simpson quadrature, for checking closed-form kernel integrals.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int depth = 50) {
    const auto simpson = [&](double lo, double hi, double flo, double fmid, double fhi) {
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    };
    const auto recurse = [&](auto&& self, double lo, double hi, double flo, double fmid, double fhi, double whole,
                             double eps, int d) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid);
        const double rm = 0.5 * (mid + hi);
        const double flm = f(lm);
        const double frm = f(rm);
        const double left = simpson(lo, mid, flo, flm, fmid);
        const double right = simpson(mid, hi, fmid, frm, fhi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
            return left + right + (left + right - whole) / 15.0;
        return self(self, lo, mid, flo, flm, fmid, left, 0.5 * eps, d - 1) +
               self(self, mid, hi, fmid, frm, fhi, right, 0.5 * eps, d - 1);
    };
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    return recurse(recurse, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, depth);
}

} // namespace lnld::oracle

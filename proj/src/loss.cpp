#include "qtube/loss.hpp"

#include <cmath>

namespace qtube {

double psi_q_eps(double u, const LossSpec& spec) {
    spec.validate();
    // max(|u| - eps, 0) before exponentiation so rounding never produces a
    // negative base
    const double t = std::max(std::abs(u) - spec.eps, 0.0);
    if (t == 0.0) return 0.0;
    if (spec.q == 1.0) return t;
    if (spec.q == 2.0) return t * t;
    return std::pow(t, spec.q);
}

double psi_q_eps_deriv(double u, const LossSpec& spec) {
    const double t = std::abs(u) - spec.eps;
    if (t <= 0.0) return 0.0;
    const double sgn = u > 0.0 ? 1.0 : -1.0;
    if (spec.q == 1.0) return sgn;
    if (spec.q == 2.0) return 2.0 * t * sgn;
    return spec.q * std::pow(t, spec.q - 1.0) * sgn;
}

std::pair<double, double> psi_q_eps_subgrad(double u, const LossSpec& spec) {
    spec.validate();
    const double au = std::abs(u);
    if (au < spec.eps) return {0.0, 0.0};
    if (au > spec.eps) {
        const double g = psi_q_eps_deriv(u, spec);
        return {g, g};
    }
    // on the tube boundary |u| = eps
    if (spec.q > 1.0) return {0.0, 0.0}; // one-sided derivative vanishes
    if (u > 0.0) return {0.0, 1.0};
    if (u < 0.0) return {-1.0, 0.0};
    return {-1.0, 1.0}; // u = 0, eps = 0, q = 1
}

double pinball(double u, double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("pinball: tau must lie in (0,1)");
    return u >= 0.0 ? tau * u : (tau - 1.0) * u;
}

} // namespace qtube

#pragma once

#include <stdexcept>
#include <utility>

namespace qtube {

/// Epsilon-insensitive q-norm loss parameters: (|u| - eps)^q outside the
/// tube |u| <= eps, zero inside. eps = 0 gives the plain q-norm loss |u|^q.
struct LossSpec {
    double q = 2.0;
    double eps = 0.0;

    void validate() const {
        if (!(q >= 1.0)) throw std::invalid_argument("LossSpec: q must be >= 1");
        if (!(eps >= 0.0)) throw std::invalid_argument("LossSpec: eps must be >= 0");
    }
};

/// Loss value at residual u. Total function, convex and even in u.
double psi_q_eps(double u, const LossSpec& spec);

/// First derivative where it exists (q > 1, or q = 1 away from kinks).
/// Used on the solver hot path; equals both ends of the subdifferential there.
double psi_q_eps_deriv(double u, const LossSpec& spec);

/// Subdifferential of the loss at u, returned as [lo, hi].
/// Singleton everywhere for q > 1; intervals appear only at the q = 1 kinks.
std::pair<double, double> psi_q_eps_subgrad(double u, const LossSpec& spec);

/// Pinball (quantile) loss with slope tau on the right, tau - 1 on the left.
/// Baseline for comparison experiments only.
double pinball(double u, double tau);

} // namespace qtube

#pragma once

#include "qtube/kernel.hpp"
#include "qtube/loss.hpp"
#include "qtube/models.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace qtube {

/// Worker threads used by Monte-Carlo loops. Results are independent of
/// this setting (fixed chunking with per-chunk seeds).
void set_threads(int n);
int threads();

using Fn = std::function<double(const Point&)>;

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo estimate of the generalization error: average over
/// x ~ design of the conditional risk at t = f(x).
McEstimate generalization_error(const Fn& f, const ConditionalModel& model,
                                const Design& design, const LossSpec& spec,
                                int n_mc, std::uint64_t seed);

/// Paired excess risk E(f) - E(g) estimated on shared x draws (variance
/// reduction for inequality checks).
McEstimate excess_risk(const Fn& f, const Fn& g, const ConditionalModel& model,
                       const Design& design, const LossSpec& spec, int n_mc,
                       std::uint64_t seed);

/// (mean |f - g|^r)^{1/r} over x ~ design; r = infinity gives the max over
/// the sample.
McEstimate lr_norm(const Fn& f, const Fn& g, double r, const Design& design,
                   int n_mc, std::uint64_t seed);

/// Comparison-inequality constant
/// C_r = 2^{(q-1)/(q+w)} q^{-1/(q+w)} (q+w)^{1/(q+w)} bound_norm^{1/(q+w)}.
double comparison_constant(double q, double w, double p, double bound_norm);

/// Variance-expectation constant
/// C_theta = C_r^2 + 2^{2-r} (1 + sup_fq^{2-r}) C_r^r, with the convention
/// x^0 = 1 at r = 2.
double variance_constant(double C_r, double r, double sup_fq);

/// theta = min{2/(q+w), p/(p+1)}, r = p(q+w)/(p+1); p = infinity gives
/// theta = min{2/(q+w), 1} and r = q+w.
std::pair<double, double> theta_r(double q, double w, double p);

struct RateParams {
    double q = 2.0;
    double w = 1.0;
    double p = std::numeric_limits<double>::infinity();
    double alpha = 1.0;
    double eta = std::numeric_limits<double>::infinity();
    double beta = 1.0;
    double k = 0.0;
    double xi = 1e-3;

    void validate() const;
};

struct RateExponent {
    double theta;
    double r;
    double vartheta;
    double lambda_exp; // Lambda
    bool constraint_ok;
};

/// Learning-rate exponent calculator for the schedule lambda = T^{-alpha},
/// eps = T^{-eta}. Flags (does not clamp) infeasible parameter choices.
RateExponent rate_exponent(const RateParams& params);

struct DlambdaPoint {
    double lambda;
    double dhat;
    bool converged;
};

struct DlambdaReport {
    std::vector<DlambdaPoint> points;
    double d0_hat = 0.0;   // fitted D_0 in D(lambda) <= D_0 lambda^beta
    double beta_hat = 0.0; // fitted decay exponent
};

/// Regularization-error estimate: for each lambda, minimize the
/// quadrature-discretized excess risk plus lambda * RKHS norm over
/// expansions on an n_quad-point design, then fit log D vs log lambda.
DlambdaReport estimate_Dlambda(const KernelSpec& kernel,
                               const ConditionalModel& model,
                               const Design& design, double q,
                               const std::vector<double>& lambda_grid,
                               int n_quad = 4096);

} // namespace qtube

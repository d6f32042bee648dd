#pragma once

#include "qtube/kernel.hpp"
#include "qtube/loss.hpp"
#include "qtube/models.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace qtube {

struct SolverOptions {
    int max_iters = 5000;
    double grad_tol = 1e-8;  // max-norm of a minimum-norm subgradient
    double obj_tol = 1e-12;  // relative objective decrease
    double q1_smoothing = 1e-6;
    std::optional<Eigen::VectorXd> warm_start; // zeros when absent
    double support_tol = 1e-7;
    bool newton_polish = true;

    void validate() const {
        if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
        if (!(grad_tol > 0) || !(obj_tol > 0) || !(q1_smoothing >= 0))
            throw std::invalid_argument("solver tolerances must be positive");
    }
};

struct FitResult {
    KernelExpansion expansion; // centers = training xs
    std::vector<double> objective_trace; // nonincreasing
    Eigen::VectorXd residuals;           // f(x_i) - y_i
    std::vector<int> support;
    double rkhs_norm_sq = 0.0;
    int iterations = 0;
    bool converged = false;
    double smoothing_bias = 0.0; // mu actually applied (q = 1 only)
    double kappa = 0.0;          // max_i sqrt(K(x_i, x_i)), diagnostic
};

/// Regularized empirical objective (1/T) sum_i psi_q^eps((Gc)_i - y_i)
/// + lambda c^T G c.
double objective(const GramMatrix& gram, const Eigen::VectorXd& ys,
                 const Eigen::VectorXd& coeffs, const LossSpec& spec,
                 double lambda);

/// Minimize the objective over representer coefficients. Monotone
/// accelerated descent with backtracking, plus safeguarded Newton
/// refinement steps for q > 1. Deterministic given inputs.
FitResult fit(const Dataset& dataset, const KernelSpec& kernel,
              const LossSpec& spec, double lambda,
              const SolverOptions& opts = {});

/// Elementwise clamp to [-1, 1].
Eigen::VectorXd project(const Eigen::VectorXd& values);
double project(double value);

struct SupportInfo {
    std::vector<int> indices;
    double ratio;
};

/// Indices with |residual_i| > eps - support_tol.
SupportInfo support_set(const FitResult& result, const LossSpec& spec,
                        double support_tol = 1e-7);

/// Optimality certificate: the max-norm of (1/T) G s + 2 lambda G c
/// minimized over valid subgradient selections s (residuals within
/// `boundary_band` of the tube edge are treated as boundary points).
double min_norm_subgrad_inf(const GramMatrix& gram, const Eigen::VectorXd& ys,
                            const Eigen::VectorXd& coeffs, const LossSpec& spec,
                            double lambda, double boundary_band = 1e-7);

// Generic representer-space minimizer used by the regularization-error
// estimator: minimize sum_j loss(j, (Gc)_j) + lambda c^T G c.
struct GenericFitResult {
    Eigen::VectorXd coeffs;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

GenericFitResult minimize_representer(
    const Eigen::MatrixXd& G,
    const std::function<double(int, double)>& loss,
    const std::function<double(int, double)>& dloss, double lambda,
    int max_iters = 2000, double grad_tol = 1e-9);

} // namespace qtube

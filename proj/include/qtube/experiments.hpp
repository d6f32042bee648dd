#pragma once

#include "qtube/analysis.hpp"
#include "qtube/models.hpp"
#include "qtube/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qtube {

/// One learning-rate sweep: lambda = T^{-alpha}, eps = T^{-eta}
/// (eta = infinity means eps = 0 exactly).
struct ExperimentConfig {
    std::string model_kind = "power"; // power | gaussian | uniform
    double phi = 1.0;
    double sigma = 0.1;
    double halfwidth = 0.25;
    int dim = 1;
    KernelSpec kernel = KernelSpec::gaussian(0.35);
    double q = 2.0;
    double alpha = 1.0;
    double eta = std::numeric_limits<double>::infinity();
    std::vector<int> T_grid;
    int repeats = 1;
    std::uint64_t seed = 1;
    double r_norm = 2.0;
    int n_mc = 20000;
    // rate-calculator inputs for the attached theoretical exponent
    double beta = 1.0;
    double k = 0.0;
    double xi = 1e-3;
    SolverOptions solver;

    void validate() const;
};

ConditionalModel make_model(const ExperimentConfig& config);

struct RateRow {
    int T;
    double lambda;
    double eps;
    double mean_err; // mean L^r error of pi(f_z^eps) vs f_q over repeats
    double std_err;  // std over repeats
    double sparsity; // mean support ratio
    std::vector<double> per_repeat;
};

struct RateReport {
    std::vector<RateRow> rows;
    double fitted_slope = 0.0;
    double slope_stderr = 0.0;
    double theoretical_lambda = 0.0;
    bool constraint_ok = true;
};

RateReport run_rate_experiment(const ExperimentConfig& config);

/// OLS of log(error) on log(T); returns (slope, stderr). Requires >= 3
/// points with positive errors.
std::pair<double, double> fit_loglog_slope(
    const std::vector<std::pair<double, double>>& points);

struct SparsityRow {
    double eps;
    double sparsity;
    double objective;
    double lr_error;
};

/// Warm-started fits across an ascending eps grid on a fixed dataset.
std::vector<SparsityRow> sparsity_sweep(const Dataset& dataset,
                                        const KernelSpec& kernel, double q,
                                        double lambda,
                                        std::vector<double> eps_grid,
                                        const ConditionalModel& model,
                                        double r_norm, int n_mc,
                                        std::uint64_t seed);

} // namespace qtube

// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. All tolerances are pinned here.

#include "qtube/analysis.hpp"
#include "qtube/experiments.hpp"
#include "qtube/loss.hpp"
#include "qtube/models.hpp"
#include "qtube/rng.hpp"
#include "qtube/solver.hpp"
#include "qtube/verify.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

using namespace qtube;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

struct Criterion {
    bool pass;
    std::string detail;
};

Eigen::VectorXd ys_vec(const Dataset& ds) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(ds.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = ds.ys[i];
    return y;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// 1. q=2, eps=0 coefficients match the direct ridge solve.
Criterion ridge_equivalence() {
    UniformRng rng(101);
    double worst = 0.0;
    bool all_converged = true;
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = 1 + static_cast<int>(rng.next() * 3.0);
        const int T = 16 + static_cast<int>(rng.next() * 49.0);
        const double bw = rng.next(0.25, 0.8);
        const double lambda = rng.next(0.05, 0.5);
        const auto model =
            ConditionalModel::power(1.0, ConditionalModel::default_center(dim));
        const Dataset ds = sample_dataset(model, Design{dim}, T,
                                          1000 + static_cast<std::uint64_t>(trial));
        const auto kernel = KernelSpec::gaussian(bw);
        const FitResult fr = fit(ds, kernel, {2.0, 0.0}, lambda);
        all_converged = all_converged && fr.converged;
        const GramMatrix gm = gram(kernel, ds.xs, 1e-10);
        const Eigen::VectorXd ridge = oracles::ridge_coeffs(gm, ys_vec(ds), lambda);
        const double rel = (fr.expansion.coeffs - ridge).cwiseAbs().maxCoeff() /
                           std::max(ridge.cwiseAbs().maxCoeff(), 1e-12);
        worst = std::max(worst, rel);
    }
    return {worst <= 1e-6 && all_converged,
            "max relative max-norm error " + fmt(worst) + " (tolerance 1e-6)"};
}

// 2. T=4 objective within 1e-5 of a refined exhaustive grid search.
Criterion brute_force_equivalence() {
    UniformRng rng(202);
    const double qs[] = {1.0, 1.5, 3.0, 1.0, 1.5, 3.0, 1.0, 1.5, 3.0, 1.5};
    const double eps_grid[] = {0.0, 0.1};
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const double q = qs[trial];
        const double eps = eps_grid[trial % 2];
        const double lambda = trial % 2 == 0 ? 0.1 : 0.05;
        const auto model =
            ConditionalModel::power(1.0, ConditionalModel::default_center(1));
        const Dataset ds = sample_dataset(model, Design{1}, 4,
                                          2000 + static_cast<std::uint64_t>(trial));
        const auto kernel = KernelSpec::gaussian(rng.next(0.3, 0.6));
        const GramMatrix gm = gram(kernel, ds.xs, 0.0);
        const Eigen::VectorXd y = ys_vec(ds);
        const LossSpec spec{q, eps};
        const FitResult fr = fit(ds, kernel, spec, lambda);
        const double solver_obj =
            objective(gm, y, fr.expansion.coeffs, spec, lambda);
        const double oracle_obj =
            oracles::grid_search_objective(gm, y, spec, lambda);
        worst = std::max(worst, std::abs(solver_obj - oracle_obj));
    }
    return {worst <= 1e-5,
            "max |solver - grid| objective gap " + fmt(worst) + " (tolerance 1e-5)"};
}

// 3. Exponent-calculator closed forms.
Criterion rate_calculator_exactness() {
    double worst = 0.0;
    for (const double q : {1.5, 2.0, 3.0}) {
        for (const double phi : {0.5, 1.0, 2.0}) {
            RateParams p;
            p.q = q;
            p.w = phi + 1.0;
            p.p = kInf;
            p.alpha = p.eta = (q + phi + 1.0) / (2.0 * (q + phi));
            p.beta = 1.0;
            p.k = 0.0;
            p.xi = 1e-12;
            const RateExponent re = rate_exponent(p);
            worst = std::max(worst,
                             std::abs(re.lambda_exp - 1.0 / (2.0 * (q + phi))));
        }
    }
    // alpha = 1, k = 0, 1 < q <= 2: the min reduces to {eta, beta, 1/(2-theta)}
    for (const double q : {1.2, 1.6, 2.0}) {
        for (const double w : {0.5, 1.0, 2.0}) {
            for (const double eta : {0.2, 0.6, 1.5}) {
                for (const double beta : {0.3, 0.7, 1.0}) {
                    RateParams p;
                    p.q = q;
                    p.w = w;
                    p.p = kInf;
                    p.alpha = 1.0;
                    p.eta = eta;
                    p.beta = beta;
                    p.k = 0.0;
                    p.xi = 1e-12;
                    const RateExponent re = rate_exponent(p);
                    const double theta = std::min(2.0 / (q + w), 1.0);
                    const double reduced =
                        std::min({eta, beta, 1.0 / (2.0 - theta)}) / (q + w);
                    worst = std::max(worst, std::abs(re.lambda_exp - reduced));
                }
            }
        }
    }
    // q = 2, eta = inf, alpha = beta = 1: Lambda = 1/(2 (1 + w))
    for (const double w : {0.1, 0.5, 1.0, 2.0}) {
        RateParams p;
        p.q = 2.0;
        p.w = w;
        p.p = kInf;
        p.alpha = 1.0;
        p.eta = kInf;
        p.beta = 1.0;
        p.k = 0.0;
        p.xi = 1e-12;
        const RateExponent re = rate_exponent(p);
        worst = std::max(worst,
                         std::abs(re.lambda_exp - 1.0 / (2.0 * (1.0 + w))));
    }
    return {worst <= 1e-12,
            "max deviation from closed forms " + fmt(worst) + " (tolerance 1e-12)"};
}

// 4. |f_q^eps - f_q| <= eps across model kinds, eps grid, 20 x each.
Criterion perturbation_bound() {
    UniformRng rng(404);
    const std::vector<ConditionalModel> models = {
        ConditionalModel::power(1.0, ConditionalModel::default_center(1)),
        ConditionalModel::gaussian_truncated(0.1,
                                             ConditionalModel::default_center(1)),
        ConditionalModel::uniform(0.25, ConditionalModel::default_center(1)),
    };
    double worst = -kInf;
    for (const auto& model : models) {
        for (int i = 0; i < 20; ++i) {
            Point x(1);
            x(0) = rng.next();
            const double t0 = target(model, x, {1.5, 0.0});
            for (const double eps : {0.01, 0.05, 0.1, 0.25, 0.5}) {
                const double te = target(model, x, {1.5, eps});
                worst = std::max(worst, std::abs(te - t0) - eps);
            }
        }
    }
    return {worst <= 1e-7,
            "max |f_q^eps - f_q| - eps = " + fmt(worst) + " (tolerance 1e-7)"};
}

// 5/6. Comparison inequality and variance-expectation bound at n_mc = 2e5.
std::pair<Criterion, Criterion> inequality_checks() {
    Criterion comp{false, "check missing"}, var{false, "check missing"};
    for (const CheckResult& c : verify_analysis(200000, 505)) {
        if (c.name == "analysis.comparison_inequality")
            comp = {c.pass, c.detail + " (must be <= 0, slack 5 MC std errors)"};
        if (c.name == "analysis.variance_bound")
            var = {c.pass, c.detail + " (must be <= 0, slack 5 MC std errors)"};
    }
    return {comp, var};
}

// 7. Empirical learning rate under the matched schedule.
Criterion empirical_rate() {
    ExperimentConfig cfg;
    cfg.model_kind = "power";
    cfg.phi = 1.0;
    cfg.q = 2.0;
    cfg.alpha = cfg.eta = 2.0 / 3.0; // (q + phi + 1)/(2 (q + phi))
    cfg.T_grid = {64, 128, 256, 512, 1024, 2048};
    cfg.repeats = 20;
    cfg.seed = 707;
    cfg.r_norm = 2.0;
    cfg.n_mc = 20000;
    const RateReport report = run_rate_experiment(cfg);
    const double bound = -1.0 / 6.0 + 0.15;
    std::ostringstream os;
    os << "fitted slope " << fmt(report.fitted_slope) << " +- "
       << fmt(report.slope_stderr) << " vs bound " << fmt(bound)
       << " (theoretical Lambda " << fmt(report.theoretical_lambda) << ")";
    return {report.fitted_slope <= bound, os.str()};
}

// 8. Sparsity endpoints and the regularization-error upper bound.
Criterion sparsity_and_dlambda() {
    const KernelExpansion center = ConditionalModel::default_center(1);
    const auto model = ConditionalModel::power(1.0, center);
    const Dataset ds = sample_dataset(model, Design{1}, 64, 808);
    const auto kernel = KernelSpec::gaussian(0.35);

    const FitResult at0 = fit(ds, kernel, {1.5, 0.0}, 0.05);
    int nonzero = 0;
    for (int i = 0; i < 64; ++i)
        if (at0.residuals(i) != 0.0) ++nonzero;
    const double ratio0 = support_set(at0, {1.5, 0.0}).ratio;
    const bool endpoint0 = ratio0 == nonzero / 64.0;

    double ymax = 0.0;
    for (double y : ds.ys) ymax = std::max(ymax, std::abs(y));
    const LossSpec wide{1.5, ymax + 0.01};
    const FitResult atMax = fit(ds, kernel, wide, 0.05);
    const bool endpoint1 = atMax.expansion.coeffs.cwiseAbs().maxCoeff() == 0.0 &&
                           support_set(atMax, wide).ratio == 0.0;

    const double norm_sq = rkhs_norm_sq(center);
    const DlambdaReport dr =
        estimate_Dlambda(kernel, model, Design{1}, 2.0, {0.3, 0.1, 0.03}, 256);
    bool dominated = true;
    double worst = -kInf;
    for (const auto& p : dr.points) {
        dominated = dominated && p.dhat <= p.lambda * norm_sq + 1e-8;
        worst = std::max(worst, p.dhat - p.lambda * norm_sq);
    }
    std::ostringstream os;
    os << "eps=0 ratio " << ratio0 << ", wide-tube ratio "
       << support_set(atMax, wide).ratio << ", max D(lambda) excess "
       << fmt(worst) << " (tolerance 1e-8)";
    return {endpoint0 && endpoint1 && dominated, os.str()};
}

// 9. Loss-layer properties at 1e4 samples.
Criterion loss_properties() {
    bool pass = true;
    std::string bad;
    for (const CheckResult& c : verify_loss(909)) {
        if (!c.pass) {
            pass = false;
            bad += " " + c.name;
        }
    }
    return {pass, pass ? "sandwich, convexity, subgradient, symmetry: 0 violations"
                       : "failing:" + bad};
}

int report(int index, const std::string& name, const Criterion& c, double secs) {
    std::printf("%s criterion %d: %s — %s [%.1fs]\n", c.pass ? "PASS" : "FAIL",
                index, name.c_str(), c.detail.c_str(), secs);
    std::fflush(stdout);
    return c.pass ? 0 : 1;
}

} // namespace

int main() {
    using clock = std::chrono::steady_clock;
    int failures = 0;
    const auto timed = [&](int index, const std::string& name, auto&& fn) {
        const auto t0 = clock::now();
        const Criterion c = fn();
        const double secs =
            std::chrono::duration<double>(clock::now() - t0).count();
        failures += report(index, name, c, secs);
    };

    timed(1, "ridge-oracle equivalence", ridge_equivalence);
    timed(2, "brute-force objective equivalence", brute_force_equivalence);
    timed(3, "rate-calculator exactness", rate_calculator_exactness);
    timed(4, "target perturbation bound", perturbation_bound);
    {
        const auto t0 = clock::now();
        const auto [comp, var] = inequality_checks();
        const double secs =
            std::chrono::duration<double>(clock::now() - t0).count();
        failures += report(5, "comparison inequality", comp, secs / 2);
        failures += report(6, "variance-expectation bound", var, secs / 2);
    }
    timed(7, "empirical learning rate", empirical_rate);
    timed(8, "sparsity endpoints and D(lambda) bound", sparsity_and_dlambda);
    timed(9, "loss-layer properties", loss_properties);

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures ? 1 : 0;
}

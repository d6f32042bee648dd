#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qtube/loss.hpp"
#include "qtube/models.hpp"
#include "qtube/rng.hpp"
#include "qtube/solver.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace qtube;

namespace {

Dataset random_dataset(int T, std::uint64_t seed) {
    const auto model =
        ConditionalModel::power(1.0, ConditionalModel::default_center(1));
    return sample_dataset(model, Design{1}, T, seed);
}

Eigen::VectorXd ys_vec(const Dataset& ds) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(ds.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = ds.ys[i];
    return y;
}

} // namespace

TEST_CASE("objective values") {
    const Dataset ds = random_dataset(3, 21);
    const auto kernel = KernelSpec::gaussian(0.4);
    const GramMatrix gm = gram(kernel, ds.xs, 0.0);
    const Eigen::VectorXd y = ys_vec(ds);
    const LossSpec spec{1.7, 0.05};
    const double lambda = 0.2;

    // c = 0: objective is the average loss on the raw targets
    double expected = 0.0;
    for (int i = 0; i < 3; ++i) expected += psi_q_eps(-y(i), spec) / 3.0;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
    CHECK(objective(gm, y, zero, spec, lambda) ==
          doctest::Approx(expected).epsilon(1e-14));

    // every target inside the tube: exactly zero
    const LossSpec wide{1.7, 0.6};
    CHECK(objective(gm, y, zero, wide, lambda) == 0.0);

    // random coefficients: matches term-by-term recomputation
    UniformRng rng(4);
    Eigen::VectorXd c(3);
    for (int i = 0; i < 3; ++i) c(i) = rng.next(-1.0, 1.0);
    const Eigen::VectorXd f = gm.entries * c;
    double direct = 0.0;
    for (int i = 0; i < 3; ++i) direct += psi_q_eps(f(i) - y(i), spec) / 3.0;
    direct += lambda * c.dot(gm.entries * c);
    CHECK(objective(gm, y, c, spec, lambda) ==
          doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("q=2 eps=0 matches the ridge closed form") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const Dataset ds = random_dataset(24, seed);
        const auto kernel = KernelSpec::gaussian(0.5);
        const double lambda = 0.1;
        const FitResult fr = fit(ds, kernel, {2.0, 0.0}, lambda);
        const GramMatrix gm = gram(kernel, ds.xs, 1e-10);
        const Eigen::VectorXd ridge = oracles::ridge_coeffs(gm, ys_vec(ds), lambda);
        const double rel = (fr.expansion.coeffs - ridge).cwiseAbs().maxCoeff() /
                           std::max(ridge.cwiseAbs().maxCoeff(), 1e-12);
        CHECK(rel <= 1e-6);
        CHECK(fr.converged);
    }
}

TEST_CASE("wide tube yields the zero solution") {
    const Dataset ds = random_dataset(16, 8);
    double ymax = 0.0;
    for (double y : ds.ys) ymax = std::max(ymax, std::abs(y));
    const FitResult fr = fit(ds, KernelSpec::gaussian(0.4), {1.5, ymax + 0.01}, 0.1);
    CHECK(fr.expansion.coeffs.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fr.objective_trace.back() == 0.0);
    CHECK(fr.support.empty());
}

TEST_CASE("tiny instance matches exhaustive grid search") {
    const Dataset ds = random_dataset(4, 12);
    const auto kernel = KernelSpec::gaussian(0.4);
    const GramMatrix gm = gram(kernel, ds.xs, 0.0);
    const LossSpec spec{1.5, 0.1};
    const double lambda = 0.1;
    const FitResult fr = fit(ds, kernel, spec, lambda);
    const double solver_obj =
        objective(gm, ys_vec(ds), fr.expansion.coeffs, spec, lambda);
    const double oracle_obj =
        oracles::grid_search_objective(gm, ys_vec(ds), spec, lambda);
    CHECK(solver_obj <= oracle_obj + 1e-5);
    CHECK(solver_obj >= oracle_obj - 1e-5);
}

TEST_CASE("projection clamps to [-1, 1]") {
    CHECK(project(1.7) == 1.0);
    CHECK(project(-3.0) == -1.0);
    CHECK(project(0.3) == 0.3);
    Eigen::Vector3d v(1.7, -3.0, 0.3);
    const Eigen::VectorXd p = project(v);
    CHECK(p(0) == 1.0);
    CHECK(p(1) == -1.0);
    CHECK(p(2) == 0.3);
}

TEST_CASE("support set definition") {
    const Dataset ds = random_dataset(32, 5);
    const LossSpec spec{2.0, 0.08};
    const FitResult fr = fit(ds, KernelSpec::gaussian(0.4), spec, 0.05);

    const SupportInfo si = support_set(fr, spec, 1e-7);
    std::vector<int> direct;
    for (int i = 0; i < 32; ++i)
        if (std::abs(fr.residuals(i)) > spec.eps - 1e-7) direct.push_back(i);
    CHECK(si.indices == direct);
    CHECK(si.ratio == doctest::Approx(direct.size() / 32.0).epsilon(1e-15));

    // eps = 0: every index is in the support (residuals exactly zero are
    // excluded only if |r| <= -tol, impossible)
    const FitResult fr0 = fit(ds, KernelSpec::gaussian(0.4), {2.0, 0.0}, 0.05);
    CHECK(support_set(fr0, {2.0, 0.0}, 1e-7).indices.size() == 32);
}

TEST_CASE("optimality certificate at the solution") {
    for (const double q : {1.5, 2.0, 3.0}) {
        const Dataset ds = random_dataset(20, 31);
        const auto kernel = KernelSpec::gaussian(0.5);
        const LossSpec spec{q, 0.05};
        const double lambda = 0.1;
        const FitResult fr = fit(ds, kernel, spec, lambda);
        const GramMatrix gm = gram(kernel, ds.xs, 0.0);
        const double cert = min_norm_subgrad_inf(gm, ys_vec(ds),
                                                 fr.expansion.coeffs, spec, lambda);
        INFO("q = ", q, " certificate = ", cert);
        CHECK(cert <= 1e-6);
        CHECK(fr.converged);
    }
}

TEST_CASE("q = 1 converges with smoothing recorded") {
    const Dataset ds = random_dataset(20, 44);
    const auto kernel = KernelSpec::gaussian(0.5);
    const LossSpec spec{1.0, 0.05};
    const FitResult fr = fit(ds, kernel, spec, 0.1);
    CHECK(fr.smoothing_bias > 0.0);
    const GramMatrix gm = gram(kernel, ds.xs, 0.0);
    const double cert =
        min_norm_subgrad_inf(gm, ys_vec(ds), fr.expansion.coeffs, spec, 0.1,
                             std::max(1e-7, 2 * fr.smoothing_bias));
    CHECK(cert <= 1e-5);
}

TEST_CASE("objective trace is nonincreasing and dominated") {
    const Dataset ds = random_dataset(24, 61);
    const auto kernel = KernelSpec::gaussian(0.5);
    const LossSpec spec{2.0, 0.0};
    const double lambda = 0.1;
    const FitResult fr = fit(ds, kernel, spec, lambda);
    for (std::size_t i = 1; i < fr.objective_trace.size(); ++i)
        CHECK(fr.objective_trace[i] <= fr.objective_trace[i - 1]);

    const GramMatrix gm = gram(kernel, ds.xs, 0.0);
    const Eigen::VectorXd y = ys_vec(ds);
    const double at_zero =
        objective(gm, y, Eigen::VectorXd::Zero(24), spec, lambda);
    const double at_fit = objective(gm, y, fr.expansion.coeffs, spec, lambda);
    CHECK(at_fit <= at_zero);

    const GramMatrix gmj = gram(kernel, ds.xs, 1e-10);
    const Eigen::VectorXd ridge = oracles::ridge_coeffs(gmj, y, lambda);
    CHECK(at_fit <= objective(gm, y, ridge, spec, lambda) + 1e-9);

    // rough norm bound from dropping the loss term
    CHECK(fr.rkhs_norm_sq <= at_zero / lambda + 1e-9);
}

TEST_CASE("regularization path monotonicity") {
    const Dataset ds = random_dataset(24, 77);
    const auto kernel = KernelSpec::gaussian(0.5);
    double prev = std::numeric_limits<double>::infinity();
    for (const double lambda : {0.01, 0.05, 0.2, 1.0}) {
        const FitResult fr = fit(ds, kernel, {1.5, 0.05}, lambda);
        CHECK(fr.rkhs_norm_sq <= prev + 1e-8);
        prev = fr.rkhs_norm_sq;
    }
}

TEST_CASE("analytic gradient matches finite differences for q > 1") {
    const Dataset ds = random_dataset(8, 90);
    const auto kernel = KernelSpec::gaussian(0.5);
    const GramMatrix gm = gram(kernel, ds.xs, 0.0);
    const Eigen::VectorXd y = ys_vec(ds);
    const LossSpec spec{2.5, 0.05};
    const double lambda = 0.1;

    UniformRng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd c(8);
        for (int i = 0; i < 8; ++i) c(i) = rng.next(-0.5, 0.5);
        const Eigen::VectorXd f = gm.entries * c;
        Eigen::VectorXd dpsi(8);
        for (int i = 0; i < 8; ++i) dpsi(i) = psi_q_eps_deriv(f(i) - y(i), spec);
        const Eigen::VectorXd grad =
            gm.entries * dpsi / 8.0 + 2.0 * lambda * gm.entries * c;

        const double h = 1e-6;
        for (int i = 0; i < 8; ++i) {
            Eigen::VectorXd cp = c, cm = c;
            cp(i) += h;
            cm(i) -= h;
            const double fd = (objective(gm, y, cp, spec, lambda) -
                               objective(gm, y, cm, spec, lambda)) /
                              (2 * h);
            const double denom = std::max(std::abs(grad(i)), 1e-4);
            CHECK(std::abs(fd - grad(i)) / denom <= 1e-5);
        }
    }
}

TEST_CASE("warm start reproduces the cold solution") {
    const Dataset ds = random_dataset(16, 3);
    const auto kernel = KernelSpec::gaussian(0.4);
    const LossSpec spec{2.0, 0.05};
    const FitResult cold = fit(ds, kernel, spec, 0.1);
    SolverOptions opts;
    opts.warm_start = cold.expansion.coeffs;
    const FitResult warm = fit(ds, kernel, spec, 0.1, opts);
    CHECK((warm.expansion.coeffs - cold.expansion.coeffs).cwiseAbs().maxCoeff() <=
          1e-6);
}

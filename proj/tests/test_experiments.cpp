#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qtube/experiments.hpp"
#include "qtube/io.hpp"
#include "qtube/rng.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace qtube;

TEST_CASE("log-log slope fitting") {
    std::vector<std::pair<double, double>> pts;
    for (int T : {10, 100, 1000, 10000})
        pts.emplace_back(T, 10.0 * std::pow(T, -0.5));
    auto [slope, se] = fit_loglog_slope(pts);
    CHECK(slope == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(se <= 1e-10);

    pts.clear();
    for (int T : {10, 100, 1000}) pts.emplace_back(T, 3.0);
    std::tie(slope, se) = fit_loglog_slope(pts);
    CHECK(slope == doctest::Approx(0.0).epsilon(1e-12));

    pts.resize(2);
    CHECK_THROWS_AS(fit_loglog_slope(pts), std::invalid_argument);
    pts = {{10, 1.0}, {100, 0.0}, {1000, 1.0}};
    CHECK_THROWS_AS(fit_loglog_slope(pts), std::invalid_argument);
}

TEST_CASE("config validation") {
    ExperimentConfig cfg;
    cfg.T_grid = {64, 32};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.T_grid = {32, 64};
    CHECK_NOTHROW(cfg.validate());
    cfg.model_kind = "cauchy";
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config json round trip keeps inf spelling") {
    ExperimentConfig cfg;
    cfg.T_grid = {16, 32};
    cfg.eta = std::numeric_limits<double>::infinity();
    cfg.r_norm = 2.0;
    cfg.q = 1.5;
    const auto j = config_to_json(cfg);
    CHECK(j.at("eta").get<std::string>() == "inf");
    const ExperimentConfig back = config_from_json(j);
    CHECK(std::isinf(back.eta));
    CHECK(back.q == cfg.q);
    CHECK(back.T_grid == cfg.T_grid);
    CHECK(config_to_json(back) == j);
}

TEST_CASE("rate experiment is deterministic and follows the schedule") {
    ExperimentConfig cfg;
    cfg.T_grid = {16, 32};
    cfg.repeats = 2;
    cfg.q = 2.0;
    cfg.alpha = 2.0 / 3.0;
    cfg.eta = 2.0 / 3.0;
    cfg.seed = 5;
    cfg.n_mc = 2000;

    const RateReport a = run_rate_experiment(cfg);
    const RateReport b = run_rate_experiment(cfg);
    CHECK(rate_report_to_json(a) == rate_report_to_json(b));
    CHECK(rate_report_to_csv(a) == rate_report_to_csv(b));

    REQUIRE(a.rows.size() == 2);
    for (const auto& row : a.rows) {
        // alpha = eta means lambda = eps row by row
        CHECK(row.lambda == doctest::Approx(row.eps).epsilon(1e-15));
        CHECK(row.lambda ==
              doctest::Approx(std::pow(row.T, -cfg.alpha)).epsilon(1e-15));
        CHECK(row.per_repeat.size() == 2);
        CHECK(row.mean_err > 0.0);
    }
    // power phi = 1, q = 2 under the matched schedule: Lambda = 1/6
    CHECK(a.theoretical_lambda == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("eta = inf disables the tube") {
    ExperimentConfig cfg;
    cfg.T_grid = {16};
    cfg.repeats = 1;
    cfg.eta = std::numeric_limits<double>::infinity();
    cfg.n_mc = 500;
    const RateReport r = run_rate_experiment(cfg);
    CHECK(r.rows.at(0).eps == 0.0);
}

TEST_CASE("pipeline error matches an independent ridge pipeline") {
    // q = 2, eps = 0: rebuild the per-repeat error with a direct linear
    // solve and the same Monte-Carlo stream
    ExperimentConfig cfg;
    cfg.T_grid = {32};
    cfg.repeats = 3;
    cfg.q = 2.0;
    cfg.alpha = 0.5;
    cfg.eta = std::numeric_limits<double>::infinity();
    cfg.seed = 11;
    cfg.n_mc = 4000;
    const RateReport report = run_rate_experiment(cfg);

    const ConditionalModel model = make_model(cfg);
    const Design design{cfg.dim};
    const Fn fq = [&](const Point& x) { return model.center_at(x); };
    const int T = cfg.T_grid[0];
    const double lambda = std::pow(static_cast<double>(T), -cfg.alpha);
    for (int rep = 0; rep < cfg.repeats; ++rep) {
        const Dataset ds = sample_dataset(model, design, T, cfg.seed + rep);
        const GramMatrix gm = gram(cfg.kernel, ds.xs, 1e-10);
        Eigen::VectorXd y(T);
        for (int i = 0; i < T; ++i) y(i) = ds.ys[i];
        const Eigen::VectorXd c = oracles::ridge_coeffs(gm, y, lambda);
        KernelExpansion f{ds.xs, c, cfg.kernel};
        const Fn clipped = [&](const Point& x) {
            return project(expansion_eval(f, x));
        };
        const std::uint64_t mc_seed =
            mix_seed(cfg.seed, (static_cast<std::uint64_t>(T) << 20) + rep);
        const double err =
            lr_norm(clipped, fq, cfg.r_norm, design, cfg.n_mc, mc_seed).value;
        CHECK(std::abs(err - report.rows[0].per_repeat[rep]) <= 1e-6);
    }
}

TEST_CASE("sparsity sweep endpoints") {
    const auto model =
        ConditionalModel::power(1.0, ConditionalModel::default_center(1));
    const Dataset ds = sample_dataset(model, Design{1}, 48, 23);
    double ymax = 0.0;
    for (double y : ds.ys) ymax = std::max(ymax, std::abs(y));
    const auto kernel = KernelSpec::gaussian(0.35);
    const std::vector<double> grid = {0.0, 0.05, 0.15, ymax + 0.05};

    const auto rows =
        sparsity_sweep(ds, kernel, 1.5, 0.05, grid, model, 2.0, 2000, 3);
    REQUIRE(rows.size() == 4);

    // eps = 0: support ratio is the fraction of nonzero residuals, which
    // with continuous noise is everything
    CHECK(rows[0].eps == 0.0);
    CHECK(rows[0].sparsity == 1.0);

    // monotone: widening the tube cannot grow the support
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].sparsity <= rows[i - 1].sparsity + 1e-12);

    // eps above every |y|: the zero solution wins, nothing is support.
    // The fit is warm-started from the previous eps, so coefficients reach
    // zero only up to the gradient tolerance.
    CHECK(rows.back().sparsity == 0.0);
    CHECK(rows.back().objective <= 1e-12);
}

#include "qtube/experiments.hpp"

#include "qtube/rng.hpp"

#include <algorithm>
#include <cmath>

namespace qtube {

void ExperimentConfig::validate() const {
    if (model_kind != "power" && model_kind != "gaussian" &&
        model_kind != "uniform")
        throw std::invalid_argument("config: unknown model kind " + model_kind);
    if (dim < 1) throw std::invalid_argument("config: dim must be >= 1");
    if (!(q >= 1.0)) throw std::invalid_argument("config: q must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("config: alpha must be in (0, 1]");
    if (!(eta > 0.0)) throw std::invalid_argument("config: eta must be > 0");
    if (T_grid.empty()) throw std::invalid_argument("config: empty T grid");
    for (std::size_t i = 0; i + 1 < T_grid.size(); ++i)
        if (T_grid[i] >= T_grid[i + 1])
            throw std::invalid_argument("config: T grid must be strictly increasing");
    if (T_grid.front() < 1) throw std::invalid_argument("config: T must be >= 1");
    if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
    if (!(r_norm > 0.0)) throw std::invalid_argument("config: r_norm must be > 0");
    if (n_mc < 1) throw std::invalid_argument("config: n_mc must be >= 1");
    kernel.validate();
}

ConditionalModel make_model(const ExperimentConfig& config) {
    const auto center = ConditionalModel::default_center(config.dim);
    if (config.model_kind == "power")
        return ConditionalModel::power(config.phi, center);
    if (config.model_kind == "gaussian")
        return ConditionalModel::gaussian_truncated(config.sigma, center);
    return ConditionalModel::uniform(config.halfwidth, center);
}

RateReport run_rate_experiment(const ExperimentConfig& config) {
    config.validate();
    const ConditionalModel model = make_model(config);
    const Design design{config.dim};
    const Fn fq = [&](const Point& x) { return model.center_at(x); };

    RateReport report;
    for (int T : config.T_grid) {
        RateRow row;
        row.T = T;
        row.lambda = std::pow(static_cast<double>(T), -config.alpha);
        row.eps = std::isinf(config.eta)
                      ? 0.0
                      : std::pow(static_cast<double>(T), -config.eta);
        const LossSpec spec{config.q, row.eps};
        double sparsity_sum = 0.0;
        for (int rep = 0; rep < config.repeats; ++rep) {
            const Dataset ds = sample_dataset(
                model, design, T, config.seed + static_cast<std::uint64_t>(rep));
            const FitResult fr = fit(ds, config.kernel, spec, row.lambda,
                                     config.solver);
            const Fn clipped = [&](const Point& x) {
                return project(expansion_eval(fr.expansion, x));
            };
            const std::uint64_t mc_seed = mix_seed(
                config.seed, (static_cast<std::uint64_t>(T) << 20) + rep);
            row.per_repeat.push_back(
                lr_norm(clipped, fq, config.r_norm, design, config.n_mc, mc_seed)
                    .value);
            sparsity_sum +=
                support_set(fr, spec, config.solver.support_tol).ratio;
        }
        double sum = 0.0;
        for (double e : row.per_repeat) sum += e;
        row.mean_err = sum / config.repeats;
        double var = 0.0;
        for (double e : row.per_repeat) var += (e - row.mean_err) * (e - row.mean_err);
        row.std_err = config.repeats > 1 ? std::sqrt(var / (config.repeats - 1)) : 0.0;
        row.sparsity = sparsity_sum / config.repeats;
        report.rows.push_back(std::move(row));
    }

    if (report.rows.size() >= 3) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : report.rows)
            pts.emplace_back(static_cast<double>(r.T), r.mean_err);
        const auto [slope, se] = fit_loglog_slope(pts);
        report.fitted_slope = slope;
        report.slope_stderr = se;
    }

    const NoiseType nt = noise_type(model);
    RateParams rp;
    rp.q = config.q;
    rp.w = nt.w;
    rp.p = nt.p;
    rp.alpha = config.alpha;
    rp.eta = config.eta;
    rp.beta = config.beta;
    rp.k = config.k;
    rp.xi = config.xi;
    const RateExponent re = rate_exponent(rp);
    report.theoretical_lambda = re.lambda_exp;
    report.constraint_ok = re.constraint_ok;
    return report;
}

std::pair<double, double> fit_loglog_slope(
    const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_loglog_slope: need at least 3 points");
    const int n = static_cast<int>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [T, err] : points) {
        if (!(err > 0.0))
            throw std::invalid_argument("fit_loglog_slope: errors must be positive");
        const double lx = std::log(T), ly = std::log(err);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    double rss = 0.0;
    for (const auto& [T, err] : points) {
        const double resid = std::log(err) - intercept - slope * std::log(T);
        rss += resid * resid;
    }
    const double se = n > 2 ? std::sqrt(rss / (n - 2) / (sxx - sx * sx / n)) : 0.0;
    return {slope, se};
}

std::vector<SparsityRow> sparsity_sweep(const Dataset& dataset,
                                        const KernelSpec& kernel, double q,
                                        double lambda,
                                        std::vector<double> eps_grid,
                                        const ConditionalModel& model,
                                        double r_norm, int n_mc,
                                        std::uint64_t seed) {
    if (eps_grid.empty()) throw std::invalid_argument("sparsity_sweep: empty grid");
    std::sort(eps_grid.begin(), eps_grid.end());
    const int dim = static_cast<int>(dataset.xs.front().size());
    const Design design{dim};
    const Fn fq = [&](const Point& x) { return model.center_at(x); };
    const GramMatrix gm = gram(kernel, dataset.xs, 0.0);
    Eigen::VectorXd ys(static_cast<Eigen::Index>(dataset.size()));
    for (Eigen::Index i = 0; i < ys.size(); ++i) ys(i) = dataset.ys[i];

    std::vector<SparsityRow> rows;
    SolverOptions opts;
    for (double eps : eps_grid) {
        const LossSpec spec{q, eps};
        const FitResult fr = fit(dataset, kernel, spec, lambda, opts);
        opts.warm_start = fr.expansion.coeffs; // warm start the next eps
        SparsityRow row;
        row.eps = eps;
        row.sparsity = support_set(fr, spec, opts.support_tol).ratio;
        row.objective = objective(gm, ys, fr.expansion.coeffs, spec, lambda);
        const Fn clipped = [&](const Point& x) {
            return project(expansion_eval(fr.expansion, x));
        };
        row.lr_error = lr_norm(clipped, fq, r_norm, design, n_mc, seed).value;
        rows.push_back(row);
    }
    return rows;
}

} // namespace qtube

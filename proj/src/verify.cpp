#include "qtube/verify.hpp"

#include "qtube/analysis.hpp"
#include "qtube/loss.hpp"
#include "qtube/models.hpp"
#include "qtube/quadrature.hpp"
#include "qtube/rng.hpp"

#include <cmath>
#include <sstream>

namespace qtube {

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

CheckResult make_check(const std::string& name, bool pass,
                       const std::string& detail = "") {
    return {name, pass, detail};
}

std::vector<ConditionalModel> standard_models() {
    return {
        ConditionalModel::power(1.0, ConditionalModel::default_center(1)),
        ConditionalModel::gaussian_truncated(0.1,
                                             ConditionalModel::default_center(1)),
        ConditionalModel::uniform(0.25, ConditionalModel::default_center(1)),
    };
}

// random clipped expansion used by the comparison / variance checks
KernelExpansion random_expansion(UniformRng& rng, int dim) {
    KernelExpansion f;
    f.kernel = KernelSpec::gaussian(0.3);
    const int m = 5;
    f.coeffs.resize(m);
    for (int i = 0; i < m; ++i) {
        Point p(dim);
        for (int d = 0; d < dim; ++d) p(d) = rng.next();
        f.centers.push_back(p);
        f.coeffs(i) = rng.next(-1.0, 1.0);
    }
    return f;
}

} // namespace

std::vector<CheckResult> verify_loss(std::uint64_t seed) {
    std::vector<CheckResult> out;
    UniformRng rng(seed);
    const int n = 10000;

    int sandwich_bad = 0, convex_bad = 0, subgrad_bad = 0, sym_bad = 0,
        mono_bad = 0;
    for (int i = 0; i < n; ++i) {
        const double q = rng.next(1.0, 3.0);
        const double eps = rng.next(0.0, 0.5);
        const LossSpec with{q, eps}, without{q, 0.0};
        const double u = rng.next(-2.0, 2.0);

        const double lo = psi_q_eps(u, with);
        const double mid = psi_q_eps(u, without);
        const double hi = lo + q * std::pow(std::abs(u), q - 1.0) * eps;
        if (!(lo <= mid + 1e-12 && mid <= hi + 1e-12)) ++sandwich_bad;

        const double u2 = rng.next(-2.0, 2.0);
        const double t = rng.next();
        const double lhs = psi_q_eps(t * u + (1 - t) * u2, with);
        const double rhs = t * psi_q_eps(u, with) + (1 - t) * psi_q_eps(u2, with);
        if (!(lhs <= rhs + 1e-12)) ++convex_bad;

        const auto [glo, ghi] = psi_q_eps_subgrad(u, with);
        const double v = rng.next(-2.0, 2.0);
        const double base = psi_q_eps(u, with);
        const double pv = psi_q_eps(v, with);
        if (!(pv >= base + glo * (v - u) - 1e-10) ||
            !(pv >= base + ghi * (v - u) - 1e-10))
            ++subgrad_bad;

        if (psi_q_eps(u, with) != psi_q_eps(-u, with)) ++sym_bad;

        const double eps2 = rng.next(0.0, 0.5);
        const LossSpec small{q, std::min(eps, eps2)}, big{q, std::max(eps, eps2)};
        if (!(psi_q_eps(u, small) >= psi_q_eps(u, big))) ++mono_bad;
    }
    out.push_back(make_check("loss.sandwich", sandwich_bad == 0,
                             num(sandwich_bad) + " violations"));
    out.push_back(make_check("loss.convexity", convex_bad == 0,
                             num(convex_bad) + " violations"));
    out.push_back(make_check("loss.subgradient", subgrad_bad == 0,
                             num(subgrad_bad) + " violations"));
    out.push_back(make_check("loss.symmetry", sym_bad == 0,
                             num(sym_bad) + " violations"));
    out.push_back(make_check("loss.eps_monotone", mono_bad == 0,
                             num(mono_bad) + " violations"));
    return out;
}

std::vector<CheckResult> verify_models(std::uint64_t seed) {
    std::vector<CheckResult> out;
    UniformRng rng(seed);

    // density normalization
    {
        double worst = 0.0;
        for (const auto& model : standard_models()) {
            for (int i = 0; i < 5; ++i) {
                Point x(1);
                x(0) = rng.next();
                const double c = model.center_at(x);
                const double s = model.support_halfwidth();
                const double mass = integrate_split(
                    [&](double y) { return model.density(x, y); }, c - s, c + s,
                    {c}, 1e-10);
                worst = std::max(worst, std::abs(mass - 1.0));
            }
        }
        out.push_back(make_check("models.density_normalized", worst <= 1e-8,
                                 "max |mass-1| = " + num(worst)));
    }

    // noise-type certificate (both sides)
    {
        double worst = -1e9;
        for (const auto& model : standard_models()) {
            const NoiseType nt = noise_type(model);
            for (int i = 0; i < 50; ++i) {
                Point x(1);
                x(0) = rng.next();
                const double c = model.center_at(x);
                const double sh = model.support_halfwidth();
                const double s = rng.next() * nt.a;
                const double bound = nt.b * std::pow(s, nt.w);
                const double up = integrate_split(
                    [&](double y) { return model.density(x, y); }, c,
                    std::min(c + s, c + sh), {}, 1e-11);
                const double down = integrate_split(
                    [&](double y) { return model.density(x, y); },
                    std::max(c - s, c - sh), c, {}, 1e-11);
                worst = std::max({worst, bound - up, bound - down});
            }
        }
        out.push_back(make_check("models.noise_type", worst <= 1e-8,
                                 "max bound excess = " + num(worst)));
    }

    // perturbation |f_q^eps - f_q| <= eps
    {
        double worst = -1e9;
        const double eps_grid[] = {0.01, 0.05, 0.1, 0.25, 0.5};
        for (const auto& model : standard_models()) {
            for (int i = 0; i < 20; ++i) {
                Point x(1);
                x(0) = rng.next();
                const double t0 = target(model, x, LossSpec{1.5, 0.0});
                for (double eps : eps_grid) {
                    const double te = target(model, x, LossSpec{1.5, eps});
                    worst = std::max(worst, std::abs(te - t0) - eps);
                }
            }
        }
        out.push_back(make_check("models.perturbation", worst <= 1e-7,
                                 "max |f_q^eps - f_q| - eps = " + num(worst)));
    }

    // uniqueness: sublevel set of the conditional risk is a single cell.
    // Needs noise that the tube cannot swallow, so eps stays below the
    // support halfwidth; the full-width uniform model exercises eps = 1/2.
    {
        bool ok = true;
        const int grid = 10000;
        const double step = 1.0 / grid;
        auto models = standard_models();
        models.push_back(ConditionalModel::uniform(0.5, 0.0));
        for (const auto& model : models) {
            const double sh = model.support_halfwidth();
            for (const double eps : {0.1, 0.5 * sh, 0.8 * sh}) {
                Point x(1);
                x(0) = rng.next();
                const LossSpec spec{1.5, eps};
                double best = 1e300;
                std::vector<double> risks(grid + 1);
                for (int gi = 0; gi <= grid; ++gi) {
                    const double t = -0.5 + gi * step;
                    risks[gi] = conditional_risk(model, x, t, spec);
                    best = std::min(best, risks[gi]);
                }
                double lo = 1.0, hi = -1.0;
                for (int gi = 0; gi <= grid; ++gi) {
                    if (risks[gi] <= best + 1e-9) {
                        const double t = -0.5 + gi * step;
                        lo = std::min(lo, t);
                        hi = std::max(hi, t);
                    }
                }
                if (hi - lo > 2.0 * step) ok = false;
            }
        }
        out.push_back(make_check("models.uniqueness", ok));
    }

    // first-order balance at the minimizer (q > 1)
    {
        double worst = 0.0;
        for (const auto& model : standard_models()) {
            for (const double eps : {0.0, 0.1}) {
                Point x(1);
                x(0) = rng.next();
                const LossSpec spec{2.0, eps};
                const double t = target(model, x, spec);
                const double c = model.center_at(x);
                const double sh = model.support_halfwidth();
                const double up = integrate_split(
                    [&](double y) {
                        return std::pow(std::max(y - t - eps, 0.0), spec.q - 1.0) *
                               model.density(x, y);
                    },
                    c - sh, c + sh, {t + eps, c}, 1e-11);
                const double down = integrate_split(
                    [&](double y) {
                        return std::pow(std::max(t - eps - y, 0.0), spec.q - 1.0) *
                               model.density(x, y);
                    },
                    c - sh, c + sh, {t - eps, c}, 1e-11);
                worst = std::max(worst, std::abs(up - down));
            }
        }
        out.push_back(make_check("models.first_order_balance", worst <= 1e-7,
                                 "max imbalance = " + num(worst)));
    }

    return out;
}

std::vector<CheckResult> verify_analysis(int n_mc, std::uint64_t seed) {
    std::vector<CheckResult> out;
    UniformRng rng(seed);
    const Design design{1};
    const double q = 2.0;
    const LossSpec spec{q, 0.0};

    const std::vector<ConditionalModel> models = {
        ConditionalModel::power(1.0, ConditionalModel::default_center(1)),
        ConditionalModel::uniform(0.25, ConditionalModel::default_center(1)),
    };

    double comp_worst = -1e9, var_worst = -1e9;
    for (const auto& model : models) {
        const NoiseType nt = noise_type(model);
        const double C_r = comparison_constant(q, nt.w, nt.p, nt.bound_norm);
        const auto [theta, r] = theta_r(q, nt.w, nt.p);
        const double sup_fq = center_sup(model, 1);
        const double C_th = variance_constant(C_r, r, sup_fq);
        const Fn fq = [&](const Point& x) { return model.center_at(x); };

        for (int i = 0; i < 25; ++i) {
            const KernelExpansion raw = random_expansion(rng, 1);
            const Fn f = [&](const Point& x) {
                return std::clamp(expansion_eval(raw, x), -1.0, 1.0);
            };
            const std::uint64_t s1 = mix_seed(seed, 1000 + i);
            const McEstimate ex = excess_risk(f, fq, model, design, spec, n_mc, s1);
            const double excess = std::max(ex.value, 0.0);

            // comparison inequality in L^r
            const McEstimate dist = lr_norm(f, fq, r, design, n_mc, s1 + 1);
            const double pw = 1.0 / (q + nt.w);
            const double rhs = C_r * std::pow(excess, pw);
            const double rhs_se =
                excess > 0.0 ? C_r * pw * std::pow(excess, pw - 1.0) * ex.std_error
                             : 0.0;
            comp_worst = std::max(
                comp_worst, dist.value - rhs - 5.0 * (dist.std_error + rhs_se));

            // variance-expectation bound, MC over (x, y) pairs
            UniformRng yrng(mix_seed(seed, 2000 + i));
            double s2sum = 0.0, s2sq = 0.0;
            Point x(1);
            for (int j = 0; j < n_mc; ++j) {
                x(0) = yrng.next();
                const double y = model.sample_y(x, yrng.next());
                const double g = psi_q_eps(f(x) - y, spec) -
                                 psi_q_eps(fq(x) - y, spec);
                s2sum += g * g;
                s2sq += g * g * g * g;
            }
            const double m2 = s2sum / n_mc;
            const double m2_se = std::sqrt(
                std::max(0.0, (s2sq / n_mc - m2 * m2) / (n_mc - 1)));
            const double vrhs = C_th * std::pow(excess, theta);
            const double vrhs_se =
                excess > 0.0
                    ? C_th * theta * std::pow(excess, theta - 1.0) * ex.std_error
                    : 0.0;
            var_worst =
                std::max(var_worst, m2 - vrhs - 5.0 * (m2_se + vrhs_se));
        }
    }
    out.push_back(make_check("analysis.comparison_inequality", comp_worst <= 0.0,
                             "max slack excess = " + num(comp_worst)));
    out.push_back(make_check("analysis.variance_bound", var_worst <= 0.0,
                             "max slack excess = " + num(var_worst)));

    // excess-risk transfer through the eps-insensitive losses
    {
        double worst = -1e9;
        const ConditionalModel& model = models[0];
        const Fn fq = [&](const Point& x) { return model.center_at(x); };
        const int n_small = std::min(n_mc, 2000);
        for (int i = 0; i < 3; ++i) {
            const KernelExpansion raw = random_expansion(rng, 1);
            const Fn f = [&](const Point& x) {
                return std::clamp(expansion_eval(raw, x), -1.0, 1.0);
            };
            double sup_f = 0.0;
            for (int g = 0; g <= 200; ++g) {
                Point x(1);
                x(0) = g / 200.0;
                sup_f = std::max(sup_f, std::abs(f(x)));
            }
            for (const double eps : {0.05, 0.2}) {
                const LossSpec eps_spec{q, eps};
                const Fn fq_eps = [&](const Point& x) {
                    return target(model, x, eps_spec);
                };
                const std::uint64_t s = mix_seed(seed, 3000 + i * 7 + (eps > 0.1));
                const McEstimate lhs =
                    excess_risk(f, fq, model, design, spec, n_small, s);
                const McEstimate rhs_mc =
                    excess_risk(f, fq_eps, model, design, eps_spec, n_small, s);
                const double rhs = rhs_mc.value +
                                   q * (std::pow(sup_f, q - 1.0) + 1.0) * eps;
                worst = std::max(worst, lhs.value - rhs -
                                            5.0 * (lhs.std_error + rhs_mc.std_error));
            }
        }
        out.push_back(make_check("analysis.excess_transfer", worst <= 1e-7,
                                 "max slack excess = " + num(worst)));
    }

    return out;
}

std::vector<CheckResult> verify_all(int n_mc, std::uint64_t seed) {
    std::vector<CheckResult> out = verify_loss(seed);
    for (auto& c : verify_models(seed)) out.push_back(std::move(c));
    for (auto& c : verify_analysis(n_mc, seed)) out.push_back(std::move(c));
    return out;
}

} // namespace qtube

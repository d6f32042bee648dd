#include "qtube/analysis.hpp"

#include "qtube/quadrature.hpp"
#include "qtube/rng.hpp"
#include "qtube/solver.hpp"

#include <atomic>
#include <cmath>
#include <future>

namespace qtube {

namespace {

std::atomic<int> g_threads{1};

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kChunk = 8192;

// Chunked, deterministic Monte-Carlo mean over x ~ U[0,1]^dim.
// fn(x) gives the per-sample value; chunk seeds are derived from (seed,
// chunk index) so the result does not depend on the thread count.
template <class PerSample>
McEstimate mc_mean(int n, int dim, std::uint64_t seed, const PerSample& fn) {
    if (n < 1) throw std::invalid_argument("mc: n must be >= 1");
    const int n_chunks = (n + kChunk - 1) / kChunk;
    struct Partial {
        double sum = 0.0, sumsq = 0.0;
    };
    std::vector<Partial> parts(n_chunks);

    const auto run_chunk = [&](int ci) {
        const int begin = ci * kChunk;
        const int count = std::min(kChunk, n - begin);
        UniformRng rng(mix_seed(seed, static_cast<std::uint64_t>(ci)));
        Point x(dim);
        Partial p;
        for (int i = 0; i < count; ++i) {
            for (int d = 0; d < dim; ++d) x(d) = rng.next();
            const double v = fn(x);
            p.sum += v;
            p.sumsq += v * v;
        }
        parts[ci] = p;
    };

    const int nt = std::min(threads(), n_chunks);
    if (nt <= 1) {
        for (int ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
    } else {
        std::atomic<int> next{0};
        std::vector<std::future<void>> workers;
        for (int t = 0; t < nt; ++t)
            workers.push_back(std::async(std::launch::async, [&] {
                int ci;
                while ((ci = next.fetch_add(1)) < n_chunks) run_chunk(ci);
            }));
        for (auto& w : workers) w.get();
    }

    double sum = 0.0, sumsq = 0.0;
    for (const auto& p : parts) {
        sum += p.sum;
        sumsq += p.sumsq;
    }
    McEstimate est;
    est.value = sum / n;
    if (n > 1) {
        const double var = std::max(0.0, (sumsq - n * est.value * est.value) /
                                             (n - 1));
        est.std_error = std::sqrt(var / n);
    }
    return est;
}

double radical_inverse(int base, int i) {
    double inv = 1.0 / base, f = inv, v = 0.0;
    while (i > 0) {
        v += f * (i % base);
        i /= base;
        f *= inv;
    }
    return v;
}

// C'_{q,x}(t) for q > 1 by quadrature (derivative of the conditional risk)
double cond_risk_deriv(const ConditionalModel& model, const Point& x, double t,
                       double q) {
    const double c = model.center_at(x);
    const double s = model.support_halfwidth();
    const auto integrand = [&](double y) {
        const double d = t - y;
        const double mag = std::pow(std::abs(d), q - 1.0);
        return q * (d >= 0.0 ? mag : -mag) * model.density(x, y);
    };
    return integrate_split(integrand, c - s, c + s, {t, c}, 1e-11);
}

} // namespace

void set_threads(int n) { g_threads = std::max(1, n); }
int threads() { return g_threads; }

McEstimate generalization_error(const Fn& f, const ConditionalModel& model,
                                const Design& design, const LossSpec& spec,
                                int n_mc, std::uint64_t seed) {
    design.validate();
    spec.validate();
    return mc_mean(n_mc, design.dim, seed, [&](const Point& x) {
        return conditional_risk(model, x, f(x), spec);
    });
}

McEstimate excess_risk(const Fn& f, const Fn& g, const ConditionalModel& model,
                       const Design& design, const LossSpec& spec, int n_mc,
                       std::uint64_t seed) {
    design.validate();
    spec.validate();
    return mc_mean(n_mc, design.dim, seed, [&](const Point& x) {
        return conditional_risk(model, x, f(x), spec) -
               conditional_risk(model, x, g(x), spec);
    });
}

McEstimate lr_norm(const Fn& f, const Fn& g, double r, const Design& design,
                   int n_mc, std::uint64_t seed) {
    design.validate();
    if (!(r > 0.0)) throw std::invalid_argument("lr_norm: r must be > 0");
    if (std::isinf(r)) {
        // essential sup over the evaluation grid
        double best = 0.0;
        UniformRng rng(seed);
        Point x(design.dim);
        for (int i = 0; i < n_mc; ++i) {
            for (int d = 0; d < design.dim; ++d) x(d) = rng.next();
            best = std::max(best, std::abs(f(x) - g(x)));
        }
        return {best, 0.0};
    }
    const McEstimate m = mc_mean(n_mc, design.dim, seed, [&](const Point& x) {
        return std::pow(std::abs(f(x) - g(x)), r);
    });
    McEstimate est;
    est.value = std::pow(m.value, 1.0 / r);
    // delta method for the 1/r power
    est.std_error = m.value > 0.0
                        ? (1.0 / r) * std::pow(m.value, 1.0 / r - 1.0) * m.std_error
                        : m.std_error;
    return est;
}

double comparison_constant(double q, double w, double p, double bound_norm) {
    if (!(q >= 1.0) || !(w > 0.0) || !(bound_norm > 0.0))
        throw std::invalid_argument("comparison_constant: invalid arguments");
    (void)p; // enters only through bound_norm
    const double e = 1.0 / (q + w);
    return std::pow(2.0, (q - 1.0) * e) * std::pow(q, -e) *
           std::pow(q + w, e) * std::pow(bound_norm, e);
}

double variance_constant(double C_r, double r, double sup_fq) {
    if (!(C_r > 0.0) || !(r > 0.0) || !(sup_fq >= 0.0))
        throw std::invalid_argument("variance_constant: invalid arguments");
    // convention x^0 = 1, so sup_fq = 0 at r = 2 contributes 1
    const double sup_pow = (r == 2.0) ? 1.0 : std::pow(sup_fq, 2.0 - r);
    return C_r * C_r + std::pow(2.0, 2.0 - r) * (1.0 + sup_pow) * std::pow(C_r, r);
}

std::pair<double, double> theta_r(double q, double w, double p) {
    if (!(q >= 1.0) || !(w > 0.0) || !(p > 0.0))
        throw std::invalid_argument("theta_r: invalid arguments");
    const double frac = std::isinf(p) ? 1.0 : p / (p + 1.0);
    const double theta = std::min(2.0 / (q + w), frac);
    const double r = frac * (q + w);
    return {theta, r};
}

void RateParams::validate() const {
    if (!(q >= 1.0)) throw std::invalid_argument("RateParams: q must be >= 1");
    if (!(w > 0.0)) throw std::invalid_argument("RateParams: w must be > 0");
    if (!(p > 0.0)) throw std::invalid_argument("RateParams: p must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("RateParams: alpha must be in (0, 1]");
    if (!(eta > 0.0)) throw std::invalid_argument("RateParams: eta must be > 0");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("RateParams: beta must be in (0, 1]");
    if (!(k >= 0.0)) throw std::invalid_argument("RateParams: k must be >= 0");
    if (!(xi > 0.0)) throw std::invalid_argument("RateParams: xi must be > 0");
}

RateExponent rate_exponent(const RateParams& params) {
    params.validate();
    const auto [theta, r] = theta_r(params.q, params.w, params.p);
    const double q = params.q, w = params.w, al = params.alpha,
                 eta = params.eta, be = params.beta, k = params.k,
                 xi = params.xi;

    const double vartheta = std::max(
        {0.5 * (al - eta), 0.5 * al * (1.0 - be),
         0.5 * al + 0.25 * q * (1.0 - be) * al - 0.5,
         0.5 * al - 0.5 / (2.0 - theta),
         (al * (2.0 + k - theta) - 1.0) * (1.0 + k) /
                 ((2.0 + k - theta) * (2.0 + k)) +
             xi});

    const double lambda_exp =
        (1.0 / (q + w)) *
        std::min({eta, al * be, 1.0 - 0.5 * q * (1.0 - be) * al,
                  1.0 / (2.0 - theta),
                  1.0 / (2.0 + k - theta) - k / (1.0 + k) * vartheta});

    RateExponent out;
    out.theta = theta;
    out.r = r;
    out.vartheta = vartheta;
    out.lambda_exp = lambda_exp;
    out.constraint_ok =
        k == 0.0 || vartheta < (1.0 + k) / (k * (2.0 + k - theta));
    return out;
}

DlambdaReport estimate_Dlambda(const KernelSpec& kernel,
                               const ConditionalModel& model,
                               const Design& design, double q,
                               const std::vector<double>& lambda_grid,
                               int n_quad) {
    design.validate();
    if (lambda_grid.empty())
        throw std::invalid_argument("estimate_Dlambda: empty lambda grid");
    if (!(q >= 1.0)) throw std::invalid_argument("estimate_Dlambda: q must be >= 1");
    if (n_quad < 2) throw std::invalid_argument("estimate_Dlambda: n_quad too small");

    // quadrature design: midpoints in 1-D, Halton points otherwise
    Points xs;
    xs.reserve(n_quad);
    static const int bases[3] = {2, 3, 5};
    for (int j = 0; j < n_quad; ++j) {
        Point x(design.dim);
        if (design.dim == 1)
            x(0) = (j + 0.5) / n_quad;
        else
            for (int d = 0; d < design.dim; ++d)
                x(d) = radical_inverse(bases[d], j + 1);
        xs.push_back(x);
    }

    const Eigen::MatrixXd G = gram(kernel, xs, 0.0).entries;
    const double inv_n = 1.0 / n_quad;
    std::vector<double> centers(n_quad), base_risk(n_quad);
    const LossSpec spec{q, 0.0}; // D(lambda) is defined with eps = 0
    for (int j = 0; j < n_quad; ++j) {
        centers[j] = model.center_at(xs[j]);
        base_risk[j] = q == 2.0 ? 0.0 : conditional_risk(model, xs[j], centers[j], spec);
    }

    // per-point excess conditional risk and its t-derivative; for q = 2 the
    // exact identity C(t) - C(center) = (t - center)^2 avoids quadrature
    const auto loss = [&](int j, double v) {
        if (q == 2.0) {
            const double d = v - centers[j];
            return inv_n * d * d;
        }
        return inv_n * (conditional_risk(model, xs[j], v, spec) - base_risk[j]);
    };
    const auto dloss = [&](int j, double v) {
        if (q == 2.0) return inv_n * 2.0 * (v - centers[j]);
        return inv_n * cond_risk_deriv(model, xs[j], v, q);
    };

    DlambdaReport report;
    for (double lambda : lambda_grid) {
        if (!(lambda > 0.0))
            throw std::invalid_argument("estimate_Dlambda: lambda must be > 0");
        const GenericFitResult r =
            minimize_representer(G, loss, dloss, lambda, 2000, 1e-10);
        report.points.push_back({lambda, r.objective, r.converged});
    }

    // least-squares fit of log dhat against log lambda (positive points only)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& p : report.points) {
        if (p.dhat <= 0.0) continue;
        const double lx = std::log(p.lambda), ly = std::log(p.dhat);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m >= 2 && std::abs(m * sxx - sx * sx) > 1e-12) {
        report.beta_hat = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        report.d0_hat = std::exp((sy - report.beta_hat * sx) / m);
    } else {
        report.beta_hat = std::numeric_limits<double>::quiet_NaN();
        report.d0_hat = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

} // namespace qtube

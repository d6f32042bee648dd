#include "qtube/models.hpp"

#include "qtube/quadrature.hpp"
#include "qtube/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qtube {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double clamp(double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

} // namespace

ConditionalModel ConditionalModel::power(double phi, Center center) {
    if (!(phi > 0.0)) throw std::invalid_argument("power model: phi must be > 0");
    ConditionalModel m;
    m.kind_ = ModelKind::power;
    m.phi_ = phi;
    m.center_ = std::move(center);
    return m;
}

ConditionalModel ConditionalModel::gaussian_truncated(double sigma, Center center) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("gaussian model: sigma must be > 0");
    ConditionalModel m;
    m.kind_ = ModelKind::gaussian_truncated;
    m.sigma_ = sigma;
    m.center_ = std::move(center);
    return m;
}

ConditionalModel ConditionalModel::uniform(double halfwidth, Center center) {
    if (!(halfwidth > 0.0 && halfwidth <= 0.5))
        throw std::invalid_argument("uniform model: halfwidth must be in (0, 1/2]");
    ConditionalModel m;
    m.kind_ = ModelKind::uniform;
    m.halfwidth_ = halfwidth;
    m.center_ = std::move(center);
    return m;
}

KernelExpansion ConditionalModel::default_center(int dim) {
    if (dim < 1) throw std::invalid_argument("default_center: dim must be >= 1");
    KernelExpansion f;
    f.kernel = KernelSpec::gaussian(0.35);
    const double anchors[3] = {0.2, 0.5, 0.8};
    const double raw[3] = {1.0, -0.7, 0.5};
    double abs_sum = 0.0;
    for (double c : raw) abs_sum += std::abs(c);
    f.coeffs.resize(3);
    for (int i = 0; i < 3; ++i) {
        f.centers.push_back(Point::Constant(dim, anchors[i]));
        f.coeffs(i) = 0.25 * raw[i] / abs_sum;
    }
    return f;
}

std::string ConditionalModel::tag() const {
    std::ostringstream os;
    switch (kind_) {
        case ModelKind::power: os << "power(phi=" << phi_ << ")"; break;
        case ModelKind::gaussian_truncated: os << "gaussian(sigma=" << sigma_ << ")"; break;
        case ModelKind::uniform: os << "uniform(halfwidth=" << halfwidth_ << ")"; break;
    }
    return os.str();
}

double ConditionalModel::center_at(const Point& x) const {
    double v;
    if (std::holds_alternative<double>(center_))
        v = std::get<double>(center_);
    else
        v = expansion_eval(std::get<KernelExpansion>(center_), x);
    // keep supp(rho_x) inside [-1/2, 1/2]
    double bound = 0.25;
    if (kind_ == ModelKind::uniform) bound = std::min(0.25, 0.5 - halfwidth_);
    return clamp(v, -bound, bound);
}

double ConditionalModel::support_halfwidth() const {
    return kind_ == ModelKind::uniform ? halfwidth_ : 0.25;
}

double ConditionalModel::truncation_mass() const {
    if (kind_ != ModelKind::gaussian_truncated) return 1.0;
    return 2.0 * std_normal_cdf(0.25 / sigma_) - 1.0;
}

double ConditionalModel::density(const Point& x, double y) const {
    const double c = center_at(x);
    const double d = y - c;
    const double s = support_halfwidth();
    if (std::abs(d) > s) return 0.0;
    switch (kind_) {
        case ModelKind::power: {
            const double A = std::pow(2.0, 2.0 * phi_ + 1.0) * (phi_ + 1.0);
            return A * std::pow(std::abs(d), phi_);
        }
        case ModelKind::gaussian_truncated: {
            const double z = truncation_mass();
            const double g = std::exp(-d * d / (2.0 * sigma_ * sigma_)) /
                             (std::sqrt(2.0 * M_PI) * sigma_);
            return g / z;
        }
        case ModelKind::uniform:
            return 0.5 / halfwidth_;
    }
    return 0.0;
}

double conditional_density(const ConditionalModel& model, const Point& x,
                           double y) {
    return model.density(x, y);
}

double ConditionalModel::sample_y(const Point& x, double u) const {
    const double c = center_at(x);
    switch (kind_) {
        case ModelKind::power: {
            // CDF offset from center: sign(d) * 2^{2 phi + 1} |d|^{phi+1}
            const double v = u - 0.5;
            const double scale = std::pow(2.0, 2.0 * phi_ + 1.0);
            const double mag = std::pow(std::abs(v) / scale, 1.0 / (phi_ + 1.0));
            return c + (v >= 0.0 ? mag : -mag);
        }
        case ModelKind::uniform:
            return c + (2.0 * u - 1.0) * halfwidth_;
        case ModelKind::gaussian_truncated: {
            // numeric CDF inversion by bisection to 1e-12
            const double z = truncation_mass();
            const double lo_cdf = std_normal_cdf(-0.25 / sigma_);
            const double want = lo_cdf + u * z;
            double lo = -0.25, hi = 0.25;
            while (hi - lo > 1e-12) {
                const double mid = 0.5 * (lo + hi);
                if (std_normal_cdf(mid / sigma_) < want)
                    lo = mid;
                else
                    hi = mid;
            }
            return c + 0.5 * (lo + hi);
        }
    }
    return c;
}

Dataset sample_dataset(const ConditionalModel& model, const Design& design,
                       int T, std::uint64_t seed) {
    design.validate();
    if (T < 1) throw std::invalid_argument("sample_dataset: T must be >= 1");
    Dataset ds;
    ds.seed = seed;
    ds.model_tag = model.tag();
    ds.xs.reserve(T);
    ds.ys.reserve(T);
    UniformRng rng(seed);
    for (int i = 0; i < T; ++i) {
        Point x(design.dim);
        for (int d = 0; d < design.dim; ++d) x(d) = rng.next();
        ds.xs.push_back(x);
        ds.ys.push_back(model.sample_y(x, rng.next()));
    }
    return ds;
}

double conditional_risk(const ConditionalModel& model, const Point& x,
                        double t, const LossSpec& spec) {
    spec.validate();
    const double c = model.center_at(x);
    const double s = model.support_halfwidth();
    const double lo = c - s, hi = c + s;
    // split at the tube boundaries and at the density kink
    std::vector<double> breaks{t - spec.eps, t + spec.eps, c};
    const auto integrand = [&](double y) {
        return psi_q_eps(y - t, spec) * model.density(x, y);
    };
    return integrate_split(integrand, lo, hi, std::move(breaks), 1e-10);
}

double target(const ConditionalModel& model, const Point& x,
              const LossSpec& spec) {
    spec.validate();
    if (spec.eps > 0.5)
        throw std::invalid_argument("target: eps must lie in [0, 1/2]");
    const auto risk = [&](double t) { return conditional_risk(model, x, t, spec); };
    return golden_section_min(risk, -0.5, 0.5, 1e-9);
}

NoiseType noise_type(const ConditionalModel& model) {
    NoiseType nt;
    nt.p = kInf;
    switch (model.kind()) {
        case ModelKind::power:
            nt.w = model.phi() + 1.0;
            nt.a = 0.25;
            nt.b = std::pow(2.0, 2.0 * model.phi() + 1.0);
            break;
        case ModelKind::gaussian_truncated:
            // untruncated constants; still valid lower bounds after the
            // symmetric truncation since the renormalization only raises
            // the density
            nt.w = 1.0;
            nt.a = model.sigma();
            nt.b = std::exp(-0.5) / (std::sqrt(2.0 * M_PI) * model.sigma());
            break;
        case ModelKind::uniform:
            nt.w = 1.0;
            nt.a = model.halfwidth();
            nt.b = 0.5 / model.halfwidth();
            break;
    }
    nt.bound_norm = 1.0 / (nt.b * std::pow(nt.a, nt.w));
    return nt;
}

double center_sup(const ConditionalModel& model, int dim, int grid) {
    if (dim < 1 || dim > 3)
        throw std::invalid_argument("center_sup: dim must be in {1,2,3}");
    const int g = dim == 1 ? grid : (dim == 2 ? 201 : 41);
    double best = 0.0;
    Point x(dim);
    std::vector<int> idx(dim, 0);
    const auto step = [&](int d) { return static_cast<double>(idx[d]) / (g - 1); };
    while (true) {
        for (int d = 0; d < dim; ++d) x(d) = step(d);
        best = std::max(best, std::abs(model.center_at(x)));
        int d = 0;
        while (d < dim && ++idx[d] == g) idx[d++] = 0;
        if (d == dim) break;
    }
    return best;
}

} // namespace qtube

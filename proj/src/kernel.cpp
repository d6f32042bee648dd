#include "qtube/kernel.hpp"

#include <cmath>

namespace qtube {

void KernelSpec::validate() const {
    switch (kind) {
        case KernelKind::gaussian:
            if (!(bandwidth > 0.0))
                throw std::invalid_argument("gaussian kernel: bandwidth must be > 0");
            break;
        case KernelKind::polynomial:
            if (degree < 1)
                throw std::invalid_argument("polynomial kernel: degree must be >= 1");
            if (!(offset >= 0.0))
                throw std::invalid_argument("polynomial kernel: offset must be >= 0");
            break;
        case KernelKind::linear:
            break;
    }
}

double kernel_eval(const KernelSpec& spec, const Point& x, const Point& x2) {
    if (x.size() != x2.size())
        throw std::invalid_argument("kernel_eval: dimension mismatch");
    spec.validate();
    switch (spec.kind) {
        case KernelKind::gaussian: {
            const double d2 = (x - x2).squaredNorm();
            return std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
        }
        case KernelKind::polynomial: {
            const double base = x.dot(x2) + spec.offset;
            return std::pow(base, spec.degree);
        }
        case KernelKind::linear:
            return x.dot(x2);
    }
    return 0.0;
}

GramMatrix gram(const KernelSpec& spec, const Points& xs, double jitter) {
    if (!(jitter >= 0.0)) throw std::invalid_argument("gram: jitter must be >= 0");
    const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
    GramMatrix g;
    g.jitter = jitter;
    g.entries.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel_eval(spec, xs[i], xs[j]);
            g.entries(i, j) = v;
            g.entries(j, i) = v;
        }
        g.entries(i, i) += jitter;
    }
    return g;
}

double expansion_eval(const KernelExpansion& f, const Point& x) {
    if (static_cast<Eigen::Index>(f.centers.size()) != f.coeffs.size())
        throw std::invalid_argument("expansion: centers/coeffs length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < f.centers.size(); ++i)
        sum += f.coeffs(static_cast<Eigen::Index>(i)) *
               kernel_eval(f.kernel, f.centers[i], x);
    return sum;
}

double KernelExpansion::operator()(const Point& x) const {
    return expansion_eval(*this, x);
}

double rkhs_norm_sq(const KernelExpansion& f) {
    if (f.centers.empty()) return 0.0;
    const GramMatrix g = gram(f.kernel, f.centers, 0.0);
    const double v = f.coeffs.dot(g.entries * f.coeffs);
    return v < 0.0 ? 0.0 : v;
}

} // namespace qtube

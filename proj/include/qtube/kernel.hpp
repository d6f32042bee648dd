#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtube {

using Point = Eigen::VectorXd;
using Points = std::vector<Point>;

enum class KernelKind { gaussian, polynomial, linear };

/// Mercer kernel descriptor. All kinds are symmetric and PSD on any
/// finite point set.
struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    double bandwidth = 1.0; // gaussian
    int degree = 2;         // polynomial
    double offset = 1.0;    // polynomial

    static KernelSpec gaussian(double bandwidth) {
        KernelSpec s;
        s.kind = KernelKind::gaussian;
        s.bandwidth = bandwidth;
        return s;
    }
    static KernelSpec polynomial(int degree, double offset) {
        KernelSpec s;
        s.kind = KernelKind::polynomial;
        s.degree = degree;
        s.offset = offset;
        return s;
    }
    static KernelSpec linear() {
        KernelSpec s;
        s.kind = KernelKind::linear;
        return s;
    }

    void validate() const;
};

/// An RKHS element f = sum_i c_i K(center_i, .)
struct KernelExpansion {
    Points centers;
    Eigen::VectorXd coeffs;
    KernelSpec kernel;

    double operator()(const Point& x) const;
};

struct GramMatrix {
    Eigen::MatrixXd entries;
    double jitter = 0.0;
};

double kernel_eval(const KernelSpec& spec, const Point& x, const Point& x2);

/// Gram matrix of X with `jitter` added to the diagonal.
GramMatrix gram(const KernelSpec& spec, const Points& xs, double jitter = 0.0);

double expansion_eval(const KernelExpansion& f, const Point& x);

/// c^T G c with G the jitter-free Gram of the centers, clamped at 0.
double rkhs_norm_sq(const KernelExpansion& f);

} // namespace qtube

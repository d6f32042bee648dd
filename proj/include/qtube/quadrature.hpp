#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace qtube {

// Adaptive Gauss-Kronrod (G7/K15) integrator over a single interval.
// Subdivides until the Kronrod error estimate meets the absolute tolerance.
namespace detail {

// abscissae / G7 weights / K15 weights on [0,1] half-interval
inline constexpr double gk_nodes[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529}};

template <class Func>
void gk15(const Func& f, double a, double b, double& value, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double y0 = f(c);
    double g7 = gk_nodes[0][1] * y0;
    double k15 = gk_nodes[0][2] * y0;
    for (int i = 1; i < 8; ++i) {
        const double dx = h * gk_nodes[i][0];
        const double yi = f(c + dx) + f(c - dx);
        g7 += gk_nodes[i][1] * yi;
        k15 += gk_nodes[i][2] * yi;
    }
    value = k15 * h;
    err = std::abs((k15 - g7) * h);
}

} // namespace detail

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Integrate f over [a, b] to absolute tolerance `abs_tol`.
/// Throws QuadratureError if the interval stack is exhausted without
/// convergence (pathological integrand).
template <class Func>
double integrate(const Func& f, double a, double b, double abs_tol = 1e-10,
                 int max_intervals = 4000) {
    if (!(a <= b)) std::swap(a, b);
    if (a == b) return 0.0;

    struct Panel {
        double a, b, value, err;
    };
    std::vector<Panel> panels;
    Panel p0{a, b, 0, 0};
    detail::gk15(f, a, b, p0.value, p0.err);
    panels.push_back(p0);

    double total_err = p0.err;
    while (total_err > abs_tol) {
        if (static_cast<int>(panels.size()) >= max_intervals)
            throw QuadratureError("adaptive quadrature failed to converge");
        // split the worst panel
        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].err > panels[worst].err) worst = i;
        Panel old = panels[worst];
        const double mid = 0.5 * (old.a + old.b);
        Panel left{old.a, mid, 0, 0}, right{mid, old.b, 0, 0};
        detail::gk15(f, left.a, left.b, left.value, left.err);
        detail::gk15(f, right.a, right.b, right.value, right.err);
        panels[worst] = left;
        panels.push_back(right);
        total_err += left.err + right.err - old.err;
    }
    double sum = 0.0;
    for (const auto& p : panels) sum += p.value;
    return sum;
}

/// Integrate over [a, b] splitting first at the given interior breakpoints
/// (kinks of the integrand). Breakpoints outside (a, b) are ignored.
template <class Func>
double integrate_split(const Func& f, double a, double b,
                       std::vector<double> breaks, double abs_tol = 1e-10) {
    if (a > b) std::swap(a, b);
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double sum = 0.0;
    int pieces = 0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double lo = std::max(breaks[i], a);
        double hi = std::min(breaks[i + 1], b);
        if (hi > lo) ++pieces;
    }
    if (pieces == 0) return 0.0;
    const double piece_tol = abs_tol / pieces;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double lo = std::max(breaks[i], a);
        double hi = std::min(breaks[i + 1], b);
        if (hi > lo) sum += integrate(f, lo, hi, piece_tol);
    }
    return sum;
}

/// Golden-section minimization of a convex function on [lo, hi].
template <class Func>
double golden_section_min(const Func& f, double lo, double hi,
                          double x_tol = 1e-9) {
    constexpr double inv_phi = 0.6180339887498948482;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > x_tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

} // namespace qtube

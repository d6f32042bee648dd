#include "qtube/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qtube {

namespace {

// Pointwise loss machinery on residuals r = (Gc)_i - y_i, with optional
// Moreau-style smoothing for q = 1 (parameter mu).
struct PointLoss {
    LossSpec spec;
    double mu = 0.0;

    double value(double r) const {
        if (mu <= 0.0) return psi_q_eps(r, spec);
        const double t = std::max(std::abs(r) - spec.eps, 0.0);
        return t <= mu ? t * t / (2.0 * mu) : t - 0.5 * mu;
    }

    double deriv(double r) const {
        if (mu <= 0.0) return psi_q_eps_deriv(r, spec);
        const double t = std::abs(r) - spec.eps;
        if (t <= 0.0) return 0.0;
        const double sgn = r > 0.0 ? 1.0 : -1.0;
        return std::min(t, mu) / mu * sgn;
    }

    double hess(double r) const {
        const double t = std::abs(r) - spec.eps;
        if (t <= 0.0) return 0.0;
        if (mu > 0.0) return t < mu ? 1.0 / mu : 0.0;
        if (spec.q == 2.0) return 2.0;
        if (spec.q == 1.0) return 0.0;
        const double h = spec.q * (spec.q - 1.0) * std::pow(t, spec.q - 2.0);
        return std::min(h, 1e10); // curvature cap near the tube boundary
    }
};

struct Objective {
    const Eigen::MatrixXd& G;
    const Eigen::VectorXd& y;
    PointLoss loss;
    double lambda;
    double inv_T;

    // value from coefficients c and cached v = G c
    double value(const Eigen::VectorXd& c, const Eigen::VectorXd& v) const {
        double s = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) s += loss.value(v(i) - y(i));
        return inv_T * s + lambda * c.dot(v);
    }

    // loss derivative vector at v
    Eigen::VectorXd dvec(const Eigen::VectorXd& v) const {
        Eigen::VectorXd d(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) d(i) = loss.deriv(v(i) - y(i));
        return d;
    }

    // gradient = (1/T) G d + 2 lambda v, given d = dvec(v)
    Eigen::VectorXd grad(const Eigen::VectorXd& v, const Eigen::VectorXd& d) const {
        return inv_T * (G * d) + 2.0 * lambda * v;
    }
};

} // namespace

double objective(const GramMatrix& gram, const Eigen::VectorXd& ys,
                 const Eigen::VectorXd& coeffs, const LossSpec& spec,
                 double lambda) {
    spec.validate();
    if (!(lambda > 0.0)) throw std::invalid_argument("objective: lambda must be > 0");
    if (gram.entries.rows() != ys.size() || coeffs.size() != ys.size())
        throw std::invalid_argument("objective: dimension mismatch");
    const Eigen::VectorXd v = gram.entries * coeffs;
    double s = 0.0;
    for (Eigen::Index i = 0; i < ys.size(); ++i)
        s += psi_q_eps(v(i) - ys(i), spec);
    return s / static_cast<double>(ys.size()) + lambda * coeffs.dot(v);
}

Eigen::VectorXd project(const Eigen::VectorXd& values) {
    return values.cwiseMax(-1.0).cwiseMin(1.0);
}

double project(double value) { return std::clamp(value, -1.0, 1.0); }

SupportInfo support_set(const FitResult& result, const LossSpec& spec,
                        double support_tol) {
    SupportInfo info;
    const Eigen::Index T = result.residuals.size();
    for (Eigen::Index i = 0; i < T; ++i)
        if (std::abs(result.residuals(i)) > spec.eps - support_tol)
            info.indices.push_back(static_cast<int>(i));
    info.ratio = T > 0 ? static_cast<double>(info.indices.size()) / T : 0.0;
    return info;
}

double min_norm_subgrad_inf(const GramMatrix& gram, const Eigen::VectorXd& ys,
                            const Eigen::VectorXd& coeffs, const LossSpec& spec,
                            double lambda, double boundary_band) {
    const Eigen::Index T = ys.size();
    const double inv_T = 1.0 / static_cast<double>(T);
    const Eigen::VectorXd v = gram.entries * coeffs;
    Eigen::VectorXd lo(T), hi(T), s(T);
    for (Eigen::Index i = 0; i < T; ++i) {
        const double r = v(i) - ys(i);
        const double t = std::abs(r) - spec.eps;
        if (t > boundary_band) {
            lo(i) = hi(i) = psi_q_eps_deriv(r, spec);
        } else if (t < -boundary_band) {
            lo(i) = hi(i) = 0.0;
        } else {
            // boundary band: relax to the interval spanned by the two
            // one-sided derivatives
            const double outer = psi_q_eps_deriv(
                (r >= 0.0 ? 1.0 : -1.0) * (spec.eps + std::max(t, 0.0)) +
                    (r >= 0.0 ? boundary_band : -boundary_band),
                spec);
            lo(i) = std::min(0.0, outer);
            hi(i) = std::max(0.0, outer);
            if (spec.q == 1.0 && spec.eps == 0.0 && std::abs(r) <= boundary_band) {
                lo(i) = -1.0;
                hi(i) = 1.0;
            }
        }
        s(i) = 0.5 * (lo(i) + hi(i));
    }
    const Eigen::VectorXd base = 2.0 * lambda * v;
    // projected gradient on || (1/T) G s + base ||^2 over the box [lo, hi]
    double L = inv_T * inv_T * gram.entries.squaredNorm();
    if (L <= 0.0) L = 1.0;
    const double step = 1.0 / (2.0 * L);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 500; ++it) {
        const Eigen::VectorXd res = inv_T * (gram.entries * s) + base;
        const double h = res.squaredNorm();
        if (h < 1e-30 || prev - h < 1e-16 * (1.0 + h)) break;
        prev = h;
        s -= step * (2.0 * inv_T) * (gram.entries * res);
        s = s.cwiseMax(lo).cwiseMin(hi);
    }
    return (inv_T * (gram.entries * s) + base).lpNorm<Eigen::Infinity>();
}

FitResult fit(const Dataset& dataset, const KernelSpec& kernel,
              const LossSpec& spec, double lambda, const SolverOptions& opts) {
    spec.validate();
    opts.validate();
    if (!(lambda > 0.0)) throw std::invalid_argument("fit: lambda must be > 0");
    const Eigen::Index T = static_cast<Eigen::Index>(dataset.size());
    if (T < 1) throw std::invalid_argument("fit: empty dataset");

    const GramMatrix gm = gram(kernel, dataset.xs, 0.0); // iterative path: no jitter
    const Eigen::MatrixXd& G = gm.entries;
    Eigen::VectorXd y(T);
    for (Eigen::Index i = 0; i < T; ++i) y(i) = dataset.ys[i];

    const double mu = spec.q == 1.0 ? opts.q1_smoothing : 0.0;
    Objective F{G, y, PointLoss{spec, mu}, lambda, 1.0 / static_cast<double>(T)};
    Objective Fexact{G, y, PointLoss{spec, 0.0}, lambda, 1.0 / static_cast<double>(T)};

    Eigen::VectorXd x = opts.warm_start ? *opts.warm_start
                                        : Eigen::VectorXd::Zero(T);
    if (x.size() != T) throw std::invalid_argument("fit: warm start size mismatch");
    Eigen::VectorXd v_x = G * x;
    double f_x = F.value(x, v_x);
    if (!std::isfinite(f_x)) throw std::runtime_error("fit: non-finite objective");

    Eigen::VectorXd best_c = x, best_v = v_x;
    double best_exact = Fexact.value(x, v_x);

    FitResult result;
    result.objective_trace.push_back(best_exact);

    Eigen::VectorXd x_prev = x, v_prev = v_x;
    double tk = 1.0;
    double L = 1.0;
    int iter = 0;
    bool converged = false;
    double stall_ref = f_x;
    int stall_count = 0;
    int polish_countdown = 40;

    const auto grad_inf_at = [&](const Eigen::VectorXd& v) {
        return F.grad(v, F.dvec(v)).lpNorm<Eigen::Infinity>();
    };

    const auto try_newton = [&]() -> bool {
        if (!opts.newton_polish) return false;
        // The gradient factors as G u with u = (1/T) psi' + 2 lambda c and
        // Jacobian du/dc = B = (1/T) diag(psi'') G + 2 lambda I. Solving
        // B dir = -u instead of the full Hessian system cancels the shared
        // (often nearly singular) Gram factor: B is invertible with
        // eigenvalues bounded away from zero by 2 lambda.
        Eigen::VectorXd d(T);
        for (Eigen::Index i = 0; i < T; ++i) d(i) = F.loss.hess(v_x(i) - y(i));
        const Eigen::MatrixXd B =
            F.inv_T * (d.asDiagonal() * G).eval() +
            2.0 * lambda * Eigen::MatrixXd::Identity(T, T);
        const Eigen::VectorXd u = F.inv_T * F.dvec(v_x) + 2.0 * lambda * x;
        Eigen::VectorXd dir = -Eigen::PartialPivLU<Eigen::MatrixXd>(B).solve(u);
        if (!dir.allFinite()) return false;
        const Eigen::VectorXd v_dir = G * dir;
        double t = 1.0;
        for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
            Eigen::VectorXd cand = x + t * dir;
            Eigen::VectorXd v_cand = v_x + t * v_dir;
            const double f_cand = F.value(cand, v_cand);
            if (std::isfinite(f_cand) && f_cand < f_x) {
                x = std::move(cand);
                v_x = std::move(v_cand);
                f_x = f_cand;
                x_prev = x;
                v_prev = v_x;
                tk = 1.0;
                return true;
            }
        }
        return false;
    };

    for (; iter < opts.max_iters; ++iter) {
        const double tk_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        const double beta = (tk - 1.0) / tk_next;
        Eigen::VectorXd yk = x + beta * (x - x_prev);
        Eigen::VectorXd v_yk = v_x + beta * (v_x - v_prev);

        const Eigen::VectorXd dk = F.dvec(v_yk);
        const Eigen::VectorXd gk = F.grad(v_yk, dk);
        const double f_yk = F.value(yk, v_yk);
        if (!std::isfinite(f_yk)) throw std::runtime_error("fit: non-finite objective");

        const Eigen::VectorXd Gg = G * gk;
        const double g2 = gk.squaredNorm();
        L *= 0.7;
        Eigen::VectorXd z, v_z;
        double f_z;
        for (int bt = 0; bt < 60; ++bt) {
            z = yk - gk / L;
            v_z = v_yk - Gg / L;
            f_z = F.value(z, v_z);
            if (f_z <= f_yk - 0.5 * g2 / L + 1e-15 * (1.0 + std::abs(f_yk))) break;
            L *= 2.0;
        }

        x_prev = x;
        v_prev = v_x;
        if (f_z <= f_x) {
            x = z;
            v_x = v_z;
            f_x = f_z;
            tk = tk_next;
        } else {
            tk = 1.0; // momentum restart, keep current iterate
        }

        const double exact = mu > 0.0 ? Fexact.value(x, v_x) : f_x;
        if (exact < best_exact) {
            best_exact = exact;
            best_c = x;
            best_v = v_x;
        }
        result.objective_trace.push_back(best_exact);

        if ((iter % 5) == 0 || iter + 1 == opts.max_iters) {
            if (grad_inf_at(v_x) <= opts.grad_tol) {
                converged = true;
                ++iter;
                break;
            }
        }

        // stall detection on the (smoothed) objective
        if (stall_ref - f_x <= opts.obj_tol * (1.0 + std::abs(stall_ref)))
            ++stall_count;
        else
            stall_count = 0;
        stall_ref = f_x;

        if (--polish_countdown <= 0 || stall_count >= 10) {
            polish_countdown = 40;
            const bool improved = try_newton();
            if (improved) {
                const double exact2 = mu > 0.0 ? Fexact.value(x, v_x) : f_x;
                if (exact2 < best_exact) {
                    best_exact = exact2;
                    best_c = x;
                    best_v = v_x;
                }
                result.objective_trace.push_back(best_exact);
                if (grad_inf_at(v_x) <= opts.grad_tol) {
                    converged = true;
                    ++iter;
                    break;
                }
                stall_count = 0;
            } else if (stall_count >= 10) {
                ++iter;
                break; // no further progress available
            }
        }
    }

    result.expansion.centers = dataset.xs;
    result.expansion.coeffs = best_c;
    result.expansion.kernel = kernel;
    result.residuals = best_v - y;
    result.iterations = iter;
    result.smoothing_bias = mu;
    result.rkhs_norm_sq = std::max(0.0, best_c.dot(best_v));
    result.support = support_set(result, spec, opts.support_tol).indices;

    if (mu > 0.0) {
        // smoothing bias: certify against the unsmoothed subdifferential
        const double band = std::max(opts.support_tol, 2.0 * mu);
        converged = min_norm_subgrad_inf(gm, y, best_c, spec, lambda, band) <=
                    std::max(opts.grad_tol, 2.0 * mu);
    }
    result.converged = converged;

    result.kappa = 0.0;
    for (const auto& p : dataset.xs)
        result.kappa = std::max(result.kappa, std::sqrt(kernel_eval(kernel, p, p)));
    return result;
}

GenericFitResult minimize_representer(
    const Eigen::MatrixXd& G, const std::function<double(int, double)>& loss,
    const std::function<double(int, double)>& dloss, double lambda,
    int max_iters, double grad_tol) {
    const Eigen::Index n = G.rows();
    const auto value = [&](const Eigen::VectorXd& c, const Eigen::VectorXd& v) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) s += loss(static_cast<int>(j), v(j));
        return s + lambda * c.dot(v);
    };
    const auto gradient = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd d(n);
        for (Eigen::Index j = 0; j < n; ++j) d(j) = dloss(static_cast<int>(j), v(j));
        return Eigen::VectorXd(G * d + 2.0 * lambda * v);
    };

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n), v_x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd x_prev = x, v_prev = v_x;
    double f_x = value(x, v_x);
    double tk = 1.0, L = 1.0;
    GenericFitResult out;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        const double tk_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        const double beta = (tk - 1.0) / tk_next;
        Eigen::VectorXd yk = x + beta * (x - x_prev);
        Eigen::VectorXd v_yk = v_x + beta * (v_x - v_prev);
        const Eigen::VectorXd gk = gradient(v_yk);
        const double f_yk = value(yk, v_yk);
        const Eigen::VectorXd Gg = G * gk;
        const double g2 = gk.squaredNorm();
        L *= 0.7;
        Eigen::VectorXd z, v_z;
        double f_z;
        for (int bt = 0; bt < 60; ++bt) {
            z = yk - gk / L;
            v_z = v_yk - Gg / L;
            f_z = value(z, v_z);
            if (f_z <= f_yk - 0.5 * g2 / L + 1e-15 * (1.0 + std::abs(f_yk))) break;
            L *= 2.0;
        }
        x_prev = x;
        v_prev = v_x;
        if (f_z <= f_x) {
            x = z;
            v_x = v_z;
            f_x = f_z;
            tk = tk_next;
        } else {
            tk = 1.0;
        }
        if ((iter % 5) == 0 &&
            gradient(v_x).lpNorm<Eigen::Infinity>() <= grad_tol) {
            out.converged = true;
            ++iter;
            break;
        }
    }
    out.coeffs = x;
    out.objective = f_x;
    out.iterations = iter;
    return out;
}

} // namespace qtube

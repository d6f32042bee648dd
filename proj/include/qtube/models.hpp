#pragma once

#include "qtube/kernel.hpp"
#include "qtube/loss.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace qtube {

enum class ModelKind { power, gaussian_truncated, uniform };

/// Noise descriptor per the p-average type condition: conditional mass
/// within s of the target is at least b * s^w on both sides, for s in (0, a].
/// p = infinity is encoded as std::numeric_limits<double>::infinity().
struct NoiseType {
    double p;
    double w;
    double a;
    double b;
    double bound_norm; // || (b a^w)^{-1} ||_{L^p}
};

/// Uniform input design on [0,1]^dim.
struct Design {
    int dim = 1;

    void validate() const {
        if (dim < 1) throw std::invalid_argument("Design: dim must be >= 1");
    }
};

struct Dataset {
    Points xs;
    std::vector<double> ys;
    std::uint64_t seed = 0;
    std::string model_tag;

    std::size_t size() const { return ys.size(); }
};

/// Synthetic conditional distribution family {rho_x}. Each rho_x is
/// symmetric about the center function and supported inside [-1/2, 1/2],
/// so the population target f_q coincides with the (clamped) center for
/// every q >= 1.
class ConditionalModel {
  public:
    // center is either a constant or a kernel expansion; it is clamped at
    // evaluation time so the support assumption holds
    using Center = std::variant<double, KernelExpansion>;

    static ConditionalModel power(double phi, Center center);
    static ConditionalModel gaussian_truncated(double sigma, Center center);
    static ConditionalModel uniform(double halfwidth, Center center);

    /// Fixed 3-term Gaussian expansion with |f*| <= 1/4 by construction
    /// (coefficients scaled so sum |c_i| = 1/4), so f_q lies in H_K.
    static KernelExpansion default_center(int dim);

    ModelKind kind() const { return kind_; }
    double phi() const { return phi_; }
    double sigma() const { return sigma_; }
    double halfwidth() const { return halfwidth_; }
    std::string tag() const;

    /// Conditional center u_x = f_q(x), clamped so supp(rho_x) fits in
    /// [-1/2, 1/2].
    double center_at(const Point& x) const;

    /// Half-width of supp(rho_x) around the center (1/4 for power and
    /// truncated gaussian, halfwidth for uniform).
    double support_halfwidth() const;

    /// Mass kept by the symmetric truncation (1 except for the gaussian
    /// kind); diagnostic only.
    double truncation_mass() const;

    /// Inverse-CDF draw from rho_x given a uniform variate u in [0,1).
    double sample_y(const Point& x, double u) const;

    double density(const Point& x, double y) const;

  private:
    ModelKind kind_;
    double phi_ = 1.0;
    double sigma_ = 0.1;
    double halfwidth_ = 0.25;
    Center center_;
};

double conditional_density(const ConditionalModel& model, const Point& x,
                           double y);

Dataset sample_dataset(const ConditionalModel& model, const Design& design,
                       int T, std::uint64_t seed);

/// C^eps_{q,x}(t) = integral of psi_q^eps(y - t) against rho_x, by adaptive
/// quadrature (absolute tolerance 1e-10).
double conditional_risk(const ConditionalModel& model, const Point& x,
                        double t, const LossSpec& spec);

/// Minimizer of the conditional risk over t in [-1/2, 1/2] (golden-section
/// on the convex objective, tolerance 1e-9). Realizes f_q (eps = 0) and
/// f_q^eps (eps > 0).
double target(const ConditionalModel& model, const Point& x,
              const LossSpec& spec);

NoiseType noise_type(const ConditionalModel& model);

/// max |f_q| over a regular grid on [0,1]^dim (dim <= 3), used for the
/// variance-bound constant.
double center_sup(const ConditionalModel& model, int dim, int grid = 2001);

} // namespace qtube

#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "rhosel/errors.hpp"

namespace rhosel {

// Support of the dominating measure the family's densities are taken against.
enum class BaseMeasure { LebesgueReal, LebesguePositive, CountingNat, CountingBinary };

// One-parameter exponential family with density r_theta(y) = exp(theta*T(y) - A(theta))
// against nu = a * mu. A must be finite and strictly convex on the open natural
// domain (theta_lo, theta_hi); endpoints may be +-infinity.
struct ExponentialFamily {
  std::string name;
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  BaseMeasure base = BaseMeasure::LebesgueReal;

  std::function<double(double)> log_partition;          // A(theta)
  std::function<double(double)> log_partition_d;        // A'(theta) = E_theta T
  std::function<double(double)> log_partition_dd;       // A''(theta), > 0 on the domain
  std::function<double(double)> suff_stat;              // T(y)
  std::function<double(double)> log_base_density;       // log a(y); -inf off support
  std::function<bool(double)> in_support;               // support of the base measure
  std::function<double(double)> mean_to_natural;        // inverse of A'; empty = numeric
  // Seeded draw of one observation at natural parameter theta.
  std::function<double(double, std::uint64_t)> draw;

  bool in_natural_domain(double theta) const { return theta > theta_lo && theta < theta_hi; }
};

enum class ParamKind { Natural, Mean, VarianceStabilized, Custom };

// Strictly monotone map u from the user parameter interval I = [lo, hi] into the
// natural domain, with its inverse. kappa is the Lipschitz constant of
// gamma -> h(R_gamma, .); 0 means unknown, 1 for the variance-stabilized map.
struct Parametrization {
  double lo = 0.0;
  double hi = 0.0;
  ParamKind kind = ParamKind::Natural;
  double kappa = 0.0;
  std::function<double(double)> to_natural;    // u
  std::function<double(double)> from_natural;  // u^{-1} on u(I)

  bool contains(double gamma) const { return gamma >= lo && gamma <= hi; }
};

// A family together with a parametrization: the evaluation context for
// candidate functions gamma(w).
struct LawContext {
  ExponentialFamily family;
  Parametrization param;
};

// A single conditional law R_gamma.
struct ConditionalLaw {
  ExponentialFamily family;
  Parametrization param;
  double gamma = 0.0;
};

// ---- built-in families ----------------------------------------------------

ExponentialFamily gaussian_family(double sigma);   // known sigma, T(y)=y
ExponentialFamily poisson_family();
ExponentialFamily bernoulli_family();
ExponentialFamily exponential_family();            // rate lambda = -theta, y > 0

// Parse "gaussian(sigma=1.5)" | "poisson" | "bernoulli" | "exponential".
ExponentialFamily family_from_id(const std::string& id);

// ---- parametrizations -----------------------------------------------------

Parametrization natural_parametrization(const ExponentialFamily& fam, double lo, double hi);
// Mean parametrization: gamma is the expectation of T(y).
Parametrization mean_parametrization(const ExponentialFamily& fam, double lo, double hi);

// Variance-stabilizing parametrization gamma = v(theta) with v'(theta) =
// sqrt(A''(theta)/8) and v(anchor) = 0, over [theta_lo, theta_hi] inside the
// natural domain. Closed forms for the Gaussian/Poisson/Bernoulli built-ins;
// adaptive quadrature (abs tol 1e-10) plus monotone root-finding otherwise.
// kappa = 1: h(R_gamma, R_gamma') <= |gamma - gamma'|.
Parametrization variance_stabilize(const ExponentialFamily& fam, double anchor,
                                   double theta_lo, double theta_hi);

// Build the parametrization named by a config id: "natural" | "mean" | "vst".
Parametrization parametrization_from_id(const ExponentialFamily& fam, const std::string& id,
                                        double lo, double hi);

// ---- operations -------------------------------------------------------------

// log r_gamma(y) = u(gamma) T(y) - A(u(gamma)), the log density against nu.
// The base part log a(y) is exposed separately via fam.log_base_density.
double log_density(const ConditionalLaw& law, double y);
double log_density(const LawContext& ctx, double gamma, double y);

// Hellinger distance between natural parameters: h^2 = 1 - exp(A(mid) - (A1+A2)/2).
double hellinger(const ExponentialFamily& fam, double theta1, double theta2);
double hellinger_sq(const ExponentialFamily& fam, double theta1, double theta2);
// Same distance through a parametrization (maps to natural coordinates first).
double hellinger_gamma(const LawContext& ctx, double gamma1, double gamma2);
double hellinger_sq_gamma(const LawContext& ctx, double gamma1, double gamma2);

// One seeded draw from R_gamma. Deterministic given the seed.
double sample(const ConditionalLaw& law, std::uint64_t seed);

}  // namespace rhosel

#include "rhosel/expfam.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace rhosel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double softplus(double x) {
  // log(1 + e^x) without overflow on either side.
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

std::mt19937_64 seeded_engine(std::uint64_t seed) {
  // splitmix64 scramble so consecutive seeds give unrelated streams.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

}  // namespace

ExponentialFamily gaussian_family(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw config_error("gaussian: sigma must be positive");
  ExponentialFamily f;
  f.name = "gaussian";
  f.theta_lo = -kInf;
  f.theta_hi = kInf;
  f.base = BaseMeasure::LebesgueReal;
  const double s2 = sigma * sigma;
  f.log_partition = [s2](double t) { return 0.5 * t * t * s2; };
  f.log_partition_d = [s2](double t) { return t * s2; };
  f.log_partition_dd = [s2](double) { return s2; };
  f.suff_stat = [](double y) { return y; };
  const double norm = -0.5 * std::log(2.0 * 3.14159265358979323846 * s2);
  f.log_base_density = [norm, s2](double y) { return norm - 0.5 * y * y / s2; };
  f.in_support = [](double y) { return std::isfinite(y); };
  f.mean_to_natural = [s2](double m) { return m / s2; };
  f.draw = [sigma, s2](double theta, std::uint64_t seed) {
    auto eng = seeded_engine(seed);
    std::normal_distribution<double> dist(theta * s2, sigma);
    return dist(eng);
  };
  return f;
}

ExponentialFamily poisson_family() {
  ExponentialFamily f;
  f.name = "poisson";
  f.theta_lo = -kInf;
  f.theta_hi = kInf;
  f.base = BaseMeasure::CountingNat;
  f.log_partition = [](double t) { return std::exp(t); };
  f.log_partition_d = [](double t) { return std::exp(t); };
  f.log_partition_dd = [](double t) { return std::exp(t); };
  f.suff_stat = [](double y) { return y; };
  f.log_base_density = [](double y) { return -std::lgamma(y + 1.0); };
  f.in_support = [](double y) { return y >= 0.0 && y == std::floor(y); };
  f.mean_to_natural = [](double m) { return std::log(m); };
  f.draw = [](double theta, std::uint64_t seed) {
    auto eng = seeded_engine(seed);
    std::poisson_distribution<long> dist(std::exp(theta));
    return static_cast<double>(dist(eng));
  };
  return f;
}

ExponentialFamily bernoulli_family() {
  ExponentialFamily f;
  f.name = "bernoulli";
  f.theta_lo = -kInf;
  f.theta_hi = kInf;
  f.base = BaseMeasure::CountingBinary;
  f.log_partition = [](double t) { return softplus(t); };
  f.log_partition_d = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
  f.log_partition_dd = [](double t) {
    const double p = 1.0 / (1.0 + std::exp(-t));
    return p * (1.0 - p);
  };
  f.suff_stat = [](double y) { return y; };
  f.log_base_density = [](double) { return 0.0; };
  f.in_support = [](double y) { return y == 0.0 || y == 1.0; };
  f.mean_to_natural = [](double m) { return std::log(m) - std::log1p(-m); };
  f.draw = [](double theta, std::uint64_t seed) {
    auto eng = seeded_engine(seed);
    std::bernoulli_distribution dist(1.0 / (1.0 + std::exp(-theta)));
    return dist(eng) ? 1.0 : 0.0;
  };
  return f;
}

ExponentialFamily exponential_family() {
  ExponentialFamily f;
  f.name = "exponential";
  f.theta_lo = -kInf;
  f.theta_hi = 0.0;
  f.base = BaseMeasure::LebesguePositive;
  f.log_partition = [](double t) { return -std::log(-t); };
  f.log_partition_d = [](double t) { return -1.0 / t; };
  f.log_partition_dd = [](double t) { return 1.0 / (t * t); };
  f.suff_stat = [](double y) { return y; };
  f.log_base_density = [](double) { return 0.0; };
  f.in_support = [](double y) { return y > 0.0; };
  f.mean_to_natural = [](double m) { return -1.0 / m; };
  f.draw = [](double theta, std::uint64_t seed) {
    auto eng = seeded_engine(seed);
    std::exponential_distribution<double> dist(-theta);
    return dist(eng);
  };
  return f;
}

ExponentialFamily family_from_id(const std::string& id) {
  if (id == "poisson") return poisson_family();
  if (id == "bernoulli") return bernoulli_family();
  if (id == "exponential") return exponential_family();
  if (id.rfind("gaussian", 0) == 0) {
    const auto lp = id.find('('), rp = id.rfind(')');
    if (lp == std::string::npos || rp == std::string::npos || rp < lp)
      throw config_error("family id: expected gaussian(sigma=<value>)");
    std::string inner = id.substr(lp + 1, rp - lp - 1);
    const auto eq = inner.find('=');
    if (eq == std::string::npos || inner.substr(0, eq) != "sigma")
      throw config_error("family id: expected gaussian(sigma=<value>)");
    double sigma = 0.0;
    try {
      sigma = std::stod(inner.substr(eq + 1));
    } catch (const std::exception&) {
      throw config_error("family id: bad sigma in '" + id + "'");
    }
    return gaussian_family(sigma);
  }
  throw config_error("unknown family id '" + id + "'");
}

// ---- parametrizations -----------------------------------------------------

namespace {

void check_interval(double lo, double hi, const char* what) {
  if (!(lo < hi)) throw config_error(std::string(what) + ": lo must be below hi");
}

}  // namespace

Parametrization natural_parametrization(const ExponentialFamily& fam, double lo, double hi) {
  check_interval(lo, hi, "natural parametrization");
  if (!fam.in_natural_domain(lo) || !fam.in_natural_domain(hi))
    throw config_error("natural parametrization: interval leaves the natural domain");
  Parametrization p;
  p.lo = lo;
  p.hi = hi;
  p.kind = ParamKind::Natural;
  p.to_natural = [](double g) { return g; };
  p.from_natural = [](double t) { return t; };
  return p;
}

Parametrization mean_parametrization(const ExponentialFamily& fam, double lo, double hi) {
  check_interval(lo, hi, "mean parametrization");
  if (!fam.mean_to_natural)
    throw config_error("mean parametrization: family has no mean link");
  auto to_nat = fam.mean_to_natural;
  if (!fam.in_natural_domain(to_nat(lo)) || !fam.in_natural_domain(to_nat(hi)))
    throw config_error("mean parametrization: interval leaves the natural domain");
  Parametrization p;
  p.lo = lo;
  p.hi = hi;
  p.kind = ParamKind::Mean;
  p.to_natural = to_nat;
  p.from_natural = fam.log_partition_d;  // A' inverts the mean link
  return p;
}

Parametrization variance_stabilize(const ExponentialFamily& fam, double anchor,
                                   double theta_lo, double theta_hi) {
  check_interval(theta_lo, theta_hi, "variance stabilization");
  if (!fam.in_natural_domain(theta_lo) || !fam.in_natural_domain(theta_hi))
    throw config_error("variance stabilization: range leaves the natural domain");
  if (!(anchor >= theta_lo && anchor <= theta_hi))
    throw config_error("variance stabilization: anchor outside [theta_lo, theta_hi]");

  Parametrization p;
  p.kind = ParamKind::VarianceStabilized;
  p.kappa = 1.0;

  const double inv2s2 = 1.0 / (2.0 * std::sqrt(2.0));

  if (fam.name == "gaussian") {
    const double sigma = std::sqrt(fam.log_partition_dd(0.0));
    p.to_natural = [anchor, sigma](double g) { return anchor + 2.0 * std::sqrt(2.0) * g / sigma; };
    p.from_natural = [anchor, sigma, inv2s2](double t) { return sigma * (t - anchor) * inv2s2; };
  } else if (fam.name == "poisson") {
    const double root0 = std::exp(0.5 * anchor);
    p.to_natural = [root0](double g) {
      const double root = root0 + std::sqrt(2.0) * g;
      if (!(root > 0.0)) throw domain_error("vst: gamma below the family boundary");
      return 2.0 * std::log(root);
    };
    p.from_natural = [root0](double t) { return (std::exp(0.5 * t) - root0) / std::sqrt(2.0); };
  } else if (fam.name == "bernoulli") {
    auto prob = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
    const double a0 = std::asin(std::sqrt(prob(anchor)));
    p.to_natural = [a0](double g) {
      const double a = std::sqrt(2.0) * g + a0;
      if (!(a > 0.0 && a < 1.5707963267948966))
        throw domain_error("vst: gamma outside the probability range");
      const double pr = std::sin(a) * std::sin(a);
      return std::log(pr) - std::log1p(-pr);
    };
    p.from_natural = [a0, prob](double t) {
      return (std::asin(std::sqrt(prob(t))) - a0) / std::sqrt(2.0);
    };
  } else {
    // Generic numeric path: v(theta) = int_anchor^theta sqrt(A''/8), inverted
    // by monotone root finding. Quadrature is adaptive Gauss-Kronrod.
    auto Add = fam.log_partition_dd;
    auto v = [Add, anchor](double theta) {
      if (theta == anchor) return 0.0;
      auto speed = [Add](double t) { return std::sqrt(Add(t) / 8.0); };
      double err = 0.0;
      double val = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
          speed, anchor, theta, 12, 1e-12, &err);
      return val;
    };
    p.from_natural = v;
    const double lo_t = theta_lo, hi_t = theta_hi;
    p.to_natural = [v, lo_t, hi_t](double g) {
      auto f = [&](double t) { return v(t) - g; };
      if (f(lo_t) > 0.0 || f(hi_t) < 0.0)
        throw domain_error("vst: gamma outside the stabilized range");
      boost::math::tools::eps_tolerance<double> tol(48);
      std::uintmax_t iters = 200;
      auto r = boost::math::tools::toms748_solve(f, lo_t, hi_t, tol, iters);
      return 0.5 * (r.first + r.second);
    };
  }

  p.lo = p.from_natural(theta_lo);
  p.hi = p.from_natural(theta_hi);
  return p;
}

Parametrization parametrization_from_id(const ExponentialFamily& fam, const std::string& id,
                                        double lo, double hi) {
  if (id == "natural") return natural_parametrization(fam, lo, hi);
  if (id == "mean") return mean_parametrization(fam, lo, hi);
  if (id == "vst") {
    // lo, hi are natural-parameter endpoints; anchor at the midpoint.
    return variance_stabilize(fam, 0.5 * (lo + hi), lo, hi);
  }
  throw config_error("unknown parametrization id '" + id + "'");
}

// ---- operations -------------------------------------------------------------

double log_density(const ConditionalLaw& law, double y) {
  return log_density(LawContext{law.family, law.param}, law.gamma, y);
}

double log_density(const LawContext& ctx, double gamma, double y) {
  if (!ctx.family.in_support(y)) throw domain_error("log_density: y off the support");
  const double theta = ctx.param.to_natural(gamma);
  if (!ctx.family.in_natural_domain(theta))
    throw domain_error("log_density: natural parameter outside the domain");
  return theta * ctx.family.suff_stat(y) - ctx.family.log_partition(theta);
}

double hellinger_sq(const ExponentialFamily& fam, double theta1, double theta2) {
  if (!fam.in_natural_domain(theta1) || !fam.in_natural_domain(theta2))
    throw domain_error("hellinger: natural parameter outside the domain");
  if (theta1 == theta2) return 0.0;
  const double mid = 0.5 * (theta1 + theta2);
  const double expo = fam.log_partition(mid) -
                      0.5 * (fam.log_partition(theta1) + fam.log_partition(theta2));
  // Convexity of A makes expo <= 0; clamp stray rounding.
  const double h2 = 1.0 - std::exp(std::min(expo, 0.0));
  return std::min(std::max(h2, 0.0), 1.0);
}

double hellinger(const ExponentialFamily& fam, double theta1, double theta2) {
  return std::sqrt(hellinger_sq(fam, theta1, theta2));
}

double hellinger_sq_gamma(const LawContext& ctx, double gamma1, double gamma2) {
  return hellinger_sq(ctx.family, ctx.param.to_natural(gamma1), ctx.param.to_natural(gamma2));
}

double hellinger_gamma(const LawContext& ctx, double gamma1, double gamma2) {
  return std::sqrt(hellinger_sq_gamma(ctx, gamma1, gamma2));
}

double sample(const ConditionalLaw& law, std::uint64_t seed) {
  const double theta = law.param.to_natural(law.gamma);
  if (!law.family.in_natural_domain(theta))
    throw domain_error("sample: natural parameter outside the domain");
  return law.family.draw(theta, seed);
}

}  // namespace rhosel

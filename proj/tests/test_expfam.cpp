#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "rhosel/expfam.hpp"

using namespace rhosel;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

}  // namespace

TEST_CASE("log_density matches closed-form pmf/pdf values") {
  // Poisson at lambda = 1 (theta = 0), y = 0: log pmf = -1 and log a(0) = 0.
  auto pois = poisson_family();
  ConditionalLaw pl{pois, natural_parametrization(pois, -2.0, 2.0), 0.0};
  CHECK(log_density(pl, 0.0) == doctest::Approx(-1.0).epsilon(1e-12));

  // Bernoulli at p = 1/2 (theta = 0), y = 1: log(1/2).
  auto bern = bernoulli_family();
  ConditionalLaw bl{bern, natural_parametrization(bern, -3.0, 3.0), 0.0};
  CHECK(log_density(bl, 1.0) == doctest::Approx(-0.6931471805599453).epsilon(1e-12));

  // Gaussian sigma=1, mean parametrization, gamma=0, y=0: exp(logdens) * a(0)
  // equals the standard normal density at 0.
  auto gauss = gaussian_family(1.0);
  ConditionalLaw gl{gauss, mean_parametrization(gauss, -3.0, 3.0), 0.0};
  const double full = std::exp(log_density(gl, 0.0) + gauss.log_base_density(0.0));
  CHECK(full == doctest::Approx(1.0 / std::sqrt(2.0 * 3.14159265358979323846)).epsilon(1e-12));
}

TEST_CASE("log_density rejects observations off the support") {
  auto pois = poisson_family();
  ConditionalLaw law{pois, natural_parametrization(pois, -2.0, 2.0), 0.0};
  CHECK_THROWS_AS((void)log_density(law, -1.0), domain_error);
  CHECK_THROWS_AS((void)log_density(law, 0.5), domain_error);

  auto expo = exponential_family();
  ConditionalLaw el{expo, natural_parametrization(expo, -5.0, -0.1), -1.0};
  CHECK_THROWS_AS((void)log_density(el, -0.25), domain_error);
}

TEST_CASE("hellinger: identity, symmetry, frozen values") {
  auto gauss = gaussian_family(1.0);
  CHECK(hellinger(gauss, 0.7, 0.7) == 0.0);
  CHECK(hellinger(gauss, -1.0, 2.0) == hellinger(gauss, 2.0, -1.0));

  // Means 0 and 2 at sigma 1: h^2 = 1 - e^{-1/2}.
  const double h = hellinger(gauss, 0.0, 2.0);
  CHECK(h * h == doctest::Approx(0.3934693402873666).epsilon(1e-12));

  // Poisson lambda 1 vs 4: same h^2 = 1 - e^{-1/2}.
  auto pois = poisson_family();
  const double hp = hellinger(pois, 0.0, std::log(4.0));
  CHECK(hp * hp == doctest::Approx(0.3934693402873666).epsilon(1e-12));
}

TEST_CASE("hellinger agrees with the quadrature/series oracle on grids") {
  auto gauss = gaussian_family(1.3);
  for (double t1 : linspace(-2.0, 2.0, 7)) {
    for (double t2 : linspace(-2.0, 2.0, 7)) {
      CHECK(hellinger_sq(gauss, t1, t2) ==
            doctest::Approx(oracle::hellinger_sq_gaussian(t1, t2, 1.3)).epsilon(0).scale(1).epsilon(1e-9));
    }
  }
  auto pois = poisson_family();
  for (double t1 : linspace(std::log(0.2), std::log(6.0), 6)) {
    for (double t2 : linspace(std::log(0.2), std::log(6.0), 6)) {
      CHECK(std::abs(hellinger_sq(pois, t1, t2) - oracle::hellinger_sq_poisson(t1, t2)) < 1e-9);
    }
  }
  auto bern = bernoulli_family();
  for (double t1 : linspace(-3.0, 3.0, 6)) {
    for (double t2 : linspace(-3.0, 3.0, 6)) {
      CHECK(std::abs(hellinger_sq(bern, t1, t2) - oracle::hellinger_sq_bernoulli(t1, t2)) < 1e-10);
    }
  }
  auto expo = exponential_family();
  for (double t1 : linspace(-4.0, -0.2, 6)) {
    for (double t2 : linspace(-4.0, -0.2, 6)) {
      CHECK(std::abs(hellinger_sq(expo, t1, t2) - oracle::hellinger_sq_exponential(t1, t2)) < 1e-9);
    }
  }
}

TEST_CASE("hellinger rejects natural parameters outside the domain") {
  auto expo = exponential_family();  // domain (-inf, 0)
  CHECK_THROWS_AS((void)hellinger(expo, -1.0, 0.5), domain_error);
}

TEST_CASE("densities renormalize to 1 against the base measure") {
  for (double theta : linspace(-1.5, 1.5, 10)) {
    CHECK(oracle::normalization_gaussian(theta, 0.8) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(oracle::normalization_poisson(theta) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(oracle::normalization_bernoulli(theta) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(oracle::normalization_exponential(theta - 2.0) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("variance stabilization: closed forms and anchor") {
  // Gaussian known sigma: v is linear with slope sigma/(2 sqrt 2) in theta,
  // i.e. 1/(2 sqrt 2 sigma) per unit of mean.
  const double sigma = 1.7;
  auto gauss = gaussian_family(sigma);
  auto vst = variance_stabilize(gauss, 0.0, -2.0, 2.0);
  CHECK(vst.kind == ParamKind::VarianceStabilized);
  CHECK(vst.kappa == 1.0);
  const double slope = sigma / (2.0 * std::sqrt(2.0));
  CHECK(vst.from_natural(0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(vst.from_natural(1.0) == doctest::Approx(slope).epsilon(1e-10));
  CHECK(vst.from_natural(-0.5) == doctest::Approx(-0.5 * slope).epsilon(1e-10));
  CHECK(vst.to_natural(vst.from_natural(0.8)) == doctest::Approx(0.8).epsilon(1e-9));

  // Poisson: v(theta) = sqrt(lambda/2) + const, lambda = e^theta.
  auto pois = poisson_family();
  auto pvst = variance_stabilize(pois, 0.0, std::log(0.25), std::log(9.0));
  auto v = [&](double lambda) { return pvst.from_natural(std::log(lambda)); };
  CHECK(v(4.0) - v(1.0) == doctest::Approx(std::sqrt(2.0) - std::sqrt(0.5)).epsilon(1e-10));
  CHECK(v(1.0) == doctest::Approx(0.0).epsilon(1e-12));  // anchored at lambda = 1
}

TEST_CASE("variance stabilization: numeric path matches analytic map (exponential)") {
  // For the exponential family v(theta) = log(theta0/theta) / (2 sqrt 2).
  auto expo = exponential_family();
  auto vst = variance_stabilize(expo, -1.0, -8.0, -0.125);
  for (double theta : linspace(-7.5, -0.2, 9)) {
    const double expect = std::log(-1.0 / theta) / (2.0 * std::sqrt(2.0));
    CHECK(vst.from_natural(theta) == doctest::Approx(expect).epsilon(1e-8));
    CHECK(vst.to_natural(vst.from_natural(theta)) == doctest::Approx(theta).epsilon(1e-7));
  }
}

TEST_CASE("variance stabilization is 1-Lipschitz for the Hellinger metric") {
  struct Case {
    ExponentialFamily fam;
    double lo, hi;
  };
  std::vector<Case> cases;
  cases.push_back({gaussian_family(1.0), -2.0, 2.0});
  cases.push_back({poisson_family(), std::log(0.25), std::log(9.0)});
  cases.push_back({bernoulli_family(), -2.5, 2.5});
  cases.push_back({exponential_family(), -6.0, -0.25});
  for (auto& c : cases) {
    auto vst = variance_stabilize(c.fam, 0.5 * (c.lo + c.hi), c.lo, c.hi);
    LawContext ctx{c.fam, vst};
    auto gammas = linspace(vst.lo, vst.hi, 25);
    for (double g1 : gammas) {
      for (double g2 : gammas) {
        CHECK(hellinger_gamma(ctx, g1, g2) <= std::abs(g1 - g2) + 1e-9);
      }
    }
  }
}

TEST_CASE("parametrization round trips") {
  auto pois = poisson_family();
  auto mean = mean_parametrization(pois, 0.25, 9.0);
  for (double g : linspace(0.25, 9.0, 11)) {
    CHECK(mean.from_natural(mean.to_natural(g)) == doctest::Approx(g).epsilon(1e-10));
  }
  CHECK(mean.to_natural(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sampling: determinism and moments") {
  auto gauss = gaussian_family(1.0);
  ConditionalLaw law{gauss, mean_parametrization(gauss, -3.0, 3.0), 0.0};
  CHECK(sample(law, 42) == sample(law, 42));
  CHECK(sample(law, 42) != sample(law, 43));

  const int N = 100000;
  double mean = 0.0;
  for (int i = 0; i < N; ++i) mean += sample(law, 1000 + i);
  mean /= N;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(N)));

  // Poisson lambda=2: variance/mean within [0.95, 1.05] at N = 1e5.
  auto pois = poisson_family();
  ConditionalLaw plaw{pois, mean_parametrization(pois, 0.1, 10.0), 2.0};
  double m = 0.0, m2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double y = sample(plaw, 5000 + i);
    m += y;
    m2 += y * y;
  }
  m /= N;
  const double var = m2 / N - m * m;
  CHECK(var / m > 0.95);
  CHECK(var / m < 1.05);

  // Bernoulli at a near-degenerate natural parameter: all draws are 1.
  auto bern = bernoulli_family();
  ConditionalLaw blaw{bern, natural_parametrization(bern, -40.0, 40.0), 30.0};
  for (int i = 0; i < 200; ++i) CHECK(sample(blaw, 77 + i) == 1.0);
}

TEST_CASE("family ids parse") {
  CHECK(family_from_id("gaussian(sigma=2.5)").name == "gaussian");
  CHECK(family_from_id("poisson").name == "poisson");
  CHECK(family_from_id("bernoulli").name == "bernoulli");
  CHECK(family_from_id("exponential").name == "exponential");
  CHECK_THROWS_AS((void)family_from_id("gamma"), config_error);
  CHECK_THROWS_AS((void)family_from_id("gaussian(sigma=0)"), config_error);
}

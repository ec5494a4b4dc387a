#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rhosel/complexity.hpp"

using namespace rhosel;

TEST_CASE("vc_dyadic: frozen values and monotonicity") {
  // d=1, s=(0), r=0: (0+1)^1 * 2^0 + 1 = 2.
  CHECK(vc_dyadic({0}, 0) == doctest::Approx(2.0));
  // d=1, s=(3), r=2: 3 * 8 + 1 = 25.
  CHECK(vc_dyadic({3}, 2) == doctest::Approx(25.0));
  // d=2, s=(2,1), r=1: 2^2 * 8 + 1 = 33.
  CHECK(vc_dyadic({2, 1}, 1) == doctest::Approx(33.0));
  CHECK(vc_dyadic({4}, 0) > vc_dyadic({3}, 0));
  CHECK(vc_dyadic({3}, 1) > vc_dyadic({3}, 0));
}

TEST_CASE("vc_partition: cells times poly dimension plus one") {
  // 5 cells, r=0, d=1: 5 + 1.
  CHECK(vc_partition(5, 0, 1) == doctest::Approx(6.0));
  // 4 cells, r=2, d=2: 9 * 4 + 1 = 37.
  CHECK(vc_partition(4, 2, 2) == doctest::Approx(37.0));
}

TEST_CASE("vc_additive: frozen value at the smallest budget") {
  // One coordinate block of one cell, t=1, r=0: U = 1 + 0 + 2 = 3,
  // bracket = 1*1 + 2*1*1 = 3, so 2 + 3 log2(12e log2(6e)).
  CHECK(vc_additive({1}, 1, 0) == doctest::Approx(23.11279568775586).epsilon(1e-12));
  // Two blocks of one cell each: bracket 1 + 2*2 = 5, same U = 3.
  CHECK(vc_additive({1, 1}, 1, 0) == doctest::Approx(37.18799281292643).epsilon(1e-12));
  CHECK(vc_additive({4, 4}, 1, 1) > vc_additive({1, 1}, 1, 0));
}

TEST_CASE("vc_multi: frozen values") {
  // l=1, d=1, t=(1), r=0 coincides with the additive smallest budget.
  CHECK(vc_multi({1}, 0, 1, 1) == doctest::Approx(23.11279568775586).epsilon(1e-12));
  // l=2, t=(2,2), r=1, d=3: bracket = 2*2*3 + 4*2^2 = 28, U = 4+2+2+1 = 9.
  CHECK(vc_multi({2, 2}, 1, 2, 3) == doctest::Approx(256.83624428576456).epsilon(1e-12));
}

TEST_CASE("vc_neural: frozen value and growth in sparsity") {
  // L=1, p=2, s0=7: (L+1)(s0+1) log2[2 (2e(L+1)(pL/2+1))^2].
  CHECK(vc_neural(1, 2, 7) == doctest::Approx(158.1662413084468).epsilon(1e-12));
  CHECK(vc_neural(1, 2, 8) > vc_neural(1, 2, 7));
  CHECK(vc_neural(2, 2, 7) > vc_neural(1, 2, 7));
}

TEST_CASE("vc_varsel: support size plus one") {
  CHECK(vc_varsel(0) == doctest::Approx(1.0));
  CHECK(vc_varsel(3) == doctest::Approx(4.0));
}

TEST_CASE("weights: frozen values") {
  // Dyadic d=1, s=(0), r=0: log(8) * 1 + 0 = log 8.
  CHECK(weight_dyadic({0}, 0, 1) == doctest::Approx(2.0794415416798357).epsilon(1e-14));
  // Partition with 4 cells, r=1, d=2: log(16) * 4 + 1.
  CHECK(weight_partition(4, 1, 2) == doctest::Approx(std::log(16.0) * 4.0 + 1.0).epsilon(1e-13));
  // Additive: 3 log 2 sum|pi_j| + r + t.
  CHECK(weight_additive({2, 3}, 1, 0) == doctest::Approx(3.0 * std::log(2.0) * 5.0 + 1.0).epsilon(1e-13));
  // Multi-index: sum t_j + r.
  CHECK(weight_multi({2, 2}, 1) == doctest::Approx(5.0));
  // Neural dense: L + p.
  CHECK(weight_neural_dense(3, 7) == doctest::Approx(10.0));
  // Neural sparse, L=1 p=2 d=1: pbar = 7, s0=7 gives
  // 7 log(2e) + 2 + 1.
  CHECK(weight_neural_sparse(1, 2, 1, 7) == doctest::Approx(14.852030263919616).epsilon(1e-12));
  // s0 = 0 collapses to p + L.
  CHECK(weight_neural_sparse(1, 2, 1, 0) == doctest::Approx(3.0));
}

TEST_CASE("weight_varsel: nested chain versus generic subsets") {
  // Prefix supports use the 2 log(1 + |m|) chain weight.
  CHECK(weight_varsel({0}, 50) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(weight_varsel({0, 1, 2}, 50) == doctest::Approx(2.772588722239781).epsilon(1e-12));
  // Non-prefix supports pay |m| log(2ep/|m|).
  CHECK(weight_varsel({1, 4}, 50) == doctest::Approx(9.824046010856293).epsilon(1e-12));
  // Empty support costs nothing.
  CHECK(weight_varsel({}, 50) == doctest::Approx(0.0));
}

TEST_CASE("sigma_partial: partial sums stay below the advertised bounds") {
  SigmaCutoff cut;
  cut.d = 2;
  cut.s_max = 6;
  cut.r_max = 4;
  cut.t_max = 6;
  cut.l = 2;
  cut.L_max = 4;
  cut.p_max = 8;
  cut.input_d = 2;
  cut.p = 50;

  const double sd = sigma_partial(ComplexityFamily::Dyadic, cut);
  CHECK(sd > 0.0);
  CHECK(sd < sigma_bound(ComplexityFamily::Dyadic));

  const double sa = sigma_partial(ComplexityFamily::Additive, cut);
  CHECK(sa > 0.0);
  CHECK(sa < sigma_bound(ComplexityFamily::Additive));

  const double sm = sigma_partial(ComplexityFamily::MultiIdx, cut);
  CHECK(sm > 0.0);
  CHECK(sm < sigma_bound(ComplexityFamily::MultiIdx));

  const double sn = sigma_partial(ComplexityFamily::Neural, cut);
  CHECK(sn > 0.0);
  CHECK(sn < sigma_bound(ComplexityFamily::Neural));

  const double sv = sigma_partial(ComplexityFamily::Varsel, cut);
  CHECK(sv > 0.0);
  CHECK(sv < sigma_bound(ComplexityFamily::Varsel));
}

TEST_CASE("sigma_bound: pinned limits") {
  CHECK(sigma_bound(ComplexityFamily::Dyadic) == doctest::Approx(1.5819767068693265).epsilon(1e-14));
  CHECK(sigma_bound(ComplexityFamily::Additive) == doctest::Approx(1.5819767068693265).epsilon(1e-14));
  CHECK(sigma_bound(ComplexityFamily::MultiIdx) == doctest::Approx(1.5819767068693265).epsilon(1e-14));
  CHECK(sigma_bound(ComplexityFamily::Neural) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(sigma_bound(ComplexityFamily::Varsel) == doctest::Approx(2.6449340668482266).epsilon(1e-14));
}

TEST_CASE("sigma_partial grows toward its bound as the cutoff widens") {
  SigmaCutoff small;
  small.d = 1;
  small.s_max = 2;
  small.r_max = 1;
  SigmaCutoff big = small;
  big.s_max = 12;
  big.r_max = 8;
  CHECK(sigma_partial(ComplexityFamily::Dyadic, small) <
        sigma_partial(ComplexityFamily::Dyadic, big));
  CHECK(sigma_partial(ComplexityFamily::Dyadic, big) < sigma_bound(ComplexityFamily::Dyadic));
}

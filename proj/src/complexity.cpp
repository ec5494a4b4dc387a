#include "rhosel/complexity.hpp"

#include <cmath>
#include <stdexcept>

#include "rhosel/errors.hpp"
#include "rhosel/neural.hpp"

namespace rhosel {

namespace {

double log2_of(double x) { return std::log2(x); }

// The shared bracket multiplier log2(4eU log2(2eU)).
double capacity_log(double U) {
  const double e = 2.718281828459045235360287;
  return log2_of(4.0 * e * U * log2_of(2.0 * e * U));
}

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

// ---- VC upper bounds -------------------------------------------------------

double vc_dyadic(const std::vector<int>& s, int r) {
  if (s.empty() || r < 0) throw domain_error("vc_dyadic: need s nonempty, r >= 0");
  double cells = 1.0;
  for (int sj : s) {
    if (sj < 0) throw domain_error("vc_dyadic: s_j >= 0");
    cells *= std::ldexp(1.0, sj);
  }
  const int d = static_cast<int>(s.size());
  return std::pow(r + 1.0, d) * cells + 1.0;
}

double vc_partition(std::int64_t cell_count, int r, int d) {
  if (cell_count < 1 || r < 0 || d < 1) throw domain_error("vc_partition: bad arguments");
  return std::pow(r + 1.0, d) * static_cast<double>(cell_count) + 1.0;
}

double vc_additive(const std::vector<std::int64_t>& pi_sizes, int t, int r) {
  if (pi_sizes.empty() || t < 1 || r < 0) throw domain_error("vc_additive: bad arguments");
  double sum_pi = 0.0;
  for (auto c : pi_sizes) {
    if (c < 1) throw domain_error("vc_additive: |pi_j| >= 1");
    sum_pi += static_cast<double>(c);
  }
  const double U = t + r + 2.0;
  const double bracket = t * (r + 1.0) + 2.0 * sum_pi * (r + 1.0);
  return 2.0 + bracket * capacity_log(U);
}

double vc_multi(const std::vector<int>& t, int r, int l, int d) {
  if (l < 1 || static_cast<int>(t.size()) != l || r < 0 || d < 1)
    throw domain_error("vc_multi: bad arguments");
  double prod_t = 1.0, sum_t = 0.0;
  for (int tj : t) {
    if (tj < 1) throw domain_error("vc_multi: t_j >= 1");
    prod_t *= tj;
    sum_t += tj;
  }
  const double U = sum_t + static_cast<double>(l) * r + l + 1.0;
  const double bracket = 2.0 * l * d + prod_t * std::pow(r + 1.0, l);
  return 2.0 + bracket * capacity_log(U);
}

double vc_neural(int L, int p, std::int64_t s0) {
  if (L < 1 || p < 1 || s0 < 0) throw domain_error("vc_neural: bad arguments");
  const double e = 2.718281828459045235360287;
  const double inner = 2.0 * e * (L + 1.0) * (p * L / 2.0 + 1.0);
  return (L + 1.0) * (s0 + 1.0) * log2_of(2.0 * inner * inner);
}

double vc_varsel(int support_size) {
  if (support_size < 0) throw domain_error("vc_varsel: support size >= 0");
  return support_size + 1.0;
}

// ---- weights -----------------------------------------------------------------

double weight_dyadic(const std::vector<int>& s, int r, int d) {
  if (static_cast<int>(s.size()) != d || r < 0 || d < 1)
    throw domain_error("weight_dyadic: bad arguments");
  double cells = 1.0;
  for (int sj : s) cells *= std::ldexp(1.0, sj);
  return std::log(8.0 * d) * cells + r;
}

double weight_partition(std::int64_t cell_count, int r, int d) {
  if (cell_count < 1 || r < 0 || d < 1) throw domain_error("weight_partition: bad arguments");
  return std::log(8.0 * d) * static_cast<double>(cell_count) + r;
}

double weight_additive(const std::vector<std::int64_t>& pi_sizes, int t, int r) {
  if (pi_sizes.empty() || t < 1 || r < 0) throw domain_error("weight_additive: bad arguments");
  double sum_pi = 0.0;
  for (auto c : pi_sizes) sum_pi += static_cast<double>(c);
  return 3.0 * std::log(2.0) * sum_pi + r + t;
}

double weight_multi(const std::vector<int>& t, int r) {
  if (t.empty() || r < 0) throw domain_error("weight_multi: bad arguments");
  double sum_t = 0.0;
  for (int tj : t) sum_t += tj;
  return sum_t + r;
}

double weight_neural_dense(int L, int p) {
  if (L < 1 || p < 1) throw domain_error("weight_neural_dense: bad arguments");
  return static_cast<double>(L + p);
}

double weight_neural_sparse(int L, int p, int d, std::int64_t s0) {
  if (L < 1 || p < 1 || d < 1 || s0 < 0) throw domain_error("weight_neural_sparse: bad arguments");
  const double pbar = static_cast<double>(param_count({L, p, d}));
  if (s0 > pbar) throw domain_error("weight_neural_sparse: s0 exceeds the parameter count");
  if (s0 == 0) return static_cast<double>(p + L);
  const double e = 2.718281828459045235360287;
  return s0 * std::log(2.0 * e * pbar / static_cast<double>(s0)) + p + L;
}

double weight_varsel(const std::vector<int>& support, int p) {
  if (p < 1) throw domain_error("weight_varsel: p >= 1");
  const int k = static_cast<int>(support.size());
  if (k > p) throw domain_error("weight_varsel: support larger than the universe");
  if (k == 0) return 0.0;
  // The nested chain {0}, {0,1}, ... carries the light two-log weight.
  bool nested = true;
  for (int j = 0; j < k; ++j)
    if (support[j] != j) {
      nested = false;
      break;
    }
  if (nested) return 2.0 * std::log(1.0 + k);
  const double e = 2.718281828459045235360287;
  return k * std::log(2.0 * e * p / static_cast<double>(k));
}

// ---- weight-sum partial verifiers -----------------------------------------------

namespace {

double sigma_dyadic(const SigmaCutoff& c) {
  // Sum over s in {0..s_max}^d (as a product of per-axis geometric-like sums
  // would be wrong: the weight couples axes through the cell product). Loop.
  std::vector<int> s(c.d, 0);
  double total = 0.0;
  while (true) {
    for (int r = 0; r <= c.r_max; ++r) total += std::exp(-weight_dyadic(s, r, c.d));
    int j = c.d - 1;
    while (j >= 0 && s[j] == c.s_max) s[j--] = 0;
    if (j < 0) break;
    s[j]++;
  }
  return total;
}

double sigma_additive(const SigmaCutoff& c) {
  std::vector<int> s(c.d, 0);
  double total = 0.0;
  while (true) {
    std::vector<std::int64_t> pi(c.d);
    for (int j = 0; j < c.d; ++j) pi[j] = std::int64_t{1} << s[j];
    for (int t = 1; t <= c.t_max; ++t)
      for (int r = 0; r <= c.r_max; ++r) total += std::exp(-weight_additive(pi, t, r));
    int j = c.d - 1;
    while (j >= 0 && s[j] == c.s_max) s[j--] = 0;
    if (j < 0) break;
    s[j]++;
  }
  return total;
}

double sigma_multi(const SigmaCutoff& c) {
  std::vector<int> t(c.l, 1);
  double total = 0.0;
  while (true) {
    for (int r = 0; r <= c.r_max; ++r) total += std::exp(-weight_multi(t, r));
    int j = c.l - 1;
    while (j >= 0 && t[j] == c.t_max) t[j--] = 1;
    if (j < 0) break;
    t[j]++;
  }
  return total;
}

double sigma_neural(const SigmaCutoff& c) {
  // Mask-aware: each sparsity level s0 appears with binomial multiplicity.
  double total = 0.0;
  for (int L = 1; L <= c.L_max; ++L) {
    for (int p = 1; p <= c.p_max; ++p) {
      const double pbar = static_cast<double>(param_count({L, p, c.input_d}));
      for (std::int64_t s0 = 0; s0 <= static_cast<std::int64_t>(pbar); ++s0) {
        const double delta = weight_neural_sparse(L, p, c.input_d, s0);
        total += std::exp(log_choose(pbar, static_cast<double>(s0)) - delta);
      }
    }
  }
  return total;
}

double sigma_varsel(const SigmaCutoff& c) {
  // Full power set of {1..p}: empty set, the nested chain, and the generic
  // subsets grouped by size (counted combinatorially, not enumerated).
  const double e = 2.718281828459045235360287;
  double total = 1.0;  // empty support, weight 0
  for (int k = 1; k <= c.p; ++k) {
    total += 1.0 / ((1.0 + k) * (1.0 + k));  // the one nested subset of size k
    const double generic = std::exp(log_choose(c.p, k)) - 1.0;
    if (generic > 0.0)
      total += generic * std::exp(-k * std::log(2.0 * e * c.p / static_cast<double>(k)));
  }
  return total;
}

}  // namespace

double sigma_partial(ComplexityFamily kind, const SigmaCutoff& cutoff) {
  switch (kind) {
    case ComplexityFamily::Dyadic:
      return sigma_dyadic(cutoff);
    case ComplexityFamily::Additive:
      return sigma_additive(cutoff);
    case ComplexityFamily::MultiIdx:
      return sigma_multi(cutoff);
    case ComplexityFamily::Neural:
      return sigma_neural(cutoff);
    case ComplexityFamily::Varsel:
      return sigma_varsel(cutoff);
  }
  throw domain_error("sigma_partial: unknown family");
}

double sigma_bound(ComplexityFamily kind) {
  const double e = 2.718281828459045235360287;
  const double pi = 3.141592653589793238463;
  switch (kind) {
    case ComplexityFamily::Dyadic:
    case ComplexityFamily::Additive:
    case ComplexityFamily::MultiIdx:
      return e / (e - 1.0);
    case ComplexityFamily::Neural:
      return 2.0;
    case ComplexityFamily::Varsel:
      return 1.0 + pi * pi / 6.0;
  }
  throw domain_error("sigma_bound: unknown family");
}

}  // namespace rhosel

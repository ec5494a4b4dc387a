#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rhosel {

enum class ComplexityFamily { Dyadic, Additive, MultiIdx, Neural, Varsel };

struct ComplexityRecord {
  std::string model_index;
  double V = 1.0;
  double Delta = 0.0;
  ComplexityFamily family_kind = ComplexityFamily::Dyadic;
};

// ---- VC upper bounds -------------------------------------------------------

// Dyadic piecewise polynomials: (r+1)^d prod_j 2^{s_j} + 1.
double vc_dyadic(const std::vector<int>& s, int r);
// Partition form: (r+1)^d |pi| + 1.
double vc_partition(std::int64_t cell_count, int r, int d);
// Additive composites: 2 + [t(r+1) + 2 sum_j |pi_j| (r+1)] log2(4eU log2(2eU)), U = t+r+2.
double vc_additive(const std::vector<std::int64_t>& pi_sizes, int t, int r);
// Multi-index composites: 2 + [2ld + (prod t_j)(r+1)^l] log2(4eU log2(2eU)),
// U = sum t_j + lr + l + 1.
double vc_multi(const std::vector<int>& t, int r, int l, int d);
// Sparse ReLU networks: (L+1)(s0+1) log2(2 (2e(L+1)(pL/2+1))^2).
double vc_neural(int L, int p, std::int64_t s0);
// Variable selection: |m| + 1.
double vc_varsel(int support_size);

// ---- weights -----------------------------------------------------------------

double weight_dyadic(const std::vector<int>& s, int r, int d);
double weight_partition(std::int64_t cell_count, int r, int d);  // log(8d)|pi| + r
double weight_additive(const std::vector<std::int64_t>& pi_sizes, int t, int r);  // 3 log2 sum|pi_j| + r + t
double weight_multi(const std::vector<int>& t, int r);           // sum t_j + r
double weight_neural_dense(int L, int p);                        // L + p
double weight_neural_sparse(int L, int p, int d, std::int64_t s0);  // s0 log(2e pbar/s0) + p + L
// Two-tier: 2 log(1+|m|) on the nested path {emptyset, {1}, {1,2}, ...}, else
// |m| log(2ep/|m|).
double weight_varsel(const std::vector<int>& support, int p);

// ---- weight-sum partial verifiers -----------------------------------------------

// Box cutoffs for the truncated enumerations; fields beyond a family's needs
// are ignored.
struct SigmaCutoff {
  int d = 1;        // dyadic / additive dimension
  int s_max = 0;    // dyadic exponent cap (dyadic, additive)
  int r_max = 0;    // degree cap
  int t_max = 1;    // regular-partition cap (additive f, multi-index)
  int l = 1;        // multi-index projections
  int L_max = 1;    // neural depth cap
  int p_max = 1;    // neural width cap
  int input_d = 1;  // neural input dimension
  int p = 1;        // varsel universe size (full power-set enumeration)
};

// Partial sum of e^{-Delta(m)} over the graded-lexicographic enumeration under
// the cutoff. Monotone in the cutoff; never exceeds the family's analytic
// bound (e/(e-1), e/(e-1), e/(e-1), 2, 1 + pi^2/6 respectively).
double sigma_partial(ComplexityFamily kind, const SigmaCutoff& cutoff);

// The analytic bound the partial sums stay under.
double sigma_bound(ComplexityFamily kind);

}  // namespace rhosel

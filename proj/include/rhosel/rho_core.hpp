#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhosel/expfam.hpp"

namespace rhosel {

// ---- data -------------------------------------------------------------------

struct Dataset {
  Eigen::MatrixXd W;  // n x d covariates
  Eigen::VectorXd Y;  // n observations

  Eigen::Index n() const { return W.rows(); }
  Eigen::Index dim() const { return W.cols(); }
};

// An evaluable candidate gamma: W -> I, tagged with the models that own it.
struct Candidate {
  std::string id;
  std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> eval;
  std::vector<std::size_t> owners;  // indices into CandidatePool::models
};

struct ModelEntry {
  std::string id;
  double V = 1.0;      // VC upper bound, >= 1 (real-valued is fine)
  double Delta = 0.0;  // weight, >= 0
};

struct CandidatePool {
  std::vector<Candidate> candidates;
  std::vector<ModelEntry> models;
};

struct ModelCertificate {
  std::string model_id;
  double V = 0.0;
  double Delta = 0.0;
  double Xi = 0.0;          // D_n(m)/4.7 + Delta(m)
  double bound_term = 0.0;  // c2 * (Xi + 1.49 + xi)
};

struct SelectionReport {
  std::size_t chosen_index = 0;
  std::string chosen_id;
  double slack = 1.0;
  double penalty_scale = 1.0;
  std::vector<double> upsilon;    // per candidate
  std::vector<double> penalties;  // per candidate
  std::vector<ModelCertificate> certificates;
};

struct SelectionOptions {
  double slack = 1.0;          // delta in the selection set E(X)
  double penalty_scale = 1.0;  // 1.0 = the exact penalty formula
  double xi = 1.0;             // confidence parameter for certificates
  int threads = 1;
};

// ---- risk bound constants -----------------------------------------------------

inline constexpr double kRiskC1 = 149.8;
inline constexpr double kRiskC2 = 5013.2;
inline constexpr double kRiskC3 = 1939.8;  // expectation-bound constant

// ---- operations ---------------------------------------------------------------

// psi(x) = (x-1)/(x+1) on [0, inf), 1 at +inf. Antisymmetric under x -> 1/x.
double psi(double x);

// T(X, g, g') = sum_i psi(sqrt(r_{g'(W_i)}(Y_i) / r_{g(W_i)}(Y_i))), evaluated in
// log space as sum_i tanh((l'_i - l_i)/4) with the ratio conventions 0/0 -> 0
// and c/0 -> +-1 handled through -inf log densities.
double t_statistic(const Dataset& data, const Candidate& gamma, const Candidate& gamma_prime,
                   const LawContext& ctx, int threads = 1);
// Same, from precomputed per-observation log densities.
double t_statistic_logdens(const Eigen::Ref<const Eigen::VectorXd>& l,
                           const Eigen::Ref<const Eigen::VectorXd>& l_prime);

// D_n(m) = 10^3 * V * (9.11 + max(0, ln(n/V))).
double dim_term(double V, double n);

// pen(gamma) = 100 * min over owning m of (D_n(m) + 4.7 * Delta(m)), optionally
// scaled; scale 1 is the exact formula.
double penalty(const Candidate& cand, const CandidatePool& pool, double n, double scale = 1.0);

// upsilon(X, gamma) = max over the pool of (T(X, gamma, gamma') - pen(gamma')) + pen(gamma).
double upsilon(const Dataset& data, const Candidate& gamma, const CandidatePool& pool,
               const LawContext& ctx, const SelectionOptions& opt = {});

// Full tournament: chooses a candidate with upsilon <= min upsilon + slack
// (deterministically the lowest-index minimizer).
SelectionReport select(const Dataset& data, const CandidatePool& pool, const LawContext& ctx,
                       const SelectionOptions& opt = {});

// Per-model Xi(m) = D_n(m)/4.7 + Delta(m) and the complexity-only bound term
// c2 * (Xi(m) + 1.49 + xi). The bias term is not computable and is excluded.
std::vector<ModelCertificate> bound_certificate(const CandidatePool& pool, double n, double xi);

// Blocked compensated sum: fixed 1024-element blocks, Kahan inside each block,
// block results combined in index order. Identical across thread counts.
double blocked_kahan_sum(const Eigen::Ref<const Eigen::VectorXd>& v);
double blocked_kahan_sum(const std::vector<double>& v);

// Log densities of every candidate at every observation (n x K), the shared
// precomputation behind select/upsilon.
Eigen::MatrixXd log_density_matrix(const Dataset& data, const std::vector<Candidate>& cands,
                                   const LawContext& ctx, int threads = 1);

}  // namespace rhosel

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhosel/config.hpp"
#include "rhosel/expfam.hpp"
#include "rhosel/models.hpp"
#include "rhosel/rho_core.hpp"

namespace rhosel {

// ---- scenario description ----------------------------------------------------

struct TruthSpec {
  // "constant" | "piecewise-constant" | "sin" | "linear-sparse" | "takagi"
  std::string kind = "constant";
  std::vector<double> values;      // constant / piecewise-constant cell values
  int cells = 1;                   // piecewise-constant cell count (dyadic, d=1)
  double amplitude = 1.0;          // sin / takagi scale
  std::vector<int> support;        // linear-sparse coordinates (1-based in config)
  std::vector<double> coefficients;
  int takagi_terms = 8;
  double takagi_t = 0.5;
};

struct ContaminationSpec {
  double epsilon = 0.0;
  // "far-end" (family member at u(v+)), "low-end", or "value:<gamma>".
  std::string outlier = "far-end";
};

struct ScenarioConfig {
  std::string family_id = "gaussian(sigma=1)";
  std::string parametrization_id = "mean";
  double param_lo = -1.0;  // interval I; also the clamp bounds v-, v+
  double param_hi = 1.0;
  double vst_anchor = 0.0;
  double vst_theta_lo = 0.0;
  double vst_theta_hi = 0.0;

  TruthSpec truth;
  std::string covariate_law = "uniform";  // "uniform" | "csv:<path>"
  int covariate_dim = 1;
  std::int64_t n = 100;
  ContaminationSpec contamination;

  std::vector<MenuBudgets> menu;
  double grid_pitch = 0x1p-20;

  SelectionOptions selection;

  std::int64_t mc_points = 1000;
  std::uint64_t seed_data = 1;
  std::uint64_t seed_fit = 2;
  std::uint64_t seed_mc = 3;

  std::string report_path;  // empty = stdout only
};

ScenarioConfig scenario_from_config(const ConfigMap& cfg);

// The deterministic truth function gamma*: [0,1]^d -> I named by sc.truth.
std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> build_truth(
    const ScenarioConfig& sc);

// ---- reports ---------------------------------------------------------------------

struct RiskReport {
  std::string chosen_id;
  double mc_risk = 0.0;  // estimate of the averaged squared Hellinger loss
  double mc_stderr = 0.0;
  SelectionReport selection;
  double wall_ms = 0.0;
  std::int64_t n = 0;
  std::uint64_t seed_data = 0;
};

std::string risk_report_json(const RiskReport& report);
std::string selection_report_json(const SelectionReport& report);

// ---- operations ---------------------------------------------------------------------

// W_i iid from the covariate law, Y_i | W_i ~ R_{gamma*(W_i)}; with probability
// epsilon the response is replaced by a draw from the outlier law. Deterministic
// given the seeds; the contamination stream is independent of the clean stream.
Dataset generate(const ScenarioConfig& sc);

// Average over fresh covariate draws of the closed-form squared Hellinger
// distance between R_{gamma*(w)} and R_{gammahat(w)}; stderr = sd / sqrt(points).
std::pair<double, double> mc_hellinger_risk(
    const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& gamma_hat,
    const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& gamma_star,
    const ScenarioConfig& sc);

// Fit candidates for every menu model on the data (shared across models).
struct BuiltPool {
  CandidatePool pool;
  std::vector<bool> fallback_flags;
};
BuiltPool build_pool(const Dataset& data, const ScenarioConfig& sc, const LawContext& ctx);

// generate -> enumerate menu -> fit -> select -> Monte-Carlo risk.
RiskReport run_selection(const ScenarioConfig& sc);
// Same tournament on externally supplied data (no generation step).
RiskReport run_selection_on(const Dataset& data, const ScenarioConfig& sc);

// ---- rate studies -----------------------------------------------------------------

struct RateStudy {
  std::vector<std::size_t> n_grid;
  std::vector<double> median_risk;                // per n
  std::vector<std::vector<double>> risks;         // n_grid x reps
  double slope = 0.0;                             // least-squares log risk vs log n
  std::string csv;                                // (n, rep, risk) rows
  std::string json;                               // slope + medians
};

RateStudy rate_study(const ScenarioConfig& base, const std::vector<std::size_t>& n_grid,
                     int reps);

LawContext law_context(const ScenarioConfig& sc);

// Derive independent substreams from a base seed (splitmix64 two-step).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace rhosel

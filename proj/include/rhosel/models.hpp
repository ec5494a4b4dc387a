#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhosel/expfam.hpp"
#include "rhosel/rho_core.hpp"

namespace rhosel {

// ---- partitions ---------------------------------------------------------------
// Cells tile [0,1]^d with the first cell per axis closed, the rest left-open:
// axis j with resolution s_j splits into [0, 2^-s_j], (k 2^-s_j, (k+1) 2^-s_j].

struct DyadicPartition {
  std::vector<int> s;  // per-axis dyadic exponents, s_j >= 0
  int dim() const { return static_cast<int>(s.size()); }
  std::int64_t cells_along(int j) const { return std::int64_t{1} << s[j]; }
  std::int64_t cell_count() const;
};

struct RegularPartition {
  std::vector<int> t;  // per-axis subinterval counts, t_j >= 1
  int dim() const { return static_cast<int>(t.size()); }
  std::int64_t cells_along(int j) const { return t[j]; }
  std::int64_t cell_count() const;
};

// Multi-index of the cell containing w, per the closed-first convention.
std::vector<int> cell_index(const DyadicPartition& part, const Eigen::Ref<const Eigen::VectorXd>& w);
std::vector<int> cell_index(const RegularPartition& part, const Eigen::Ref<const Eigen::VectorXd>& w);
// Flattened (row-major over axes) cell rank, used to address coefficient blocks.
std::int64_t cell_rank(const std::vector<int>& idx, const std::vector<std::int64_t>& cells_along);

// ---- piecewise polynomials ------------------------------------------------------
// Per cell, a tensor-product polynomial of per-variable degree <= r:
// sum over multi-degrees (r_1..r_d) of coeff * prod_j w_j^{r_j}.

struct PiecewisePoly {
  std::vector<std::int64_t> cells_along;  // per-axis cell counts
  std::vector<double> breaks_scale;       // reciprocal cell widths per axis
  int degree = 0;                         // r
  Eigen::MatrixXd coeffs;                 // cell_count x (r+1)^d, row per cell

  int dim() const { return static_cast<int>(cells_along.size()); }
  std::int64_t cell_count() const;
  std::int64_t terms_per_cell() const;

  static PiecewisePoly on_dyadic(const DyadicPartition& part, int degree);
  static PiecewisePoly on_regular(const RegularPartition& part, int degree);
};

double eval_piecewise(const PiecewisePoly& p, const Eigen::Ref<const Eigen::VectorXd>& w);

// ---- clamping -------------------------------------------------------------------

double clamp_value(double x, double v_minus, double v_plus);

struct ClampedFunction {
  std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> inner;
  double v_minus = 0.0;
  double v_plus = 0.0;
};

double eval_clamped(const ClampedFunction& c, const Eigen::Ref<const Eigen::VectorXd>& w);

// ---- composites ------------------------------------------------------------------

// gamma(w) = clamp(f[ (sum_j g_j(w_j)) clamped to [0,1] ], v-, v+), each g_j a
// univariate piecewise polynomial on [0,1], f univariate on [0,1].
struct AdditiveComposite {
  std::vector<PiecewisePoly> g;  // d univariate pieces
  PiecewisePoly f;
  double v_minus = 0.0;
  double v_plus = 0.0;
};

double eval_additive(const AdditiveComposite& a, const Eigen::Ref<const Eigen::VectorXd>& w);

// gamma(w) = clamp(f((<a_1,w>+1)/2, ..., (<a_l,w>+1)/2)), each a_j in the l1 unit
// ball so the projections stay inside [0,1]^l.
struct MultiIndexComposite {
  Eigen::MatrixXd a;  // l x d direction rows, ||a_j||_1 <= 1
  PiecewisePoly f;    // l-variate
  double v_minus = 0.0;
  double v_plus = 0.0;
};

MultiIndexComposite make_multi_index(const Eigen::MatrixXd& a, PiecewisePoly f,
                                     double v_minus, double v_plus);
double eval_multi_index(const MultiIndexComposite& mi, const Eigen::Ref<const Eigen::VectorXd>& w);

// ---- sparse linear models ----------------------------------------------------------

// gamma(w) = clamp(sum_{j in support} coeff_j w^{(j)}); off-support coordinates are
// exactly zero; empty support is the zero function.
struct LinearVariableModel {
  int p = 0;
  std::vector<int> support;          // sorted, 0-based coordinates
  std::vector<double> coefficients;  // aligned with support
  double v_minus = 0.0;
  double v_plus = 0.0;
};

double eval_linear(const LinearVariableModel& lv, const Eigen::Ref<const Eigen::VectorXd>& w);

// ---- model menus and fitting ----------------------------------------------------------

enum class FamilyKind { DyadicPoly, HolderPoly, Additive, MultiIndexKind, LinearVarsel, Relu };

// One enumerable model index: exactly the fields its family uses.
struct ModelIndex {
  FamilyKind kind = FamilyKind::DyadicPoly;
  std::vector<int> s;        // dyadic exponents (DyadicPoly, Additive g-partitions)
  std::vector<int> t;        // regular partition sizes (HolderPoly, MultiIndexKind), f-cells for Additive
  int r = 0;                 // per-variable max degree
  int l = 0;                 // projection count (MultiIndexKind)
  std::vector<int> support;  // LinearVarsel
  int L = 0, p_width = 0;    // Relu
  std::string id;            // stable printable identifier
};

struct MenuBudgets {
  FamilyKind kind = FamilyKind::DyadicPoly;
  int dim = 1;          // covariate dimension d
  int s_max = 0;        // dyadic resolution cap
  int t_max = 1;        // regular partition cap
  int r_max = 0;        // degree cap
  int l = 1;            // multi-index projections
  int p = 1;            // varsel universe size
  int max_support = 0;  // varsel support cap
  int screen_top = 0;   // varsel: 0 = enumerate all coordinates, else screen to top-k
  int L_max = 1;        // relu depth cap
  int p_max = 1;        // relu width cap
};

// Deterministic graded-lexicographic enumeration of model indices under the
// budgets, with V_m and Delta(m) attached.
struct MenuModel {
  ModelIndex index;
  double V = 1.0;
  double Delta = 0.0;
};
std::vector<MenuModel> enumerate_menu(const MenuBudgets& budgets);

struct FitOptions {
  double v_minus = -1.0;
  double v_plus = 1.0;
  double grid_pitch = 0x1p-20;  // fixed-point snap for fitted coefficients
  int restarts = 3;             // seeded random restarts for composite fits
  int sweeps = 8;               // alternating block sweeps per restart
  std::uint64_t seed = 1;
};

struct FitResult {
  Candidate candidate;
  bool empty_cell_fallback = false;  // some cell had no data and took the global fit
};

// Conditional-MLE fit of one model on the data: cell-separable closed Newton
// fits for partition models, alternating block fits with seeded restarts for
// composites, GLM Newton for varsel. Coefficients snapped to the fixed-point
// grid, output clamped to [v-, v+].
FitResult fit_model(const Dataset& data, const ModelIndex& index, const LawContext& ctx,
                    const FitOptions& opt);

// Largest-|score| coordinates under the null model, for varsel menu screening.
std::vector<int> screen_coordinates(const Dataset& data, const LawContext& ctx, int top_k);

double snap_to_grid(double x, double pitch);

}  // namespace rhosel

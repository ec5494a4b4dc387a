#include "rhosel/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "rhosel/complexity.hpp"
#include "rhosel/neural.hpp"

namespace rhosel {

// ---- partitions ---------------------------------------------------------------

std::int64_t DyadicPartition::cell_count() const {
  std::int64_t n = 1;
  for (int sj : s) n *= std::int64_t{1} << sj;
  return n;
}

std::int64_t RegularPartition::cell_count() const {
  std::int64_t n = 1;
  for (int tj : t) n *= tj;
  return n;
}

namespace {

// Axis cell of w under the first-closed, left-open tiling into `cells` pieces.
int axis_cell(double w, std::int64_t cells) {
  if (w < 0.0 || w > 1.0) throw domain_error("cell_index: w outside [0,1]^d");
  const double scaled = w * static_cast<double>(cells);
  auto c = static_cast<std::int64_t>(std::ceil(scaled)) - 1;
  if (c < 0) c = 0;
  if (c >= cells) c = cells - 1;
  return static_cast<int>(c);
}

std::vector<int> cell_index_impl(const std::vector<std::int64_t>& along,
                                 const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (w.size() != static_cast<Eigen::Index>(along.size()))
    throw domain_error("cell_index: dimension mismatch");
  std::vector<int> idx(along.size());
  for (std::size_t j = 0; j < along.size(); ++j)
    idx[j] = axis_cell(w(static_cast<Eigen::Index>(j)), along[j]);
  return idx;
}

}  // namespace

std::vector<int> cell_index(const DyadicPartition& part, const Eigen::Ref<const Eigen::VectorXd>& w) {
  std::vector<std::int64_t> along(part.s.size());
  for (int j = 0; j < part.dim(); ++j) along[static_cast<std::size_t>(j)] = part.cells_along(j);
  return cell_index_impl(along, w);
}

std::vector<int> cell_index(const RegularPartition& part, const Eigen::Ref<const Eigen::VectorXd>& w) {
  std::vector<std::int64_t> along(part.t.size());
  for (int j = 0; j < part.dim(); ++j) along[static_cast<std::size_t>(j)] = part.cells_along(j);
  return cell_index_impl(along, w);
}

std::int64_t cell_rank(const std::vector<int>& idx, const std::vector<std::int64_t>& cells_along) {
  if (idx.size() != cells_along.size()) throw domain_error("cell_rank: dimension mismatch");
  std::int64_t rank = 0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= cells_along[j]) throw domain_error("cell_rank: index out of range");
    rank = rank * cells_along[j] + idx[j];
  }
  return rank;
}

// ---- piecewise polynomials ------------------------------------------------------

std::int64_t PiecewisePoly::cell_count() const {
  std::int64_t n = 1;
  for (auto c : cells_along) n *= c;
  return n;
}

std::int64_t PiecewisePoly::terms_per_cell() const {
  std::int64_t n = 1;
  for (int j = 0; j < dim(); ++j) n *= degree + 1;
  return n;
}

PiecewisePoly PiecewisePoly::on_dyadic(const DyadicPartition& part, int degree) {
  if (degree < 0) throw domain_error("piecewise poly: degree >= 0");
  PiecewisePoly p;
  for (int j = 0; j < part.dim(); ++j) {
    p.cells_along.push_back(part.cells_along(j));
    p.breaks_scale.push_back(static_cast<double>(part.cells_along(j)));
  }
  p.degree = degree;
  p.coeffs = Eigen::MatrixXd::Zero(p.cell_count(), p.terms_per_cell());
  return p;
}

PiecewisePoly PiecewisePoly::on_regular(const RegularPartition& part, int degree) {
  if (degree < 0) throw domain_error("piecewise poly: degree >= 0");
  PiecewisePoly p;
  for (int j = 0; j < part.dim(); ++j) {
    p.cells_along.push_back(part.cells_along(j));
    p.breaks_scale.push_back(static_cast<double>(part.cells_along(j)));
  }
  p.degree = degree;
  p.coeffs = Eigen::MatrixXd::Zero(p.cell_count(), p.terms_per_cell());
  return p;
}

double eval_piecewise(const PiecewisePoly& p, const Eigen::Ref<const Eigen::VectorXd>& w) {
  const auto idx = cell_index_impl(p.cells_along, w);
  const auto row = cell_rank(idx, p.cells_along);
  const int d = p.dim(), r = p.degree;

  // Per-axis powers w_j^0..w_j^r; multi-degrees run row-major, last axis fastest.
  Eigen::MatrixXd pow(d, r + 1);
  for (int j = 0; j < d; ++j) {
    pow(j, 0) = 1.0;
    for (int k = 1; k <= r; ++k) pow(j, k) = pow(j, k - 1) * w(j);
  }
  double total = 0.0;
  std::vector<int> deg(static_cast<std::size_t>(d), 0);
  for (std::int64_t term = 0; term < p.terms_per_cell(); ++term) {
    double mono = 1.0;
    for (int j = 0; j < d; ++j) mono *= pow(j, deg[static_cast<std::size_t>(j)]);
    total += p.coeffs(row, term) * mono;
    int j = d - 1;
    while (j >= 0 && deg[static_cast<std::size_t>(j)] == r) deg[static_cast<std::size_t>(j--)] = 0;
    if (j >= 0) deg[static_cast<std::size_t>(j)]++;
  }
  return total;
}

// ---- clamping -------------------------------------------------------------------

double clamp_value(double x, double v_minus, double v_plus) {
  if (!(v_minus < v_plus)) throw domain_error("clamp: v- must be below v+");
  return std::min(std::max(x, v_minus), v_plus);
}

double eval_clamped(const ClampedFunction& c, const Eigen::Ref<const Eigen::VectorXd>& w) {
  return clamp_value(c.inner(w), c.v_minus, c.v_plus);
}

// ---- composites ------------------------------------------------------------------

double eval_additive(const AdditiveComposite& a, const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (w.size() != static_cast<Eigen::Index>(a.g.size()))
    throw domain_error("eval_additive: dimension mismatch");
  Eigen::VectorXd one(1);
  double inner = 0.0;
  for (std::size_t j = 0; j < a.g.size(); ++j) {
    one(0) = w(static_cast<Eigen::Index>(j));
    inner += eval_piecewise(a.g[j], one);
  }
  one(0) = clamp_value(inner, 0.0, 1.0);
  return clamp_value(eval_piecewise(a.f, one), a.v_minus, a.v_plus);
}

MultiIndexComposite make_multi_index(const Eigen::MatrixXd& a, PiecewisePoly f,
                                     double v_minus, double v_plus) {
  if (a.rows() < 1) throw domain_error("multi-index: need at least one projection");
  if (f.dim() != a.rows()) throw domain_error("multi-index: f arity must equal the row count");
  for (Eigen::Index j = 0; j < a.rows(); ++j)
    if (a.row(j).cwiseAbs().sum() > 1.0 + 1e-12)
      throw domain_error("multi-index: direction outside the l1 unit ball");
  MultiIndexComposite mi;
  mi.a = a;
  mi.f = std::move(f);
  mi.v_minus = v_minus;
  mi.v_plus = v_plus;
  return mi;
}

double eval_multi_index(const MultiIndexComposite& mi, const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (w.size() != mi.a.cols()) throw domain_error("eval_multi_index: dimension mismatch");
  Eigen::VectorXd g = ((mi.a * w).array() + 1.0) / 2.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = clamp_value(g(j), 0.0, 1.0);
  return clamp_value(eval_piecewise(mi.f, g), mi.v_minus, mi.v_plus);
}

double eval_linear(const LinearVariableModel& lv, const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (w.size() != lv.p) throw domain_error("eval_linear: dimension mismatch");
  if (lv.support.size() != lv.coefficients.size())
    throw domain_error("eval_linear: support/coefficient mismatch");
  double v = 0.0;
  for (std::size_t j = 0; j < lv.support.size(); ++j) {
    const int c = lv.support[j];
    if (c < 0 || c >= lv.p) throw domain_error("eval_linear: support coordinate out of range");
    v += lv.coefficients[j] * w(c);
  }
  return clamp_value(v, lv.v_minus, lv.v_plus);
}

// ---- menu enumeration -------------------------------------------------------------

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

// All vectors in {lo..hi}^d, in lexicographic order.
std::vector<std::vector<int>> boxed_tuples(int d, int lo, int hi) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(d), lo);
  while (true) {
    out.push_back(cur);
    int j = d - 1;
    while (j >= 0 && cur[static_cast<std::size_t>(j)] == hi) cur[static_cast<std::size_t>(j--)] = lo;
    if (j < 0) break;
    cur[static_cast<std::size_t>(j)]++;
  }
  return out;
}

int sum_of(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); }

void sort_graded(std::vector<std::pair<int, MenuModel>>& graded) {
  std::stable_sort(graded.begin(), graded.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
}

std::vector<MenuModel> strip_grades(std::vector<std::pair<int, MenuModel>>&& graded) {
  sort_graded(graded);
  std::vector<MenuModel> out;
  out.reserve(graded.size());
  for (auto& g : graded) out.push_back(std::move(g.second));
  return out;
}

// All supports of {0..p-1} with size <= cap, by size then lexicographic.
void emit_supports(int p, int cap, std::vector<std::vector<int>>& out) {
  out.push_back({});
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) > 0) out.push_back(cur);
    if (static_cast<int>(cur.size()) == cap) return;
    for (int j = start; j < p; ++j) {
      cur.push_back(j);
      rec(j + 1);
      cur.pop_back();
    }
  };
  rec(0);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
}

}  // namespace

std::vector<MenuModel> enumerate_menu(const MenuBudgets& b) {
  std::vector<std::pair<int, MenuModel>> graded;

  switch (b.kind) {
    case FamilyKind::DyadicPoly: {
      if (b.dim < 1 || b.s_max < 0 || b.r_max < 0) throw config_error("menu: bad dyadic budgets");
      for (const auto& s : boxed_tuples(b.dim, 0, b.s_max)) {
        for (int r = 0; r <= b.r_max; ++r) {
          MenuModel m;
          m.index.kind = FamilyKind::DyadicPoly;
          m.index.s = s;
          m.index.r = r;
          m.index.id = "dyadic(s=" + join_ints(s) + ";r=" + std::to_string(r) + ")";
          m.V = vc_dyadic(s, r);
          m.Delta = weight_dyadic(s, r, b.dim);
          graded.emplace_back(sum_of(s) + r, std::move(m));
        }
      }
      break;
    }
    case FamilyKind::HolderPoly: {
      if (b.dim < 1 || b.t_max < 1 || b.r_max < 0) throw config_error("menu: bad holder budgets");
      for (const auto& t : boxed_tuples(b.dim, 1, b.t_max)) {
        for (int r = 0; r <= b.r_max; ++r) {
          std::int64_t cells = 1;
          for (int tj : t) cells *= tj;
          MenuModel m;
          m.index.kind = FamilyKind::HolderPoly;
          m.index.t = t;
          m.index.r = r;
          m.index.id = "holder(t=" + join_ints(t) + ";r=" + std::to_string(r) + ")";
          m.V = vc_partition(cells, r, b.dim);
          m.Delta = weight_partition(cells, r, b.dim);
          graded.emplace_back(sum_of(t) - b.dim + r, std::move(m));
        }
      }
      break;
    }
    case FamilyKind::Additive: {
      if (b.dim < 1 || b.s_max < 0 || b.t_max < 1 || b.r_max < 0)
        throw config_error("menu: bad additive budgets");
      for (const auto& s : boxed_tuples(b.dim, 0, b.s_max)) {
        std::vector<std::int64_t> pi(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) pi[j] = std::int64_t{1} << s[j];
        for (int t = 1; t <= b.t_max; ++t) {
          for (int r = 0; r <= b.r_max; ++r) {
            MenuModel m;
            m.index.kind = FamilyKind::Additive;
            m.index.s = s;
            m.index.t = {t};
            m.index.r = r;
            m.index.id = "additive(s=" + join_ints(s) + ";t=" + std::to_string(t) +
                         ";r=" + std::to_string(r) + ")";
            m.V = vc_additive(pi, t, r);
            m.Delta = weight_additive(pi, t, r);
            graded.emplace_back(sum_of(s) + (t - 1) + r, std::move(m));
          }
        }
      }
      break;
    }
    case FamilyKind::MultiIndexKind: {
      if (b.dim < 1 || b.l < 1 || b.t_max < 1 || b.r_max < 0)
        throw config_error("menu: bad multi-index budgets");
      for (const auto& t : boxed_tuples(b.l, 1, b.t_max)) {
        for (int r = 0; r <= b.r_max; ++r) {
          MenuModel m;
          m.index.kind = FamilyKind::MultiIndexKind;
          m.index.t = t;
          m.index.r = r;
          m.index.l = b.l;
          m.index.id = "multi(t=" + join_ints(t) + ";r=" + std::to_string(r) + ")";
          m.V = vc_multi(t, r, b.l, b.dim);
          m.Delta = weight_multi(t, r);
          graded.emplace_back(sum_of(t) - b.l + r, std::move(m));
        }
      }
      break;
    }
    case FamilyKind::LinearVarsel: {
      if (b.p < 1 || b.max_support < 0 || b.max_support > b.p)
        throw config_error("menu: bad variable-selection budgets");
      std::vector<std::vector<int>> supports;
      emit_supports(b.p, b.max_support, supports);
      for (const auto& m0 : supports) {
        MenuModel m;
        m.index.kind = FamilyKind::LinearVarsel;
        m.index.support = m0;
        std::vector<int> shown;
        for (int c : m0) shown.push_back(c + 1);
        m.index.id = "varsel{" + join_ints(shown) + "}";
        m.V = vc_varsel(static_cast<int>(m0.size()));
        m.Delta = weight_varsel(m0, b.p);
        graded.emplace_back(static_cast<int>(m0.size()), std::move(m));
      }
      break;
    }
    case FamilyKind::Relu: {
      if (b.dim < 1 || b.L_max < 1 || b.p_max < 1) throw config_error("menu: bad relu budgets");
      for (int L = 1; L <= b.L_max; ++L) {
        for (int p = 1; p <= b.p_max; ++p) {
          MenuModel m;
          m.index.kind = FamilyKind::Relu;
          m.index.L = L;
          m.index.p_width = p;
          m.index.id = "relu(L=" + std::to_string(L) + ";p=" + std::to_string(p) + ")";
          m.V = vc_neural(L, p, param_count({L, p, b.dim}));
          m.Delta = weight_neural_dense(L, p);
          graded.emplace_back((L - 1) + (p - 1), std::move(m));
        }
      }
      break;
    }
  }
  return strip_grades(std::move(graded));
}

// ---- fitting ---------------------------------------------------------------------

double snap_to_grid(double x, double pitch) {
  if (!(pitch > 0.0)) throw domain_error("snap_to_grid: pitch must be positive");
  if (!std::isfinite(x)) throw numeric_error("snap_to_grid: non-finite value");
  return std::round(x / pitch) * pitch;
}

namespace {

// The working clamp interval: the configured [v-, v+] intersected with the
// parametrization's own interval.
std::pair<double, double> clamp_bounds(const LawContext& ctx, const FitOptions& opt) {
  const double lo = std::max(opt.v_minus, ctx.param.lo);
  const double hi = std::min(opt.v_plus, ctx.param.hi);
  if (!(lo < hi)) throw config_error("fit: clamp interval is empty");
  return {lo, hi};
}

double snap_clamped(double x, double pitch, double lo, double hi) {
  return clamp_value(snap_to_grid(clamp_value(x, lo, hi), pitch), lo, hi);
}

// gamma for a constant fit on the responses' mean.
double constant_gamma(const LawContext& ctx, double ybar, double lo, double hi) {
  const double theta = ctx.family.mean_to_natural(ybar);
  double g;
  if (theta == -std::numeric_limits<double>::infinity() ||
      theta == std::numeric_limits<double>::infinity()) {
    // Degenerate sample mean at the family boundary: the clamp decides.
    g = theta < 0 ? -std::numeric_limits<double>::infinity()
                  : std::numeric_limits<double>::infinity();
    if (ctx.param.kind != ParamKind::Natural) {
      // Monotone maps carry the boundary to the matching end of the range.
      g = theta < 0 ? lo - 1.0 : hi + 1.0;
    }
  } else {
    g = ctx.param.from_natural(theta);
  }
  if (std::isnan(g)) throw numeric_error("fit: constant fit produced NaN");
  return clamp_value(g, lo, hi);
}

// Is gamma = a * theta + b over the natural range the fit works in?
struct AffineLink {
  bool is_affine = false;
  double a = 1.0, b = 0.0;
};

AffineLink detect_affine_link(const LawContext& ctx, double lo, double hi) {
  AffineLink link;
  if (ctx.param.kind == ParamKind::Natural) {
    link.is_affine = true;
    return link;
  }
  const double ta = ctx.param.to_natural(lo), tb = ctx.param.to_natural(hi);
  const double mid = 0.5 * (ta + tb);
  const double fa = ctx.param.from_natural(ta), fb = ctx.param.from_natural(tb);
  const double fm = ctx.param.from_natural(mid);
  const double scale = std::max({1.0, std::abs(fa), std::abs(fb)});
  if (std::abs(fm - 0.5 * (fa + fb)) <= 1e-10 * scale) {
    link.is_affine = true;
    link.a = (fb - fa) / (tb - ta);
    link.b = fa - link.a * ta;
  }
  return link;
}

// Monomial basis values at one point, row-major over multi-degrees (last axis
// fastest), matching eval_piecewise.
void monomials(const Eigen::Ref<const Eigen::VectorXd>& w, int r, Eigen::VectorXd& out) {
  const int d = static_cast<int>(w.size());
  std::vector<int> deg(static_cast<std::size_t>(d), 0);
  Eigen::MatrixXd pow(d, r + 1);
  for (int j = 0; j < d; ++j) {
    pow(j, 0) = 1.0;
    for (int k = 1; k <= r; ++k) pow(j, k) = pow(j, k - 1) * w(j);
  }
  for (Eigen::Index term = 0; term < out.size(); ++term) {
    double mono = 1.0;
    for (int j = 0; j < d; ++j) mono *= pow(j, deg[static_cast<std::size_t>(j)]);
    out(term) = mono;
    int j = d - 1;
    while (j >= 0 && deg[static_cast<std::size_t>(j)] == r) deg[static_cast<std::size_t>(j--)] = 0;
    if (j >= 0) deg[static_cast<std::size_t>(j)]++;
  }
}

// Damped Newton ascent of the natural-parameter likelihood
// sum_i theta(w_i) T(y_i) - A(theta(w_i)) with theta = <c, basis(w)>.
// Concave in c, so plain halving damping converges.
Eigen::VectorXd newton_poly_fit(const std::vector<Eigen::VectorXd>& basis,
                                const std::vector<double>& suff,
                                const ExponentialFamily& fam, double theta_lo, double theta_hi,
                                const Eigen::VectorXd& init) {
  const auto P = init.size();
  Eigen::VectorXd c = init;
  auto theta_at = [&](const Eigen::VectorXd& cc, std::size_t i) {
    return clamp_value(cc.dot(basis[i]), theta_lo, theta_hi);
  };
  auto loglik = [&](const Eigen::VectorXd& cc) {
    double s = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const double th = theta_at(cc, i);
      s += th * suff[i] - fam.log_partition(th);
    }
    return s;
  };
  double cur = loglik(c);
  for (int iter = 0; iter < 60; ++iter) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(P);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(P, P);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const double th = theta_at(c, i);
      grad += (suff[i] - fam.log_partition_d(th)) * basis[i];
      hess += fam.log_partition_dd(th) * basis[i] * basis[i].transpose();
    }
    hess.diagonal().array() += 1e-9 * (hess.trace() + 1.0);
    Eigen::VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) break;
    double scale = 1.0;
    bool moved = false;
    for (int half = 0; half < 30; ++half) {
      const Eigen::VectorXd cand = c + scale * step;
      const double val = loglik(cand);
      if (std::isfinite(val) && val > cur) {
        c = cand;
        cur = val;
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved || grad.norm() < 1e-10 * (1.0 + std::abs(cur))) break;
  }
  return c;
}

struct CellAssignment {
  std::vector<std::vector<Eigen::Index>> members;  // per cell rank
  bool any_empty = false;
};

CellAssignment assign_cells(const Dataset& data, const std::vector<std::int64_t>& along) {
  CellAssignment out;
  std::int64_t cells = 1;
  for (auto c : along) cells *= c;
  out.members.resize(static_cast<std::size_t>(cells));
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const auto idx = cell_index_impl(along, data.W.row(i).transpose());
    out.members[static_cast<std::size_t>(cell_rank(idx, along))].push_back(i);
  }
  for (const auto& m : out.members) out.any_empty |= m.empty();
  return out;
}

// Piecewise-polynomial MLE on a partition: closed-form means for r = 0, cellwise
// concave Newton in the natural parameter otherwise. Returns an evaluator in
// gamma space plus the fallback flag.
struct PartitionFit {
  PiecewisePoly poly;       // in gamma space when the link is affine
  bool gamma_space = true;  // false: poly is in natural space, map through the link
  bool fallback = false;
};

PartitionFit fit_partition(const Dataset& data, const std::vector<std::int64_t>& along, int r,
                           const LawContext& ctx, const FitOptions& opt, double lo, double hi) {
  PartitionFit out;
  PiecewisePoly poly;
  poly.cells_along = along;
  for (auto c : along) poly.breaks_scale.push_back(static_cast<double>(c));
  poly.degree = r;
  poly.coeffs = Eigen::MatrixXd::Zero(poly.cell_count(), poly.terms_per_cell());

  const auto cellmap = assign_cells(data, along);
  out.fallback = cellmap.any_empty;

  // Global constant fit: the value empty cells fall back to.
  const double ybar_all = data.Y.mean();
  const double gamma_global = constant_gamma(ctx, ybar_all, lo, hi);

  if (r == 0) {
    for (std::size_t cell = 0; cell < cellmap.members.size(); ++cell) {
      double g;
      if (cellmap.members[cell].empty()) {
        g = gamma_global;
      } else {
        double sum = 0.0;
        for (auto i : cellmap.members[cell]) sum += data.Y(i);
        g = constant_gamma(ctx, sum / static_cast<double>(cellmap.members[cell].size()), lo, hi);
      }
      poly.coeffs(static_cast<Eigen::Index>(cell), 0) = snap_clamped(g, opt.grid_pitch, lo, hi);
    }
    out.poly = std::move(poly);
    out.gamma_space = true;
    return out;
  }

  const AffineLink link = detect_affine_link(ctx, lo, hi);
  const double theta_lo = std::min(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
  const double theta_hi = std::max(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
  const double theta_global = ctx.param.to_natural(gamma_global);

  for (std::size_t cell = 0; cell < cellmap.members.size(); ++cell) {
    const auto& mem = cellmap.members[cell];
    Eigen::VectorXd c;
    if (mem.empty()) {
      c = Eigen::VectorXd::Zero(poly.terms_per_cell());
      c(0) = theta_global;
    } else {
      std::vector<Eigen::VectorXd> basis;
      std::vector<double> suff;
      basis.reserve(mem.size());
      suff.reserve(mem.size());
      for (auto i : mem) {
        Eigen::VectorXd b(poly.terms_per_cell());
        monomials(data.W.row(i).transpose(), r, b);
        basis.push_back(std::move(b));
        suff.push_back(ctx.family.suff_stat(data.Y(i)));
      }
      double ysum = 0.0;
      for (auto i : mem) ysum += data.Y(i);
      Eigen::VectorXd init = Eigen::VectorXd::Zero(poly.terms_per_cell());
      init(0) = ctx.param.to_natural(
          constant_gamma(ctx, ysum / static_cast<double>(mem.size()), lo, hi));
      c = newton_poly_fit(basis, suff, ctx.family, theta_lo, theta_hi, init);
    }
    if (link.is_affine) {
      // Convert to gamma space exactly, then snap there.
      Eigen::VectorXd cg = link.a * c;
      cg(0) += link.b;
      for (Eigen::Index k = 0; k < cg.size(); ++k)
        cg(k) = snap_to_grid(cg(k), opt.grid_pitch);
      poly.coeffs.row(static_cast<Eigen::Index>(cell)) = cg.transpose();
    } else {
      for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = snap_to_grid(c(k), opt.grid_pitch);
      poly.coeffs.row(static_cast<Eigen::Index>(cell)) = c.transpose();
    }
  }
  out.poly = std::move(poly);
  out.gamma_space = link.is_affine;
  return out;
}

Candidate partition_candidate(const std::string& id, PartitionFit fit, const LawContext& ctx,
                              double lo, double hi) {
  Candidate cand;
  cand.id = id;
  if (fit.gamma_space) {
    auto poly = std::make_shared<PiecewisePoly>(std::move(fit.poly));
    cand.eval = [poly, lo, hi](const Eigen::Ref<const Eigen::VectorXd>& w) {
      return clamp_value(eval_piecewise(*poly, w), lo, hi);
    };
  } else {
    auto poly = std::make_shared<PiecewisePoly>(std::move(fit.poly));
    auto from_nat = ctx.param.from_natural;
    const double tlo = std::min(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
    const double thi = std::max(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
    cand.eval = [poly, from_nat, lo, hi, tlo, thi](const Eigen::Ref<const Eigen::VectorXd>& w) {
      const double theta = clamp_value(eval_piecewise(*poly, w), tlo, thi);
      return clamp_value(from_nat(theta), lo, hi);
    };
  }
  return cand;
}

// Variable-selection GLM fit by concave Newton on theta = <c, w_support>,
// clamped into the working natural range.
Candidate fit_varsel(const Dataset& data, const std::vector<int>& support, const LawContext& ctx,
                     const FitOptions& opt, double lo, double hi, const std::string& id) {
  const int p = static_cast<int>(data.dim());
  LinearVariableModel lv;
  lv.p = p;
  lv.support = support;
  lv.v_minus = lo;
  lv.v_plus = hi;

  if (!support.empty()) {
    const double tlo = std::min(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
    const double thi = std::max(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
    std::vector<Eigen::VectorXd> basis;
    std::vector<double> suff;
    basis.reserve(static_cast<std::size_t>(data.n()));
    suff.reserve(static_cast<std::size_t>(data.n()));
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      Eigen::VectorXd b(support.size());
      for (std::size_t j = 0; j < support.size(); ++j) b(static_cast<Eigen::Index>(j)) = data.W(i, support[j]);
      basis.push_back(std::move(b));
      suff.push_back(ctx.family.suff_stat(data.Y(i)));
    }
    const Eigen::VectorXd c = newton_poly_fit(
        basis, suff, ctx.family, tlo, thi,
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(support.size())));
    lv.coefficients.resize(support.size());
    for (std::size_t j = 0; j < support.size(); ++j)
      lv.coefficients[j] = snap_to_grid(c(static_cast<Eigen::Index>(j)), opt.grid_pitch);
  }

  // The linear predictor lives on the natural scale; map it back when the
  // parametrization is not the natural one.
  Candidate cand;
  cand.id = id;
  if (ctx.param.kind == ParamKind::Natural) {
    auto model = std::make_shared<LinearVariableModel>(std::move(lv));
    cand.eval = [model](const Eigen::Ref<const Eigen::VectorXd>& w) { return eval_linear(*model, w); };
  } else {
    const double tlo = std::min(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
    const double thi = std::max(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
    LinearVariableModel nat = lv;
    nat.v_minus = tlo;
    nat.v_plus = thi;
    auto model = std::make_shared<LinearVariableModel>(std::move(nat));
    auto from_nat = ctx.param.from_natural;
    cand.eval = [model, from_nat, lo, hi](const Eigen::Ref<const Eigen::VectorXd>& w) {
      return clamp_value(from_nat(eval_linear(*model, w)), lo, hi);
    };
  }
  return cand;
}

// Backfitting for the additive composite: seeded restarts over random inner
// inits, least-squares refits of each g_j on the inner scale, then a cellwise
// MLE of f on the clamped inner sums. The best restart by likelihood wins.
FitResult fit_additive(const Dataset& data, const ModelIndex& index, const LawContext& ctx,
                       const FitOptions& opt, double lo, double hi) {
  const int d = static_cast<int>(data.dim());
  const int t = index.t.at(0);
  const int r = index.r;
  const auto n = data.n();

  // Inner working response: responses rescaled into [0,1].
  const double ymin = data.Y.minCoeff(), ymax = data.Y.maxCoeff();
  const double span = (ymax > ymin) ? (ymax - ymin) : 1.0;
  Eigen::VectorXd z = (data.Y.array() - ymin) / span;

  auto loglik_of = [&](const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& f) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      s += log_density(ctx, f(data.W.row(i).transpose()), data.Y(i));
    return s;
  };

  std::mt19937_64 rng(opt.seed ^ 0x5eedadd1u);
  FitResult best;
  double best_ll = -std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < std::max(1, opt.restarts); ++restart) {
    // Per-axis dyadic pieces for the g_j.
    std::vector<PiecewisePoly> g;
    for (int j = 0; j < d; ++j) {
      DyadicPartition part{{index.s.at(static_cast<std::size_t>(j))}};
      g.push_back(PiecewisePoly::on_dyadic(part, r));
    }
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);
    Eigen::VectorXd target = z;
    if (restart > 0)
      for (Eigen::Index i = 0; i < n; ++i) target(i) = clamp_value(z(i) + jitter(rng), 0.0, 1.0);

    // Backfitting sweeps: refit each g_j against the residual by per-cell
    // least squares, sharing the target equally across axes at the start.
    Eigen::MatrixXd gvals = Eigen::MatrixXd::Zero(n, d);
    for (int sweep = 0; sweep < std::max(1, opt.sweeps); ++sweep) {
      for (int j = 0; j < d; ++j) {
        Eigen::VectorXd resid = target;
        for (int k = 0; k < d; ++k)
          if (k != j) resid -= gvals.col(k);
        // Least-squares piecewise fit of resid on w_j.
        const auto& along = g[static_cast<std::size_t>(j)].cells_along;
        std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(along[0]));
        for (Eigen::Index i = 0; i < n; ++i)
          members[static_cast<std::size_t>(axis_cell(data.W(i, j), along[0]))].push_back(i);
        for (std::size_t cell = 0; cell < members.size(); ++cell) {
          const auto& mem = members[cell];
          const auto terms = g[static_cast<std::size_t>(j)].terms_per_cell();
          if (mem.empty()) continue;
          Eigen::MatrixXd X(mem.size(), terms);
          Eigen::VectorXd yv(mem.size());
          Eigen::VectorXd brow(terms);
          for (std::size_t ii = 0; ii < mem.size(); ++ii) {
            Eigen::VectorXd one(1);
            one << data.W(mem[ii], j);
            monomials(one, r, brow);
            X.row(static_cast<Eigen::Index>(ii)) = brow.transpose();
            yv(static_cast<Eigen::Index>(ii)) = resid(mem[ii]);
          }
          Eigen::MatrixXd gram = X.transpose() * X;
          gram.diagonal().array() += 1e-9;
          const Eigen::VectorXd beta = gram.ldlt().solve(X.transpose() * yv);
          g[static_cast<std::size_t>(j)].coeffs.row(static_cast<Eigen::Index>(cell)) =
              beta.transpose();
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          Eigen::VectorXd one(1);
          one << data.W(i, j);
          gvals(i, j) = eval_piecewise(g[static_cast<std::size_t>(j)], one);
        }
      }
    }

    // Snap the inner coefficients.
    for (auto& gj : g)
      for (Eigen::Index a = 0; a < gj.coeffs.rows(); ++a)
        for (Eigen::Index bcol = 0; bcol < gj.coeffs.cols(); ++bcol)
          gj.coeffs(a, bcol) = snap_to_grid(gj.coeffs(a, bcol), opt.grid_pitch);

    // Outer stage: per-cell MLE of f on (inner(w_i), y_i).
    Dataset inner;
    inner.W = Eigen::MatrixXd(n, 1);
    inner.Y = data.Y;
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += gvals(i, j);
      inner.W(i, 0) = clamp_value(s, 0.0, 1.0);
    }
    auto ffit = fit_partition(inner, {t}, r, ctx, opt, lo, hi);

    AdditiveComposite comp;
    comp.g = std::move(g);
    comp.v_minus = lo;
    comp.v_plus = hi;
    bool gamma_space = ffit.gamma_space;
    comp.f = std::move(ffit.poly);

    auto shared = std::make_shared<AdditiveComposite>(std::move(comp));
    std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> eval;
    if (gamma_space) {
      eval = [shared](const Eigen::Ref<const Eigen::VectorXd>& w) { return eval_additive(*shared, w); };
    } else {
      auto from_nat = ctx.param.from_natural;
      const double tlo = std::min(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
      const double thi = std::max(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
      eval = [shared, from_nat, lo, hi, tlo, thi](const Eigen::Ref<const Eigen::VectorXd>& w) {
        AdditiveComposite wide = *shared;
        wide.v_minus = tlo;
        wide.v_plus = thi;
        return clamp_value(from_nat(eval_additive(wide, w)), lo, hi);
      };
    }
    const double ll = loglik_of(eval);
    if (ll > best_ll) {
      best_ll = ll;
      best.candidate.id = index.id;
      best.candidate.eval = eval;
      best.empty_cell_fallback = ffit.fallback;
    }
  }
  return best;
}

// Multi-index fit: seeded random l1-ball directions with a per-restart
// partition MLE of f on the projected covariates; best likelihood wins.
FitResult fit_multi_index(const Dataset& data, const ModelIndex& index, const LawContext& ctx,
                          const FitOptions& opt, double lo, double hi) {
  const int d = static_cast<int>(data.dim());
  const int l = index.l;
  const auto n = data.n();

  std::mt19937_64 rng(opt.seed ^ 0x3321dull);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto loglik_of = [&](const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& f) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      s += log_density(ctx, f(data.W.row(i).transpose()), data.Y(i));
    return s;
  };

  FitResult best;
  double best_ll = -std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < std::max(1, opt.restarts); ++restart) {
    Eigen::MatrixXd a(l, d);
    if (restart == 0 && l <= d) {
      a.setZero();
      for (int j = 0; j < l; ++j) a(j, j) = 1.0;  // axis-aligned start
    } else {
      for (int j = 0; j < l; ++j) {
        for (int k = 0; k < d; ++k) a(j, k) = gauss(rng);
        const double norm = a.row(j).cwiseAbs().sum();
        if (norm > 0.0) a.row(j) /= norm;
      }
    }
    for (int j = 0; j < l; ++j)
      for (int k = 0; k < d; ++k) a(j, k) = snap_to_grid(a(j, k), opt.grid_pitch);
    // Snapping may push the l1 norm a hair over 1; rescale the offender.
    for (int j = 0; j < l; ++j) {
      const double norm = a.row(j).cwiseAbs().sum();
      if (norm > 1.0) a.row(j) /= norm * (1.0 + 1e-12);
    }

    // Project, then fit f cellwise on the projected points.
    Dataset proj;
    proj.W = Eigen::MatrixXd(n, l);
    proj.Y = data.Y;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd gproj = ((a * data.W.row(i).transpose()).array() + 1.0) / 2.0;
      for (int j = 0; j < l; ++j) proj.W(i, j) = clamp_value(gproj(j), 0.0, 1.0);
    }
    std::vector<std::int64_t> along;
    for (int tj : index.t) along.push_back(tj);
    auto ffit = fit_partition(proj, along, index.r, ctx, opt, lo, hi);
    const bool gamma_space = ffit.gamma_space;

    auto fshared = std::make_shared<PiecewisePoly>(std::move(ffit.poly));
    auto amat = std::make_shared<Eigen::MatrixXd>(a);
    auto project_eval = [amat, fshared](const Eigen::Ref<const Eigen::VectorXd>& w) {
      Eigen::VectorXd gproj = ((*amat * w).array() + 1.0) / 2.0;
      for (Eigen::Index j = 0; j < gproj.size(); ++j) gproj(j) = clamp_value(gproj(j), 0.0, 1.0);
      return eval_piecewise(*fshared, gproj);
    };
    std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> eval;
    if (gamma_space) {
      eval = [project_eval, lo, hi](const Eigen::Ref<const Eigen::VectorXd>& w) {
        return clamp_value(project_eval(w), lo, hi);
      };
    } else {
      auto from_nat = ctx.param.from_natural;
      const double tlo = std::min(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
      const double thi = std::max(ctx.param.to_natural(lo), ctx.param.to_natural(hi));
      eval = [project_eval, from_nat, lo, hi, tlo, thi](const Eigen::Ref<const Eigen::VectorXd>& w) {
        return clamp_value(from_nat(clamp_value(project_eval(w), tlo, thi)), lo, hi);
      };
    }
    const double ll = loglik_of(eval);
    if (ll > best_ll) {
      best_ll = ll;
      best.candidate.id = index.id;
      best.candidate.eval = eval;
      best.empty_cell_fallback = ffit.fallback;
    }
  }
  return best;
}

// Relu fit: seeded random parameter draws, pick the likelihood maximizer.
// Candidates only need to be members of the class; the tournament does the
// statistical work.
FitResult fit_relu(const Dataset& data, const ModelIndex& index, const LawContext& ctx,
                   const FitOptions& opt, double lo, double hi) {
  const MlpArchitecture arch{index.L, index.p_width, static_cast<int>(data.dim())};
  const auto total = param_count(arch);
  std::mt19937_64 rng(opt.seed ^ 0x2e1ull);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto loglik_of = [&](const ReluNetwork& net) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const double gmm = clamp_value(forward(net, data.W.row(i).transpose()), lo, hi);
      s += log_density(ctx, gmm, data.Y(i));
    }
    return s;
  };

  FitResult best;
  double best_ll = -std::numeric_limits<double>::infinity();
  const int draws = std::max(1, opt.restarts) * 8;
  for (int k = 0; k < draws; ++k) {
    Eigen::VectorXd params(total);
    const double spread = (k == 0) ? 0.0 : 1.0 / std::sqrt(static_cast<double>(arch.p));
    for (Eigen::Index i = 0; i < total; ++i)
      params(i) = snap_to_grid(spread * gauss(rng), opt.grid_pitch);
    if (k == 0) {
      // The constant-at-global-fit network: zero layers, bias at the mean fit.
      params.setZero();
      const double g0 = constant_gamma(ctx, data.Y.mean(), lo, hi);
      params(total - 1) = snap_to_grid(g0, opt.grid_pitch);
    }
    auto net = ReluNetwork::from_params(arch, SparsityMask::dense(arch), params);
    const double ll = loglik_of(net);
    if (ll > best_ll) {
      best_ll = ll;
      auto shared = std::make_shared<ReluNetwork>(std::move(net));
      best.candidate.id = index.id;
      best.candidate.eval = [shared, lo, hi](const Eigen::Ref<const Eigen::VectorXd>& w) {
        return clamp_value(forward(*shared, w), lo, hi);
      };
    }
  }
  return best;
}

}  // namespace

FitResult fit_model(const Dataset& data, const ModelIndex& index, const LawContext& ctx,
                    const FitOptions& opt) {
  if (data.n() < 1) throw domain_error("fit_model: empty dataset");
  const auto [lo, hi] = clamp_bounds(ctx, opt);
  // Partition models carry no value clamp of their own; they snap within the
  // full parameter interval. Composite models clamp to [v-, v+].
  const double plo = ctx.param.lo, phi = ctx.param.hi;

  switch (index.kind) {
    case FamilyKind::DyadicPoly: {
      if (static_cast<Eigen::Index>(index.s.size()) != data.dim())
        throw domain_error("fit_model: dyadic s does not match the covariate dimension");
      std::vector<std::int64_t> along;
      for (int sj : index.s) along.push_back(std::int64_t{1} << sj);
      auto fit = fit_partition(data, along, index.r, ctx, opt, plo, phi);
      FitResult out;
      out.empty_cell_fallback = fit.fallback;
      out.candidate = partition_candidate(index.id, std::move(fit), ctx, plo, phi);
      return out;
    }
    case FamilyKind::HolderPoly: {
      if (static_cast<Eigen::Index>(index.t.size()) != data.dim())
        throw domain_error("fit_model: partition t does not match the covariate dimension");
      std::vector<std::int64_t> along;
      for (int tj : index.t) along.push_back(tj);
      auto fit = fit_partition(data, along, index.r, ctx, opt, plo, phi);
      FitResult out;
      out.empty_cell_fallback = fit.fallback;
      out.candidate = partition_candidate(index.id, std::move(fit), ctx, plo, phi);
      return out;
    }
    case FamilyKind::Additive:
      return fit_additive(data, index, ctx, opt, lo, hi);
    case FamilyKind::MultiIndexKind:
      return fit_multi_index(data, index, ctx, opt, lo, hi);
    case FamilyKind::LinearVarsel: {
      FitResult out;
      out.candidate = fit_varsel(data, index.support, ctx, opt, lo, hi, index.id);
      return out;
    }
    case FamilyKind::Relu:
      return fit_relu(data, index, ctx, opt, lo, hi);
  }
  throw domain_error("fit_model: unknown family kind");
}

std::vector<int> screen_coordinates(const Dataset& data, const LawContext& ctx, int top_k) {
  (void)ctx;
  const int p = static_cast<int>(data.dim());
  if (top_k < 1 || top_k > p) throw domain_error("screen_coordinates: top_k out of range");
  const auto n = data.n();
  const double ybar = data.Y.mean();
  std::vector<std::pair<double, int>> scored;
  scored.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    const double wbar = data.W.col(j).mean();
    double cov = 0.0, var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double cw = data.W(i, j) - wbar;
      cov += cw * (data.Y(i) - ybar);
      var += cw * cw;
    }
    const double score = var > 0.0 ? std::abs(cov) / std::sqrt(var) : 0.0;
    scored.emplace_back(-score, j);  // negative: sort ascending = best first
  }
  std::stable_sort(scored.begin(), scored.end());
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(top_k));
  for (int k = 0; k < top_k; ++k) out.push_back(scored[static_cast<std::size_t>(k)].second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rhosel

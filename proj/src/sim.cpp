#include "rhosel/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rhosel/complexity.hpp"
#include "rhosel/neural.hpp"

namespace rhosel {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream ^ 0x632be59bd9b4e019ull));
}

// ---- scenario parsing --------------------------------------------------------

namespace {

FamilyKind menu_kind_from_name(const std::string& name) {
  if (name == "dyadic-poly") return FamilyKind::DyadicPoly;
  if (name == "holder-poly") return FamilyKind::HolderPoly;
  if (name == "additive") return FamilyKind::Additive;
  if (name == "multi-index") return FamilyKind::MultiIndexKind;
  if (name == "varsel") return FamilyKind::LinearVarsel;
  if (name == "relu") return FamilyKind::Relu;
  throw config_error("unknown menu family: " + name);
}

}  // namespace

LawContext law_context(const ScenarioConfig& sc) {
  ExponentialFamily fam = family_from_id(sc.family_id);
  Parametrization param;
  if (sc.parametrization_id == "vst" && sc.vst_theta_lo < sc.vst_theta_hi) {
    param = variance_stabilize(fam, sc.vst_anchor, sc.vst_theta_lo, sc.vst_theta_hi);
  } else {
    param = parametrization_from_id(fam, sc.parametrization_id, sc.param_lo, sc.param_hi);
  }
  return LawContext{std::move(fam), std::move(param)};
}

ScenarioConfig scenario_from_config(const ConfigMap& cfg) {
  ScenarioConfig sc;
  sc.family_id = cfg.get_string("scenario.family", sc.family_id);
  sc.parametrization_id = cfg.get_string("scenario.parametrization", sc.parametrization_id);
  sc.param_lo = cfg.get_double("scenario.param_lo", sc.param_lo);
  sc.param_hi = cfg.get_double("scenario.param_hi", sc.param_hi);
  sc.vst_anchor = cfg.get_double("scenario.vst_anchor", 0.0);
  sc.vst_theta_lo = cfg.get_double("scenario.vst_theta_lo", 0.0);
  sc.vst_theta_hi = cfg.get_double("scenario.vst_theta_hi", 0.0);
  sc.n = cfg.get_int("scenario.n", sc.n);
  sc.covariate_dim = static_cast<int>(cfg.get_int("scenario.covariate_dim", sc.covariate_dim));
  sc.covariate_law = cfg.get_string("scenario.covariate_law", sc.covariate_law);
  sc.mc_points = cfg.get_int("scenario.mc_points", sc.mc_points);
  sc.seed_data = static_cast<std::uint64_t>(cfg.get_int("scenario.seed_data", 1));
  sc.seed_fit = static_cast<std::uint64_t>(cfg.get_int("scenario.seed_fit", 2));
  sc.seed_mc = static_cast<std::uint64_t>(cfg.get_int("scenario.seed_mc", 3));
  sc.grid_pitch = cfg.get_double("scenario.grid_pitch", sc.grid_pitch);
  sc.report_path = cfg.get_string("scenario.report", "");

  sc.truth.kind = cfg.get_string("truth.kind", sc.truth.kind);
  if (cfg.has("truth.values")) sc.truth.values = cfg.get_doubles("truth.values");
  sc.truth.cells = static_cast<int>(cfg.get_int("truth.cells", sc.truth.cells));
  sc.truth.amplitude = cfg.get_double("truth.amplitude", sc.truth.amplitude);
  if (cfg.has("truth.support")) {
    sc.truth.support.clear();
    for (double v : cfg.get_doubles("truth.support"))
      sc.truth.support.push_back(static_cast<int>(v));
  }
  if (cfg.has("truth.coefficients")) sc.truth.coefficients = cfg.get_doubles("truth.coefficients");
  sc.truth.takagi_terms = static_cast<int>(cfg.get_int("truth.takagi_terms", sc.truth.takagi_terms));
  sc.truth.takagi_t = cfg.get_double("truth.takagi_t", sc.truth.takagi_t);

  sc.contamination.epsilon = cfg.get_double("contamination.epsilon", 0.0);
  sc.contamination.outlier = cfg.get_string("contamination.outlier", sc.contamination.outlier);

  sc.selection.slack = cfg.get_double("selection.slack", sc.selection.slack);
  sc.selection.penalty_scale = cfg.get_double("selection.penalty_scale", sc.selection.penalty_scale);
  sc.selection.xi = cfg.get_double("selection.xi", sc.selection.xi);
  sc.selection.threads = static_cast<int>(cfg.get_int("selection.threads", sc.selection.threads));

  // Menu subsections: every distinct name in keys "menu.<name>.<field>".
  std::set<std::string> names;
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind("menu.", 0) != 0) continue;
    const auto rest = key.substr(5);
    const auto dot = rest.find('.');
    if (dot == std::string::npos)
      throw config_error("menu keys live in [menu.<family>] sections: " + key);
    names.insert(rest.substr(0, dot));
  }
  for (const auto& name : names) {
    MenuBudgets b;
    b.kind = menu_kind_from_name(name);
    b.dim = sc.covariate_dim;
    const std::string pre = "menu." + name + ".";
    b.s_max = static_cast<int>(cfg.get_int(pre + "s_max", b.s_max));
    b.t_max = static_cast<int>(cfg.get_int(pre + "t_max", b.t_max));
    b.r_max = static_cast<int>(cfg.get_int(pre + "r_max", b.r_max));
    b.l = static_cast<int>(cfg.get_int(pre + "l", b.l));
    b.p = static_cast<int>(cfg.get_int(pre + "p", sc.covariate_dim));
    b.max_support = static_cast<int>(cfg.get_int(pre + "max_support", b.max_support));
    b.screen_top = static_cast<int>(cfg.get_int(pre + "screen_top", b.screen_top));
    b.L_max = static_cast<int>(cfg.get_int(pre + "L_max", b.L_max));
    b.p_max = static_cast<int>(cfg.get_int(pre + "p_max", b.p_max));
    sc.menu.push_back(b);
  }

  // Invariants a scenario must satisfy before any work starts.
  if (sc.n < 1) throw config_error("scenario.n must be at least 1");
  if (sc.mc_points < 100) throw config_error("scenario.mc_points must be at least 100");
  if (sc.covariate_dim < 1) throw config_error("scenario.covariate_dim must be at least 1");
  if (!(sc.param_lo < sc.param_hi))
    throw config_error("scenario.param_lo must be below scenario.param_hi");
  if (!(sc.contamination.epsilon >= 0.0 && sc.contamination.epsilon < 0.5))
    throw config_error("contamination.epsilon must lie in [0, 0.5)");
  const std::string& out = sc.contamination.outlier;
  if (out != "far-end" && out != "low-end" && out.rfind("value:", 0) != 0)
    throw config_error("contamination.outlier must be far-end, low-end, or value:<gamma>");
  if (!(sc.selection.slack >= 0.0)) throw config_error("selection.slack must be nonnegative");
  if (!(sc.selection.penalty_scale > 0.0))
    throw config_error("selection.penalty_scale must be positive");
  if (sc.selection.threads < 1) throw config_error("selection.threads must be at least 1");
  if (!(sc.grid_pitch > 0.0)) throw config_error("scenario.grid_pitch must be positive");

  // Family and parametrization must construct; vst derives the value interval.
  try {
    const LawContext ctx = law_context(sc);
    if (sc.parametrization_id == "vst") {
      sc.param_lo = ctx.param.lo;
      sc.param_hi = ctx.param.hi;
    }
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("scenario law is not constructible: ") + e.what());
  }
  return sc;
}

// ---- truth functions -----------------------------------------------------------

std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> build_truth(
    const ScenarioConfig& sc) {
  const double lo = sc.param_lo, hi = sc.param_hi;
  const auto in_range = [lo, hi](double v) { return v >= lo && v <= hi; };
  const TruthSpec& t = sc.truth;

  if (t.kind == "constant") {
    if (t.values.size() != 1) throw config_error("truth: constant needs exactly one value");
    if (!in_range(t.values[0])) throw config_error("truth: value outside the parameter interval");
    const double v = t.values[0];
    return [v](const Eigen::Ref<const Eigen::VectorXd>&) { return v; };
  }

  if (t.kind == "piecewise-constant") {
    if (t.cells < 1 || t.values.size() != static_cast<std::size_t>(t.cells))
      throw config_error("truth: piecewise-constant needs one value per cell");
    for (double v : t.values)
      if (!in_range(v)) throw config_error("truth: value outside the parameter interval");
    const auto values = t.values;
    const auto cells = static_cast<std::int64_t>(t.cells);
    return [values, cells](const Eigen::Ref<const Eigen::VectorXd>& w) {
      const double x = std::min(std::max(w(0), 0.0), 1.0);
      auto c = static_cast<std::int64_t>(std::ceil(x * static_cast<double>(cells))) - 1;
      c = std::min(std::max(c, std::int64_t{0}), cells - 1);
      return values[static_cast<std::size_t>(c)];
    };
  }

  if (t.kind == "sin") {
    const double a = t.amplitude;
    if (!in_range(a) || !in_range(-a))
      throw config_error("truth: sin amplitude leaves the parameter interval");
    return [a](const Eigen::Ref<const Eigen::VectorXd>& w) {
      return a * std::sin(2.0 * M_PI * w(0));
    };
  }

  if (t.kind == "linear-sparse") {
    if (t.support.empty() || t.support.size() != t.coefficients.size())
      throw config_error("truth: linear-sparse needs aligned support and coefficients");
    std::vector<int> sup;
    for (int c : t.support) {
      if (c < 1 || c > sc.covariate_dim)
        throw config_error("truth: support coordinate outside 1..covariate_dim");
      sup.push_back(c - 1);
    }
    double worst_lo = 0.0, worst_hi = 0.0;
    for (double c : t.coefficients) {
      worst_lo += std::min(c, 0.0);
      worst_hi += std::max(c, 0.0);
    }
    if (!in_range(worst_lo) || !in_range(worst_hi))
      throw config_error("truth: linear-sparse range leaves the parameter interval");
    const auto coef = t.coefficients;
    return [sup, coef](const Eigen::Ref<const Eigen::VectorXd>& w) {
      double v = 0.0;
      for (std::size_t j = 0; j < sup.size(); ++j) v += coef[j] * w(sup[j]);
      return v;
    };
  }

  if (t.kind == "takagi") {
    if (t.takagi_terms < 1) throw config_error("truth: takagi_terms must be at least 1");
    if (!(std::abs(t.takagi_t) < 1.0) || t.takagi_t == 0.0)
      throw config_error("truth: takagi_t must lie in (-1, 1) and be nonzero");
    const int terms = t.takagi_terms;
    const double tt = t.takagi_t, a = t.amplitude;
    auto f = [terms, tt, a](const Eigen::Ref<const Eigen::VectorXd>& w) {
      double x = std::min(std::max(w(0), 0.0), 1.0);
      double sum = 0.0, pw = 1.0;
      for (int k = 1; k <= terms; ++k) {
        x = hat(x);
        pw *= tt;
        sum += pw * x;
      }
      return a * sum;
    };
    for (int i = 0; i <= 4096; ++i) {
      Eigen::VectorXd w = Eigen::VectorXd::Constant(1, static_cast<double>(i) / 4096.0);
      if (!in_range(f(w)))
        throw config_error("truth: takagi values leave the parameter interval");
    }
    return f;
  }

  throw config_error("unknown truth kind: " + t.kind);
}

// ---- data generation -------------------------------------------------------------

Dataset generate(const ScenarioConfig& sc) {
  const LawContext ctx = law_context(sc);
  const auto truth = build_truth(sc);
  const auto n = sc.n;
  const int d = sc.covariate_dim;

  Dataset data;
  data.W = Eigen::MatrixXd(n, d);
  data.Y = Eigen::VectorXd(n);

  if (sc.covariate_law == "uniform") {
    std::mt19937_64 eng(derive_seed(sc.seed_data, 0));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::int64_t i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) data.W(i, j) = unif(eng);
  } else if (sc.covariate_law.rfind("csv:", 0) == 0) {
    const Dataset src = read_dataset_csv(sc.covariate_law.substr(4));
    if (src.dim() != d) throw config_error("covariate csv dimension mismatch");
    if (src.n() < n) throw config_error("covariate csv has fewer rows than scenario.n");
    data.W = src.W.topRows(n);
  } else {
    throw config_error("unknown covariate law: " + sc.covariate_law);
  }

  const std::uint64_t seed_y = derive_seed(sc.seed_data, 1);
  for (std::int64_t i = 0; i < n; ++i) {
    const double gamma = truth(data.W.row(i).transpose());
    const double theta = ctx.param.to_natural(gamma);
    data.Y(i) = ctx.family.draw(theta, derive_seed(seed_y, static_cast<std::uint64_t>(i)));
  }

  // Contamination rides separate substreams, so epsilon = 0 and epsilon -> 0
  // leave the clean sample bit-for-bit unchanged.
  const double eps = sc.contamination.epsilon;
  if (eps > 0.0) {
    double gamma_out;
    if (sc.contamination.outlier == "far-end") {
      gamma_out = sc.param_hi;
    } else if (sc.contamination.outlier == "low-end") {
      gamma_out = sc.param_lo;
    } else if (sc.contamination.outlier.rfind("value:", 0) == 0) {
      try {
        gamma_out = std::stod(sc.contamination.outlier.substr(6));
      } catch (const std::exception&) {
        throw config_error("contamination.outlier value is not a number");
      }
    } else {
      throw config_error("unknown contamination outlier: " + sc.contamination.outlier);
    }
    const double theta_out = ctx.param.to_natural(gamma_out);
    const std::uint64_t seed_flip = derive_seed(sc.seed_data, 2);
    const std::uint64_t seed_out = derive_seed(sc.seed_data, 3);
    for (std::int64_t i = 0; i < n; ++i) {
      std::mt19937_64 eng(derive_seed(seed_flip, static_cast<std::uint64_t>(i)));
      if (std::uniform_real_distribution<double>(0.0, 1.0)(eng) < eps)
        data.Y(i) = ctx.family.draw(theta_out, derive_seed(seed_out, static_cast<std::uint64_t>(i)));
    }
  }
  return data;
}

// ---- Monte-Carlo risk --------------------------------------------------------------

std::pair<double, double> mc_hellinger_risk(
    const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& gamma_hat,
    const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& gamma_star,
    const ScenarioConfig& sc) {
  const LawContext ctx = law_context(sc);
  const auto points = sc.mc_points;
  std::mt19937_64 eng(derive_seed(sc.seed_mc, 0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::VectorXd h2(points);
  Eigen::VectorXd w(sc.covariate_dim);
  for (std::int64_t i = 0; i < points; ++i) {
    for (int j = 0; j < sc.covariate_dim; ++j) w(j) = unif(eng);
    const double th_hat = ctx.param.to_natural(gamma_hat(w));
    const double th_star = ctx.param.to_natural(gamma_star(w));
    h2(i) = hellinger_sq(ctx.family, th_hat, th_star);
  }
  const double mean = blocked_kahan_sum(h2) / static_cast<double>(points);
  Eigen::VectorXd dev = (h2.array() - mean).square();
  const double var = blocked_kahan_sum(dev) / static_cast<double>(points - 1);
  const double se = std::sqrt(std::max(var, 0.0) / static_cast<double>(points));
  return {mean, se};
}

// ---- pool construction ---------------------------------------------------------------

BuiltPool build_pool(const Dataset& data, const ScenarioConfig& sc, const LawContext& ctx) {
  if (sc.menu.empty()) throw config_error("menu: no model families configured");
  BuiltPool out;
  std::uint64_t model_counter = 0;

  for (const MenuBudgets& configured : sc.menu) {
    MenuBudgets b = configured;
    b.dim = static_cast<int>(data.dim());
    std::vector<MenuModel> menu;

    if (b.kind == FamilyKind::LinearVarsel && b.screen_top > 0 && b.screen_top < b.p) {
      // Screen the universe down, enumerate supports of the survivors, then
      // price weights against the full universe.
      const auto screened = screen_coordinates(data, ctx, b.screen_top);
      MenuBudgets sub = b;
      sub.p = b.screen_top;
      sub.max_support = std::min(b.max_support, b.screen_top);
      sub.screen_top = 0;
      menu = enumerate_menu(sub);
      for (auto& m : menu) {
        std::vector<int> mapped;
        for (int j : m.index.support) mapped.push_back(screened[static_cast<std::size_t>(j)]);
        std::sort(mapped.begin(), mapped.end());
        m.index.support = mapped;
        std::ostringstream id;
        id << "varsel{";
        for (std::size_t j = 0; j < mapped.size(); ++j) id << (j ? "," : "") << (mapped[j] + 1);
        id << "}";
        m.index.id = id.str();
        m.V = vc_varsel(static_cast<int>(mapped.size()));
        m.Delta = weight_varsel(mapped, b.p);
      }
    } else {
      menu = enumerate_menu(b);
    }

    for (const auto& m : menu) {
      FitOptions fopt;
      fopt.v_minus = sc.param_lo;
      fopt.v_plus = sc.param_hi;
      fopt.grid_pitch = sc.grid_pitch;
      fopt.seed = derive_seed(sc.seed_fit, model_counter);
      auto fit = fit_model(data, m.index, ctx, fopt);
      fit.candidate.owners = {out.pool.models.size()};
      out.pool.models.push_back(ModelEntry{m.index.id, m.V, m.Delta});
      out.pool.candidates.push_back(std::move(fit.candidate));
      out.fallback_flags.push_back(fit.empty_cell_fallback);
      ++model_counter;
    }
  }
  return out;
}

// ---- selection runs --------------------------------------------------------------------

RiskReport run_selection_on(const Dataset& data, const ScenarioConfig& sc) {
  const auto t0 = std::chrono::steady_clock::now();
  const LawContext ctx = law_context(sc);
  BuiltPool built = build_pool(data, sc, ctx);
  SelectionReport sel = select(data, built.pool, ctx, sc.selection);
  const auto truth = build_truth(sc);
  const auto& chosen = built.pool.candidates[sel.chosen_index];
  const auto [risk, se] = mc_hellinger_risk(chosen.eval, truth, sc);

  RiskReport report;
  report.chosen_id = sel.chosen_id;
  report.mc_risk = risk;
  report.mc_stderr = se;
  report.selection = std::move(sel);
  report.n = data.n();
  report.seed_data = sc.seed_data;
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

RiskReport run_selection(const ScenarioConfig& sc) {
  const Dataset data = generate(sc);
  return run_selection_on(data, sc);
}

// ---- reports -------------------------------------------------------------------------

namespace {

nlohmann::json selection_to_json(const SelectionReport& sel) {
  nlohmann::json j;
  j["chosen_index"] = sel.chosen_index;
  j["chosen_id"] = sel.chosen_id;
  j["slack"] = sel.slack;
  j["penalty_scale"] = sel.penalty_scale;
  j["upsilon"] = sel.upsilon;
  j["penalties"] = sel.penalties;
  auto certs = nlohmann::json::array();
  for (const auto& c : sel.certificates) {
    certs.push_back({{"model_id", c.model_id},
                     {"V", c.V},
                     {"Delta", c.Delta},
                     {"Xi", c.Xi},
                     {"bound_term", c.bound_term}});
  }
  j["certificates"] = certs;
  return j;
}

}  // namespace

std::string selection_report_json(const SelectionReport& report) {
  return selection_to_json(report).dump(2);
}

std::string risk_report_json(const RiskReport& report) {
  // wall_ms stays out on purpose: equal configs and seeds must give
  // byte-identical reports.
  nlohmann::json j;
  j["chosen_id"] = report.chosen_id;
  j["mc_risk"] = report.mc_risk;
  j["mc_stderr"] = report.mc_stderr;
  j["n"] = report.n;
  j["seed_data"] = report.seed_data;
  j["selection"] = selection_to_json(report.selection);
  return j.dump(2);
}

// ---- rate studies -----------------------------------------------------------------------

RateStudy rate_study(const ScenarioConfig& base, const std::vector<std::size_t>& n_grid,
                     int reps) {
  if (n_grid.empty()) throw config_error("rate study: empty n grid");
  if (reps < 1) throw config_error("rate study: reps must be at least 1");

  RateStudy out;
  out.n_grid = n_grid;
  std::ostringstream csv;
  csv << "n,rep,risk\n";
  csv.precision(17);

  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    std::vector<double> risks;
    risks.reserve(static_cast<std::size_t>(reps));
    for (int rep = 0; rep < reps; ++rep) {
      ScenarioConfig sc = base;
      sc.n = static_cast<std::int64_t>(n_grid[gi]);
      sc.seed_data = derive_seed(base.seed_data, 7001 + gi * 1009 + static_cast<std::uint64_t>(rep));
      const RiskReport report = run_selection(sc);
      risks.push_back(report.mc_risk);
      csv << n_grid[gi] << ',' << rep << ',' << report.mc_risk << '\n';
    }
    std::vector<double> sorted = risks;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    const double median = (sorted.size() % 2 == 1)
                              ? sorted[mid]
                              : 0.5 * (sorted[mid - 1] + sorted[mid]);
    out.median_risk.push_back(median);
    out.risks.push_back(std::move(risks));
  }

  // Least-squares slope of log median risk against log n.
  const auto G = static_cast<double>(n_grid.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    const double x = std::log(static_cast<double>(n_grid[gi]));
    const double y = std::log(std::max(out.median_risk[gi], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = G * sxx - sx * sx;
  out.slope = denom != 0.0 ? (G * sxy - sx * sy) / denom : 0.0;
  out.csv = csv.str();

  nlohmann::json j;
  j["n_grid"] = out.n_grid;
  j["median_risk"] = out.median_risk;
  j["slope"] = out.slope;
  out.json = j.dump(2);
  return out;
}

}  // namespace rhosel

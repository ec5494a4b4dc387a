#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "rhosel/config.hpp"
#include "rhosel/sim.hpp"

using namespace rhosel;

namespace {

const char* kScenarioText = R"(# demo scenario
[scenario]
family = gaussian(sigma=1)
parametrization = mean
param_lo = -1
param_hi = 1
n = 1000
covariate_dim = 1
covariate_law = uniform
mc_points = 4000
seed_data = 101
seed_fit = 202
seed_mc = 303

[truth]
kind = piecewise-constant
values = -0.5 0.75
cells = 2

[menu.dyadic-poly]
s_max = 2
r_max = 0

[selection]
slack = 1
penalty_scale = 2e-5
threads = 1
)";

ScenarioConfig demo_scenario() {
  ConfigMap cfg = ConfigMap::parse_string(kScenarioText);
  return scenario_from_config(cfg);
}

double std_normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("config parser: sections, nesting, comments, typed access") {
  ConfigMap cfg = ConfigMap::parse_string(
      "# comment\n"
      "top = 1\n"
      "[a]\n"
      "x = 2.5\n"
      "name = hello world\n"
      "flag = true\n"
      "list = 1 2 3\n"
      "[a.b]\n"
      "y = -4  # trailing comment\n");
  CHECK(cfg.get_int("top") == 1);
  CHECK(cfg.get_double("a.x") == 2.5);
  CHECK(cfg.get_string("a.name") == "hello world");
  CHECK(cfg.get_bool("a.flag"));
  CHECK(cfg.get_int("a.b.y") == -4);
  CHECK(cfg.get_doubles("a.list") == std::vector<double>({1.0, 2.0, 3.0}));
  CHECK(cfg.has("a.x"));
  CHECK(!cfg.has("a.z"));
  CHECK(cfg.get_double("a.z", 9.0) == 9.0);
  CHECK_THROWS_AS((void)cfg.get_double("a.z"), config_error);
  CHECK_THROWS_AS((void)cfg.get_int("a.name"), config_error);
  CHECK_THROWS_AS((void)ConfigMap::parse_string("novalue\n"), config_error);
}

TEST_CASE("scenario_from_config: fields land where they should") {
  auto sc = demo_scenario();
  CHECK(sc.family_id == "gaussian(sigma=1)");
  CHECK(sc.parametrization_id == "mean");
  CHECK(sc.param_lo == -1.0);
  CHECK(sc.param_hi == 1.0);
  CHECK(sc.n == 1000);
  CHECK(sc.covariate_dim == 1);
  CHECK(sc.mc_points == 4000);
  CHECK(sc.seed_data == 101);
  CHECK(sc.truth.kind == "piecewise-constant");
  CHECK(sc.truth.values == std::vector<double>({-0.5, 0.75}));
  CHECK(sc.contamination.epsilon == 0.0);
  REQUIRE(sc.menu.size() == 1);
  CHECK(sc.menu[0].kind == FamilyKind::DyadicPoly);
  CHECK(sc.menu[0].s_max == 2);
  CHECK(sc.selection.penalty_scale == 2e-5);
}

TEST_CASE("scenario_from_config: invariant violations raise config errors") {
  auto broken = [&](const std::string& patch) {
    std::string text = kScenarioText;
    text += "\n" + patch + "\n";
    ConfigMap cfg = ConfigMap::parse_string(text);
    return cfg;
  };
  CHECK_THROWS_AS((void)scenario_from_config(broken("[scenario]\nfamily = cauchy")), config_error);
  CHECK_THROWS_AS((void)scenario_from_config(broken("[scenario]\nn = 0")), config_error);
  CHECK_THROWS_AS((void)scenario_from_config(broken("[scenario]\nmc_points = 50")), config_error);
  CHECK_THROWS_AS((void)scenario_from_config(broken("[contamination]\nepsilon = 0.5")), config_error);
  // Truth outside the parameter interval is a config error at build time.
  CHECK_THROWS_AS((void)build_truth(scenario_from_config(broken("[truth]\nvalues = -0.5 7"))),
                  config_error);
}

TEST_CASE("generate: KS sanity for a constant Gaussian truth") {
  auto sc = demo_scenario();
  sc.truth.kind = "constant";
  sc.truth.values = {0.3};
  sc.n = 1200;
  Dataset data = generate(sc);
  REQUIRE(data.n() == 1200);
  std::vector<double> y(data.Y.data(), data.Y.data() + data.Y.size());
  const double ks = oracle::ks_statistic(y, [](double v) { return std_normal_cdf(v - 0.3); });
  CHECK(oracle::ks_pvalue(ks, y.size()) > 0.01);

  // Covariates stay in the unit cube.
  CHECK(data.W.minCoeff() >= 0.0);
  CHECK(data.W.maxCoeff() <= 1.0);
}

TEST_CASE("generate: vanishing contamination leaves the sample untouched") {
  auto sc = demo_scenario();
  sc.n = 100;
  Dataset clean = generate(sc);
  sc.contamination.epsilon = 1e-9;
  sc.contamination.outlier = "far-end";
  Dataset dirty = generate(sc);
  CHECK(dataset_to_csv(clean) == dataset_to_csv(dirty));
}

TEST_CASE("generate: contamination replaces about epsilon of the responses") {
  auto sc = demo_scenario();
  sc.truth.kind = "constant";
  sc.truth.values = {0.0};
  sc.n = 4000;
  Dataset clean = generate(sc);
  sc.contamination.epsilon = 0.2;
  Dataset dirty = generate(sc);
  int flips = 0;
  for (int i = 0; i < clean.n(); ++i)
    if (clean.Y(i) != dirty.Y(i)) flips++;
  CHECK(flips > 0.15 * sc.n);
  CHECK(flips < 0.25 * sc.n);
  // Covariates are never touched.
  CHECK(clean.W == dirty.W);
}

TEST_CASE("generate: identical seeds give byte-identical CSV") {
  auto sc = demo_scenario();
  Dataset a = generate(sc);
  Dataset b = generate(sc);
  CHECK(dataset_to_csv(a) == dataset_to_csv(b));
  sc.seed_data += 1;
  Dataset c = generate(sc);
  CHECK(dataset_to_csv(a) != dataset_to_csv(c));
}

TEST_CASE("dataset CSV: write ~ read round trip preserves values") {
  Dataset d;
  d.W = Eigen::MatrixXd(3, 2);
  d.W << 0.1, 0.9, 0.25, 0.5, 1.0, 0.0;
  d.Y = Eigen::VectorXd(3);
  d.Y << -1.5, 0.0, 2.25;
  auto path = std::filesystem::temp_directory_path() / "rhosel_test_roundtrip.csv";
  write_dataset_csv(path.string(), d);
  Dataset back = read_dataset_csv(path.string());
  std::filesystem::remove(path);
  REQUIRE(back.n() == 3);
  REQUIRE(back.dim() == 2);
  CHECK((back.W - d.W).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.Y - d.Y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mc_hellinger_risk: exact zero, constant-case closed form") {
  auto sc = demo_scenario();
  sc.mc_points = 20000;
  auto truth = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 0.0; };
  auto same = mc_hellinger_risk(truth, truth, sc);
  CHECK(same.first == 0.0);

  auto two = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 2.0; };
  auto est = mc_hellinger_risk(two, truth, sc);
  // Constant case collapses to the closed form h^2 = 1 - e^{-1/2}.
  CHECK(est.first == doctest::Approx(0.3934693402873666).epsilon(1e-9));
  CHECK(est.second >= 0.0);

  auto half = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 0.5; };
  auto mixed = mc_hellinger_risk(half, truth, sc);
  const double closed = 1.0 - std::exp(-0.5 * 0.5 * 0.5 / 4.0);
  CHECK(std::abs(mixed.first - closed) <= 3.0 * std::max(mixed.second, 1e-12));
}

TEST_CASE("run_selection: well-specified two-cell truth is recovered") {
  auto sc = demo_scenario();
  auto report = run_selection(sc);
  CHECK(report.n == 1000);
  CHECK(report.mc_risk >= 0.0);
  CHECK(report.mc_risk <= 0.05);
  CHECK(report.mc_stderr > 0.0);
  CHECK(!report.chosen_id.empty());
  CHECK(report.selection.certificates.size() >= 1);
  CHECK(report.wall_ms >= 0.0);
}

TEST_CASE("run_selection: a one-model menu returns that model's fit") {
  auto sc = demo_scenario();
  sc.menu[0].s_max = 0;
  sc.menu[0].r_max = 0;
  auto report = run_selection(sc);
  CHECK(report.selection.upsilon.size() == 1);
  CHECK(report.selection.chosen_index == 0);
}

TEST_CASE("run_selection: identical config and seeds give identical JSON reports") {
  auto sc = demo_scenario();
  sc.n = 400;
  sc.mc_points = 1000;
  auto r1 = run_selection(sc);
  auto r2 = run_selection(sc);
  CHECK(risk_report_json(r1) == risk_report_json(r2));

  // JSON carries the pieces the CLI writes.
  const std::string js = risk_report_json(r1);
  CHECK(js.find("mc_risk") != std::string::npos);
  CHECK(js.find("chosen_id") != std::string::npos);
  CHECK(js.find("certificates") != std::string::npos);
}

TEST_CASE("run_selection_on honors an externally supplied dataset") {
  auto sc = demo_scenario();
  sc.n = 500;
  Dataset data = generate(sc);
  auto r1 = run_selection_on(data, sc);
  auto r2 = run_selection_on(data, sc);
  CHECK(risk_report_json(r1) == risk_report_json(r2));
}

TEST_CASE("rate_study: risk decreases with n for an in-menu truth") {
  auto sc = demo_scenario();
  sc.mc_points = 2000;
  auto study = rate_study(sc, {128, 2048}, 5);
  REQUIRE(study.n_grid == std::vector<std::size_t>({128, 2048}));
  REQUIRE(study.median_risk.size() == 2);
  REQUIRE(study.risks.size() == 2);
  CHECK(study.risks[0].size() == 5);
  CHECK(study.median_risk[1] < study.median_risk[0]);
  CHECK(study.slope < 0.0);
  CHECK(study.csv.find("n,") == 0);
  CHECK(!study.json.empty());
}

TEST_CASE("derive_seed: deterministic, stream-separated") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rhosel/complexity.hpp"
#include "rhosel/sim.hpp"

namespace {

rhosel::ScenarioConfig load_scenario(const std::string& path) {
  return rhosel::scenario_from_config(rhosel::ConfigMap::parse_file(path));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rhosel::config_error("cannot open report file: " + path);
  out << text;
}

// One row per menu model: id plus the requested complexity column.
void print_menu_table(const rhosel::ScenarioConfig& sc, bool vc_column) {
  std::cout << (vc_column ? "model,V\n" : "model,Delta\n");
  std::cout.precision(17);
  for (const auto& budgets : sc.menu) {
    for (const auto& m : rhosel::enumerate_menu(budgets))
      std::cout << m.index.id << ',' << (vc_column ? m.V : m.Delta) << '\n';
  }
}

int dispatch(const std::string& mode, const std::string& config_path,
             const std::string& data_path, const std::vector<std::size_t>& n_grid, int reps) {
  rhosel::ScenarioConfig sc = load_scenario(config_path);

  if (mode == "simulate") {
    const rhosel::RiskReport report = rhosel::run_selection(sc);
    const std::string js = rhosel::risk_report_json(report);
    std::cout << js << '\n';
    if (!sc.report_path.empty()) write_text(sc.report_path, js + "\n");
    return 0;
  }
  if (mode == "select") {
    const rhosel::Dataset data =
        data_path.empty() ? rhosel::generate(sc) : rhosel::read_dataset_csv(data_path);
    const rhosel::RiskReport report = rhosel::run_selection_on(data, sc);
    const std::string js = rhosel::risk_report_json(report);
    std::cout << js << '\n';
    if (!sc.report_path.empty()) write_text(sc.report_path, js + "\n");
    return 0;
  }
  if (mode == "rate") {
    const rhosel::RateStudy study = rhosel::rate_study(sc, n_grid, reps);
    std::cout << study.json << '\n';
    if (!sc.report_path.empty()) {
      write_text(sc.report_path, study.json + "\n");
      write_text(sc.report_path + ".csv", study.csv);
    } else {
      std::cout << study.csv;
    }
    return 0;
  }
  if (mode == "vc") {
    print_menu_table(sc, true);
    return 0;
  }
  print_menu_table(sc, false);  // weights
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized rho-type model selection for conditional exponential families"};
  app.require_subcommand(1);

  std::string config_path, data_path;
  std::vector<std::size_t> n_grid = {256, 512, 1024, 2048, 4096, 8192};
  int reps = 10;

  auto* simulate = app.add_subcommand("simulate", "Generate data and run the selection tournament");
  simulate->add_option("config", config_path, "scenario config file")->required();

  auto* select = app.add_subcommand("select", "Run the tournament, optionally on external data");
  select->add_option("config", config_path, "scenario config file")->required();
  select->add_option("--data", data_path, "CSV dataset (w1..wd,y) overriding the generator");

  auto* rate = app.add_subcommand("rate", "Monte-Carlo risk against sample size");
  rate->add_option("config", config_path, "scenario config file")->required();
  rate->add_option("--n-grid", n_grid, "sample sizes");
  rate->add_option("--reps", reps, "replicates per sample size");

  auto* vc = app.add_subcommand("vc", "Print the menu's VC bounds as CSV");
  vc->add_option("config", config_path, "scenario config file")->required();

  auto* weights = app.add_subcommand("weights", "Print the menu's weights as CSV");
  weights->add_option("config", config_path, "scenario config file")->required();

  CLI11_PARSE(app, argc, argv);

  const std::string mode = app.get_subcommands().front()->get_name();
  try {
    return dispatch(mode, config_path, data_path, n_grid, reps);
  } catch (const rhosel::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const rhosel::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const rhosel::domain_error& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

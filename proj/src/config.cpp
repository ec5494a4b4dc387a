#include "rhosel/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rhosel {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

}  // namespace

ConfigMap ConfigMap::parse_string(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw config_error("config line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw config_error("config line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error("config line " + std::to_string(lineno) + ": empty key");
    cfg.entries_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

bool ConfigMap::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string ConfigMap::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw config_error("missing config key: " + key);
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key) const {
  const std::string raw = get_string(key);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(raw, &used);
  } catch (const std::exception&) {
    throw config_error("config key " + key + ": not a number: " + raw);
  }
  if (used != raw.size()) throw config_error("config key " + key + ": not a number: " + raw);
  return v;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t ConfigMap::get_int(const std::string& key) const {
  const std::string raw = get_string(key);
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(raw, &used);
  } catch (const std::exception&) {
    throw config_error("config key " + key + ": not an integer: " + raw);
  }
  if (used != raw.size()) throw config_error("config key " + key + ": not an integer: " + raw);
  return v;
}

std::int64_t ConfigMap::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool ConfigMap::get_bool(const std::string& key) const {
  const std::string raw = get_string(key);
  if (raw == "true" || raw == "yes" || raw == "on" || raw == "1") return true;
  if (raw == "false" || raw == "no" || raw == "off" || raw == "0") return false;
  throw config_error("config key " + key + ": not a boolean: " + raw);
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<std::string> ConfigMap::get_strings(const std::string& key) const {
  std::string raw = get_string(key);
  for (auto& c : raw)
    if (c == ',') c = ' ';
  std::istringstream in(raw);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : get_strings(key)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw config_error("config key " + key + ": not a number list: " + tok);
    }
    if (used != tok.size())
      throw config_error("config key " + key + ": not a number list: " + tok);
    out.push_back(v);
  }
  return out;
}

// ---- dataset CSV -------------------------------------------------------------

namespace {

// Shortest exactly round-tripping decimal for a double.
std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer shorter forms when they still round trip.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof probe, "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

}  // namespace

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  for (Eigen::Index j = 0; j < data.dim(); ++j) out << 'w' << (j + 1) << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) out << format_double(data.W(i, j)) << ',';
    out << format_double(data.Y(i)) << '\n';
  }
  return out.str();
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open for writing: " + path);
  out << dataset_to_csv(data);
  if (!out) throw config_error("write failed: " + path);
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw config_error("empty dataset file: " + path);
  // Column count from the header; the last column is the response.
  int cols = 1;
  for (char c : line)
    if (c == ',') ++cols;
  if (cols < 2) throw config_error("dataset header needs at least one covariate: " + path);
  const int d = cols - 1;

  std::vector<double> cells;
  std::int64_t rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream row(line);
    std::string tok;
    int got = 0;
    while (std::getline(row, tok, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw config_error("dataset row " + std::to_string(rows + 2) + ": bad number: " + tok);
      }
      cells.push_back(v);
      ++got;
    }
    if (got != cols)
      throw config_error("dataset row " + std::to_string(rows + 2) + ": expected " +
                         std::to_string(cols) + " columns");
    ++rows;
  }
  Dataset data;
  data.W = Eigen::MatrixXd(rows, d);
  data.Y = Eigen::VectorXd(rows);
  for (std::int64_t i = 0; i < rows; ++i) {
    for (int j = 0; j < d; ++j) data.W(i, j) = cells[static_cast<std::size_t>(i * cols + j)];
    data.Y(i) = cells[static_cast<std::size_t>(i * cols + d)];
  }
  return data;
}

}  // namespace rhosel

#pragma once

#include "clab/linearized_cr.hpp"
#include "clab/metric.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace clab {

// INI-style config: `[section]` headers and `key = value` lines, read with CLI11's reader.
struct Config {
  std::map<std::string, std::vector<std::string>> values;  // "section.key" -> inputs
  std::string text;                                        // raw contents, for hashing
  std::filesystem::path dir;                               // for relative paths

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::string str(const std::string& key) const {
    auto it = values.find(key);
    require(it != values.end() && !it->second.empty(), ErrorKind::ParseError, "missing config key " + key);
    std::string out;
    for (size_t i = 0; i < it->second.size(); ++i) out += (i ? "," : "") + it->second[i];
    return out;
  }
  std::string str(const std::string& key, const std::string& fallback) const { return has(key) ? str(key) : fallback; }

  double real(const std::string& key) const {
    const std::string s = str(key);
    try {
      size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::ParseError, "config key " + key + " is not a number: " + s);
  }
  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

  int integer(const std::string& key) const {
    const double v = real(key);
    require(v == std::floor(v), ErrorKind::ParseError, "config key " + key + " is not an integer");
    return static_cast<int>(v);
  }
  int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

  std::vector<double> reals(const std::string& key) const {
    auto it = values.find(key);
    require(it != values.end(), ErrorKind::ParseError, "missing config key " + key);
    std::vector<double> out;
    for (const std::string& tok : it->second) {
      std::istringstream is(tok);
      double x;
      while (is >> x) {
        out.push_back(x);
        if (is.peek() == ',') is.ignore();
      }
      require(is.eof(), ErrorKind::ParseError, "config key " + key + " has a non-numeric entry: " + tok);
    }
    return out;
  }
};

inline Config parse_config(const std::string& text, const std::filesystem::path& dir = {}) {
  Config C;
  C.text = text;
  C.dir = dir;
  std::istringstream is(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(is);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string key;
    for (const auto& p : item.parents) key += p + ".";
    C.values[key + item.name] = item.inputs;
  }
  return C;
}

inline Config read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::ParseError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

// "1,0,-2" or "1 0 -2"
inline IVec parse_class(const std::string& text) {
  std::vector<int> v;
  std::string tok;
  std::istringstream is(text);
  while (std::getline(is, tok, ',')) {
    std::istringstream ts(tok);
    int x;
    while (ts >> x) v.push_back(x);
    require(ts.eof(), ErrorKind::ParseError, "bad class vector: " + text);
  }
  require(!v.empty(), ErrorKind::ParseError, "empty class vector");
  IVec out(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

// "k_1 ... k_n cos sin; ..." with one term per ';'
inline FourierSeries parse_fourier(const std::string& text, int n) {
  FourierSeries f;
  f.dim = n;
  std::string term;
  std::istringstream is(text);
  while (std::getline(is, term, ';')) {
    if (term.find_first_not_of(" \t,") == std::string::npos) continue;
    std::replace(term.begin(), term.end(), ',', ' ');
    std::istringstream ts(term);
    std::vector<double> x;
    double v;
    while (ts >> v) x.push_back(v);
    require(ts.eof() && static_cast<int>(x.size()) == n + 2, ErrorKind::ParseError,
            "Fourier term needs " + std::to_string(n) + " wave numbers and two coefficients: " + term);
    IVec k(n);
    for (int i = 0; i < n; ++i) {
      require(x[i] == std::floor(x[i]), ErrorKind::ParseError, "wave numbers must be integers: " + term);
      k(i) = static_cast<int>(x[i]);
    }
    f.terms.push_back({k, x[n], x[n + 1]});
  }
  return f;
}

// [metric] kind = flat | conformal | tube | grid | good
inline MetricField metric_from_config(const Config& C) {
  const std::string kind = C.str("metric.kind");
  if (kind == "grid") {
    std::filesystem::path p = C.str("metric.grid_file");
    if (p.is_relative()) p = C.dir / p;
    return grid_metric(read_grid_file(p.string()));
  }
  const int n = C.integer("metric.dim");
  require(n >= 1 && n <= 8, ErrorKind::InvalidArgument, "metric.dim must be in 1..8");
  if (kind == "flat") {
    if (!C.has("metric.matrix")) return flat_metric(n);
    const std::vector<double> a = C.reals("metric.matrix");
    require(static_cast<int>(a.size()) == n * n, ErrorKind::InvalidArgument, "metric.matrix needs dim^2 entries");
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = a[i * n + j];
    return flat_metric(A);
  }
  if (kind == "conformal") return conformal_metric(parse_fourier(C.str("metric.phi_fourier", ""), n));
  if (kind == "tube") {
    const double k = C.real("metric.k");
    require(k >= 0, ErrorKind::InvalidArgument, "metric.k must be nonnegative");
    return tube_metric(n, k, C.integer("metric.axis", 0));
  }
  if (kind == "good") {
    GoodMetricParams P;
    P.base = Mat::Identity(n, n);
    P.beta = C.has("metric.class") ? parse_class(C.str("metric.class")) : IVec(IVec::Unit(n, 0));
    P.eps = C.real("metric.eps", 0.01);
    P.k = C.real("metric.k", 1.0);
    return good_metric(P).metric;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown metric kind " + kind);
}

// "flat<n>" names the standard flat torus; anything else is a config path.
inline MetricField resolve_metric(const std::string& spec, std::string* text = nullptr) {
  static const std::regex flat_name("flat([1-8])");
  std::smatch m;
  if (std::regex_match(spec, m, flat_name)) {
    if (text) *text = spec;
    return flat_metric(std::stoi(m[1]));
  }
  const Config C = read_config(spec);
  if (text) *text = C.text;
  return metric_from_config(C);
}

}  // namespace clab

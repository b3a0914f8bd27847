#pragma once

#include "clab/core.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace clab {

inline constexpr const char* kVersion = "1.0.0";

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Shortest round-trip decimal form.
inline std::string fmt(double v) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string fmt(const IVec& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v(i));
  return s;
}

inline std::string fmt(const Vec& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v(i));
  return s;
}

// Structured text report. Deterministic: no clock or host data goes in here.
struct Report {
  std::string command;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::pair<std::string, std::string>> results;
  std::string extra_input;  // config file contents etc., hashed but not echoed

  void param(const std::string& k, const std::string& v) { params.emplace_back(k, v); }
  void param(const std::string& k, double v) { param(k, fmt(v)); }
  void param(const std::string& k, int v) { param(k, std::to_string(v)); }
  void result(const std::string& k, const std::string& v) { results.emplace_back(k, v); }
  void result(const std::string& k, double v) { result(k, fmt(v)); }
  void result(const std::string& k, int v) { result(k, std::to_string(v)); }
  void result(const std::string& k, bool v) { result(k, std::string(v ? "true" : "false")); }

  std::string input_hash() const {
    std::string s = command + "\n";
    for (const auto& [k, v] : params) s += k + "=" + v + "\n";
    s += extra_input;
    return hex64(fnv1a64(s));
  }

  std::string text() const {
    std::ostringstream os;
    os << "# clab report\n";
    os << "version = " << kVersion << "\n";
    os << "command = " << command << "\n";
    os << "input_hash = " << input_hash() << "\n";
    os << "[params]\n";
    for (const auto& [k, v] : params) os << k << " = " << v << "\n";
    os << "[results]\n";
    for (const auto& [k, v] : results) os << k << " = " << v << "\n";
    return os.str();
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::InvalidArgument, "cannot write report " + path.string());
    out << text();
  }
};

}  // namespace clab

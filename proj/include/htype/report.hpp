#pragma once

#include <json.hpp>

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "htype/core.hpp"

namespace htype {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Check {
  std::string name;
  double maxResidual = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::optional<std::vector<double>> witness;
};

struct ValidationReport {
  std::vector<Check> checks;

  void add(const std::string& name, double residual, double tol,
           std::optional<std::vector<double>> witness = std::nullopt) {
    // NaN residuals fail
    const bool ok = residual <= tol;
    checks.push_back({name, residual, tol, ok, std::move(witness)});
  }

  void merge(const ValidationReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  }

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "checkName,residual,tolerance,pass\n";
    for (const auto& c : checks)
      os << c.name << ',' << fmt17(c.maxResidual) << ',' << fmt17(c.tolerance) << ','
         << (c.pass ? "true" : "false") << '\n';
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) {
      nlohmann::json j{{"checkName", c.name},
                       {"maxResidual", c.maxResidual},
                       {"tolerance", c.tolerance},
                       {"pass", c.pass}};
      if (c.witness) j["witness"] = *c.witness;
      arr.push_back(j);
    }
    return nlohmann::json{{"pass", pass()}, {"checks", arr}};
  }
};

inline std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace htype

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "lbp/dynamics.hpp"

namespace lbp::test {

inline std::map<std::string, double> golden_constants() {
  std::ifstream is(std::filesystem::path(LBP_GOLDEN_DIR) / "constants.csv");
  std::map<std::string, double> out;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::stringstream ss(line);
    std::string name, value;
    std::getline(ss, name, ',');
    std::getline(ss, value, ',');
    out[name] = std::stod(value);
  }
  return out;
}

inline double golden(const std::string& name) { return golden_constants().at(name); }

inline ModelParams make_model(double b, double d, double c, double K, OffspringLaw law, Regime regime) {
  ModelParams p;
  p.b = b;
  p.d = d;
  p.c = c;
  p.K = K;
  p.law = std::make_shared<const OffspringLaw>(std::move(law));
  p.regime = regime;
  return p;
}

inline ModelParams binary_splitting(double K = 300.0) {
  const double one[1] = {1.0};
  return make_model(2.0, 1.0, 1.0, K, OffspringLaw::explicit_pmf(one), Regime::finite_variance());
}

// |observed - expected| within k standard errors of a proportion estimate.
inline bool within_se(double phat, double p, std::size_t n, double k = 4.0) {
  return std::abs(phat - p) <= k * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace lbp::test

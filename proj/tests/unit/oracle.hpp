#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

inline nlohmann::json load_oracle(const std::string& name) {
  std::ifstream is(std::string(FPME_ORACLE_DIR) + "/" + name);
  REQUIRE_MESSAGE(is.good(), "missing oracle file " << name);
  return nlohmann::json::parse(is);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace nfqs {

struct CheckResult {
  std::string name;
  double value = 0.0;      // measured discrepancy or statistic
  double tolerance = 0.0;  // pass iff value <= tolerance
  bool pass = false;
};

inline CheckResult check_compare(const std::string& name, double value,
                                 double tolerance) {
  return {name, value, tolerance, value <= tolerance};
}

// Oracle-equivalence and invariant suite: flow logdets against dense
// Jacobians, gradients against central differences, normalization
// quadratures, eigenstate stationarity under one evolution step, and the
// grid-oracle landmarks.
std::vector<CheckResult> run_core_checks(uint64_t seed, int n_threads = 0);

nlohmann::json checks_to_json(const std::vector<CheckResult>& checks);
bool all_pass(const std::vector<CheckResult>& checks);

}  // namespace nfqs

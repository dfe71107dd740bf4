#pragma once

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace kg::acceptance {

struct Options {
  std::uint64_t seed = 20240611;
  /// Perturbs the discretized example loadings by +0.01 before checking them;
  /// criterion 10 must then fail.
  bool inject_perturbation = false;
};

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  nlohmann::json metrics;
};

inline constexpr int kCriterionCount = 11;

/// Runs criterion `id` (1..11). Exceptions inside a criterion become a failing result.
Result run_criterion(int id, const Options& opts);

/// Runs all criteria in order, invoking `on_result` after each.
std::vector<Result> run_all(const Options& opts, const std::function<void(const Result&)>& on_result = {});

/// One line: "[PASS] 3 global optimality audit: <detail> (1.2 s)".
std::string format_line(const Result& r);

}  // namespace kg::acceptance

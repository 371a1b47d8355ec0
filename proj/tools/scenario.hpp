#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curvlab/metric.hpp"

namespace curvlab::cli {

inline constexpr int kSchemaVersion = 1;

/// Validated scenario file.
struct Scenario {
  nlohmann::json config;
  std::string name;
  std::string kind;
  MetricModel model = MetricModel::flat();
  int n = 256;
  std::vector<double> eps;
  std::vector<double> delta;
  nlohmann::json k;
  double k_offset = 0.0;
  std::uint64_t seed = 0;
  bool expect_verdict = true;
  nlohmann::json params;
};

/// Throws Error(kSchema) on any violation.
Scenario parse_scenario(const nlohmann::json& config);
Scenario load_scenario(const std::filesystem::path& path);

const std::vector<std::string>& scenario_kinds();

struct RunOutcome {
  /// 0 ok, 1 verdict fails (with assert), 2 schema, 3 runtime.
  int exit_code = 0;
  std::string name;
  std::string kind;
  /// "ok", "schema-error" or "error".
  std::string status;
  bool verdict = false;
  bool expected = true;
  /// verdict == expected and status ok
  bool passed = false;
  std::string summary;
  std::string error;
};

/// Runs one scenario and writes its artifacts and manifest.json to out_dir.
RunOutcome run_scenario_file(const std::filesystem::path& path, const std::filesystem::path& out_dir,
                             bool assert_verdict);
RunOutcome run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir, bool assert_verdict);

/// Runs every *.json in dir (sorted by file name) into out_dir/<stem> and
/// writes out_dir/summary.csv. Returns 1 if any scenario failed, else 0.
int run_suite(const std::filesystem::path& dir, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace curvlab::cli

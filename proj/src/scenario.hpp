// Scenario runner behind the CLI and the C API: parses a JSON configuration,
// executes one named experiment deterministically (given config + seed),
// writes report.json and one CSV per data series.
#pragma once

#include <cstdint>
#include <string>

namespace fkms {

enum class RunStatus : int {
  ok = 0,
  check_failed = 1,
  bad_config = 2,
  budget_violation = 3,
  internal_error = 4,
};

class Scenario {
 public:
  static Scenario from_file(const std::string& path);
  static Scenario from_string(const std::string& json_text);

  void set_output_dir(const std::string& dir);
  void set_experiment(const std::string& name);
  void set_seed(long long seed);

  // Executes the experiment, writes report.json + CSV series to the output
  // directory. Never throws; failures are encoded in the status.
  RunStatus run();

  const std::string& report_json() const { return report_; }
  const std::string& error_message() const { return error_; }

 private:
  Scenario() = default;
  std::string config_text_;
  std::string output_dir_override_;
  std::string experiment_override_;
  long long seed_override_ = -1;
  bool has_seed_override_ = false;
  std::string report_;
  std::string error_;
};

// FNV-1a 64-bit, used for the config digest embedded in reports.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace fkms

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hfk {
namespace cli {

inline constexpr const char* kToolName = "hfk";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInfeasible = 2,
  kIllConditioned = 3,
  kIoFailure = 4,
  kDivergence = 5,
  kCounterexample = 6,
  kGateFailure = 7,
};

struct RunConfig {
  std::string command;
  std::string fixture;      ///< example51 | example52 | empty when --system is used
  std::string system_path;
  std::string result_path;  ///< stored synthesis result to reuse
  std::string out_dir = ".";

  std::optional<double> gamma;
  std::optional<double> synth_gamma;  ///< worst-case: level used to synthesize P
  bool min_gamma = false;
  double lo = 1e-6;
  double hi = 1e3;
  double tol = 1e-2;
  bool h2 = false;  ///< trace-minimizing synthesis instead of feasibility only

  int trials = 100;
  int horizon = 200;
  std::uint64_t seed = 1;
  std::vector<double> x0;
  std::string disturbance = "geometric";  ///< geometric | zero
  std::optional<double> amplitude;
  std::optional<double> ratio;
  std::string noise = "normal";  ///< normal | rademacher

  double box = 3.0;    ///< half-width of the state sampling box
  double v_box = 1.0;  ///< half-width of the disturbance sampling box
  long points = 100000;
};

/// Parses argv and runs the selected command. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Runs an already-parsed configuration.
int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace cli
}  // namespace hfk

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace imc::cli {

enum ExitCode : int { kSuccess = 0, kViolation = 1, kInputError = 2 };

struct AnalyzeOptions {
  std::string spec;
  std::size_t r_max = 0;  // 0: 2|X|^2
  double tol = 1e-10;     // stationary lower expectation width
  std::string mode = "indicators";  // or "grid"
  std::size_t grid_samples = 200;
  std::vector<std::string> gambles;  // empty: all indicators
  std::uint64_t seed = 0;
};

struct HittingOptionsCli {
  std::string spec;
  std::string target;
  double tol = 1e-12;
  std::size_t max_iter = 1'000'000;
  double cap = 1e12;
  std::uint64_t seed = 0;
};

struct SimulateOptions {
  std::string spec;
  std::string gamble;
  std::string policy = "adversarial";
  std::size_t n_paths = 200;
  std::size_t length = 10'000;
  double delta = 0.05;
  std::string out_csv;  // empty: no CSV
  double require_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct VerifyOptions {
  std::string spec;
  std::string suite;
  std::size_t instances = 100;
  std::uint64_t seed = 0;
};

// Each command writes its report body to `out` and diagnostics to `err`,
// and returns an ExitCode. Timing goes to `err` only.
int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err);
int cmd_hitting(const HittingOptionsCli& opt, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err);

/// FNV-1a 64 of the given bytes, as 16 hex digits.
std::string digest(const std::string& bytes);

}  // namespace imc::cli

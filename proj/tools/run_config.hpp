#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace coreg::cli {

// Every parameter of a CLI run. canonical() lists all keys in a fixed order
// with resolved defaults; parse_run_config(canonical()) reproduces it.
struct RunConfig {
  std::string command;
  std::string model;  // empty: not given
  std::string instance = "integration";  // or "identity" (W = A = I)
  long long n = 256;
  long long m = 128;
  long long sparsity = 8;
  std::uint64_t seed = 7;
  std::optional<std::uint64_t> noise_seed;  // defaults to seed
  double delta = 1e-5;
  double big_c = 1.0;
  std::optional<double> alpha;  // overrides C·δ
  double alpha_floor = 1e-8;    // α = C·max(δ, floor) for δ = 0
  double w_scale = 1.0;
  std::vector<double> deltas;   // empty: default grid
  int trials = 3;
  int jobs = 1;
  int max_iters = 20000;
  double tol = 1e-10;
  double rho = 1.0;
  double gamma = 1.0;
  bool polish = true;
  bool reference = false;
  bool bounds = false;
  std::string out_prefix = "solution";
  std::string csv = "sweep.csv";
  std::string svg;
  std::string report;

  std::uint64_t resolved_noise_seed() const { return noise_seed.value_or(seed); }
  std::string canonical() const;
};

// Applies one key=value pair; throws std::invalid_argument on unknown keys
// or malformed values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Lines "key=value"; blank lines and lines starting with '#' are skipped.
void apply_text(RunConfig& cfg, const std::string& text);
RunConfig parse_run_config(const std::string& text);

std::string read_file(const std::string& path);

}  // namespace coreg::cli

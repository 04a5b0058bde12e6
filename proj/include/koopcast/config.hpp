#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace koopcast {

// Benchmark configuration, parsed from a flat "key = value" file.
// Unknown keys, duplicate keys, and type mismatches are hard errors that
// name the key (and both lines, for duplicates).
struct BenchmarkConfig {
  // data source: "csv:<path>" or "synth:<kind>"
  std::string data = "synth:damped_rotation";
  std::size_t synth_length = 4096;
  std::size_t synth_channels = 4;
  uint64_t synth_seed = 0;
  double synth_noise = -1.0;  // kind default

  std::vector<std::size_t> input_lens = {16, 32};  // P grid
  std::vector<std::size_t> horizons = {4, 8};      // H grid
  std::vector<std::string> variants = {"constrained",    "scalar_gated",
                                       "per_mode_gated", "mlp_shaped",
                                       "low_rank",       "unconstrained",
                                       "dlinear",        "ssm"};

  long steps = 2000;
  std::size_t batch_size = 32;
  double lr = 3e-4;
  double lambda_lyap = 0.1;
  double rho_max = 0.99;
  double rho_min = 0.0;
  std::size_t d_model = 32;
  std::size_t n_patches = 4;
  bool use_attention = true;
  std::size_t rank = 16;
  std::size_t mlp_hidden = 16;
  std::size_t ssm_hidden = 32;
  bool ssm_diagonal = false;
  double train_ratio = 0.8;
  long eval_every = 100;
  long spectral_log_every = 100;
  uint64_t seed = 0;
  std::string out_dir = "bench_out";
  int workers = 1;  // env KOOPCAST_WORKERS overrides when > 0
};

BenchmarkConfig parse_config(const std::string& path);
BenchmarkConfig parse_config_text(const std::string& text);

// Applies the KOOPCAST_WORKERS environment variable, when set.
void apply_worker_env(BenchmarkConfig& cfg);

}  // namespace koopcast

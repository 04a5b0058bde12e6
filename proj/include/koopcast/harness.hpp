#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "koopcast/config.hpp"
#include "koopcast/data.hpp"
#include "koopcast/train.hpp"

namespace koopcast {

struct RunResult {
  std::string variant;
  std::size_t input_len = 0;
  std::size_t horizon = 0;
  std::string status = "ok";  // "ok", "diverged@<step>", "failed:<what>"
  Metrics train_metrics;
  Metrics test_metrics;
  double max_sv_final = 0.0;  // 0 when the model has no linear propagator
  Vector final_spectrum;      // pooled into the spectra export
  RunHistory history;
};

struct BenchmarkResult {
  std::vector<RunResult> rows;  // deterministic (P, H, variant) order
  std::string summary_text;
  bool any_failed = false;
};

// Loads or synthesizes the configured series.
Series load_series(const BenchmarkConfig& cfg);

// Builds the trainable model for one grid cell ("persistence" excluded).
std::unique_ptr<TrainableModel> build_model(const BenchmarkConfig& cfg,
                                            const std::string& variant, std::size_t p,
                                            std::size_t h, std::size_t channels,
                                            uint64_t run_seed);

// Trains every (variant, P, H) cell plus an untrained persistence row per
// (P, H), writes summary/history/checkpoint/spectra artifacts under
// cfg.out_dir. Individual failures are tagged in the table; the grid
// continues. Runs execute on up to cfg.workers threads; outputs are merged
// in grid order regardless of completion order.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

// Fast invariant/property suite behind the `check` subcommand. Prints one
// line per check; returns false when anything fails.
bool run_self_checks(std::ostream& os);

}  // namespace koopcast

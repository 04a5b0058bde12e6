#pragma once

#include <string>
#include <vector>

#include "koopcast/grad.hpp"
#include "koopcast/linalg.hpp"

namespace koopcast {

struct Series {
  std::size_t length = 0;    // T
  std::size_t channels = 0;  // d
  Matrix values;             // T x d
  std::vector<std::string> names;
};

// CSV: header row, comma-separated numeric columns, chronological rows.
// A first column named "time" is skipped. Errors name the offending row/cell.
Series load_csv(const std::string& path);
void save_csv(const std::string& path, const Series& s);

// Sliding windows with stride 1: exactly T - P - H + 1 (X, Y) pairs.
std::vector<Sample> make_windows(const Series& s, std::size_t p, std::size_t h);

struct SplitResult {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// First floor(ratio * N) pairs to train, remainder to test, no shuffling.
// Throws if either side would be empty.
SplitResult chrono_split(const std::vector<Sample>& pairs, double ratio = 0.8);

struct NormStats {
  Vector mean;               // per channel
  Vector std;                // per channel; degenerate channels replaced by 1
  std::vector<bool> flagged; // true where training std was ~0
};

// z-score using statistics pooled from the training-split X values only,
// applied in place to X and Y of both splits.
NormStats normalize(std::vector<Sample>& train, std::vector<Sample>& test);

void denormalize(Matrix& values, const NormStats& stats);

enum class SynthKind { DampedRotation, SinusoidAr, RandomWalk };

SynthKind synth_kind_from_name(const std::string& name);

// Desk-scale synthetic generators. damped_rotation is a stable linear system
// (2x2 rotation blocks, decay 0.97, angle 0.2 rad) plus Gaussian noise;
// noise_scale < 0 selects each kind's default noise level.
Series synthesize_series(SynthKind kind, std::size_t t, std::size_t d, uint64_t seed,
                         double noise_scale = -1.0);

}  // namespace koopcast

#pragma once

#include <cstdint>
#include <vector>

#include "koopcast/diagnostics.hpp"
#include "koopcast/grad.hpp"

namespace koopcast {

struct AdamState {
  ParamSet m;  // first moments
  ParamSet v;  // second moments
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const ParamSet& params, double lr);

// Standard Adam with bias correction. Throws on non-finite gradients.
ParamSet adam_step(const ParamSet& params, const GradientSet& grads, AdamState& state);

struct TrainConfig {
  long steps = 2000;
  std::size_t batch_size = 32;
  double lr = 3e-4;
  uint64_t seed = 0;
  long eval_every = 100;
  long spectral_log_every = 100;
};

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
};

struct HistoryEntry {
  long step = 0;
  double loss = 0.0;
  double mse = 0.0;
  double hinge = 0.0;
  double max_sv = 0.0;  // 0 when the model has no linear propagator
};

struct RunHistory {
  std::vector<HistoryEntry> entries;
  std::vector<SpectralSnapshot> snapshots;
  bool diverged = false;
  long diverged_step = -1;
  Metrics initial_train;
  Metrics final_train;
  Metrics final_test;
};

// MSE/MAE over all samples, steps and channels in normalized space.
Metrics evaluate(const TrainableModel& model, const std::vector<Sample>& windows);

// Deterministic minibatch sampling (counter-based, with replacement), then
// loss_and_grad -> adam_step -> retraction per step. Divergence is recorded
// with its step index; the run stops there and is marked failed.
RunHistory train(TrainableModel& model, const std::vector<Sample>& train_set,
                 const std::vector<Sample>& test_set, const TrainConfig& cfg);

// History text format, one line per logged step:
//   "step loss mse hinge max_sv"   (%.17g fields, space separated)
std::string history_to_text(const RunHistory& h);

}  // namespace koopcast

#include "koopcast/train.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "koopcast/serialize.hpp"

namespace koopcast {

AdamState make_adam(const ParamSet& params, double lr) {
  AdamState st;
  st.lr = lr;
  for (const auto& [k, t] : params) {
    st.m.emplace(k, Matrix(t.rows, t.cols));
    st.v.emplace(k, Matrix(t.rows, t.cols));
  }
  return st;
}

ParamSet adam_step(const ParamSet& params, const GradientSet& grads, AdamState& state) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, (double)state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, (double)state.step);

  ParamSet out = params;
  for (auto& [key, p] : out) {
    const Matrix& g = grads.at(key);
    Matrix& m = state.m.at(key);
    Matrix& v = state.v.at(key);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double gi = g.data[i];
      if (!std::isfinite(gi)) throw std::runtime_error("adam_step: non-finite gradient");
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * gi;
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
  return out;
}

Metrics evaluate(const TrainableModel& model, const std::vector<Sample>& windows) {
  if (windows.empty()) throw std::invalid_argument("evaluate: no windows");
  double se = 0.0, ae = 0.0;
  std::size_t count = 0;
  for (const Sample& s : windows) {
    const Matrix y_hat = model.predict(s.x);
    for (std::size_t i = 0; i < s.y.data.size(); ++i) {
      const double e = y_hat.data[i] - s.y.data[i];
      se += e * e;
      ae += std::abs(e);
    }
    count += s.y.data.size();
  }
  return {se / (double)count, ae / (double)count};
}

namespace {

SpectralSnapshot model_snapshot(const TrainableModel& model, long step) {
  if (const KoopmanOperator* op = model.koopman()) return snapshot(*op, step);
  if (const Matrix* a = model.transition()) return snapshot(*a, step, "ssm");
  return SpectralSnapshot{step, "none", {}, 0.0, 0.0};
}

}  // namespace

RunHistory train(TrainableModel& model, const std::vector<Sample>& train_set,
                 const std::vector<Sample>& test_set, const TrainConfig& cfg) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");

  RunHistory hist;
  hist.initial_train = evaluate(model, train_set);

  AdamState adam = make_adam(model.params(), cfg.lr);

  for (long step = 0; step < cfg.steps; ++step) {
    std::vector<Sample> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      const uint64_t idx =
          Rng::counter_hash(cfg.seed, (uint64_t)step, (uint64_t)i) % train_set.size();
      batch.push_back(train_set[idx]);
    }

    GradientSet grads;
    LossInfo info;
    try {
      info = model.loss_and_grad(batch, &grads);
      ParamSet next = adam_step(model.params(), grads, adam);
      model.set_params(next);
      model.retract_factors();
    } catch (const std::runtime_error&) {
      hist.diverged = true;
      hist.diverged_step = step;
      break;
    }

    const bool log_now =
        (cfg.spectral_log_every > 0 && step % cfg.spectral_log_every == 0) ||
        step == cfg.steps - 1;
    if (log_now) {
      SpectralSnapshot snap = model_snapshot(model, step);
      hist.entries.push_back({step, info.loss, info.mse, info.hinge, snap.max_sv});
      hist.snapshots.push_back(std::move(snap));
    }
  }

  if (!hist.diverged) {
    hist.final_train = evaluate(model, train_set);
    if (!test_set.empty()) hist.final_test = evaluate(model, test_set);
  }
  return hist;
}

std::string history_to_text(const RunHistory& h) {
  std::ostringstream os;
  for (const auto& e : h.entries)
    os << e.step << " " << format_double(e.loss) << " " << format_double(e.mse) << " "
       << format_double(e.hinge) << " " << format_double(e.max_sv) << "\n";
  return os.str();
}

}  // namespace koopcast

#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "koopcast/train.hpp"

using namespace koopcast;

namespace {

ParamSet scalar_param(double v) {
  ParamSet p;
  p["w"] = Matrix(1, 1);
  p["w"](0, 0) = v;
  return p;
}

ForecasterModel tiny_model(uint64_t seed,
                           KoopmanVariant v = KoopmanVariant::ConstrainedODO) {
  ForecasterInit init;
  init.input_len = 6;
  init.horizon = 2;
  init.channels = 2;
  init.d_model = 4;
  init.n_patches = 3;
  init.use_attention = true;
  init.koopman.variant = v;
  init.koopman.rank = 2;
  Rng rng(seed);
  LossConfig cfg;
  cfg.lambda_lyap = 0.1;
  cfg.p_metric = Matrix::identity(4);
  return ForecasterModel(make_forecaster(init, rng), cfg);
}

std::vector<Sample> tiny_dataset(std::size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> set;
  for (std::size_t i = 0; i < n; ++i)
    set.push_back({Matrix::gaussian(6, 2, rng), Matrix::gaussian(2, 2, rng)});
  return set;
}

}  // namespace

TEST_CASE("first adam step with unit gradient moves by about minus lr") {
  ParamSet p = scalar_param(1.0);
  AdamState st = make_adam(p, 3e-4);
  ParamSet g = scalar_param(1.0);
  const ParamSet next = adam_step(p, g, st);
  // bias-corrected mhat = vhat = 1, so delta = -lr / (1 + eps)
  CHECK(next.at("w")(0, 0) ==
        doctest::Approx(1.0 - 3e-4 / (1.0 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("zero gradients leave parameters unchanged") {
  ParamSet p = scalar_param(0.7);
  AdamState st = make_adam(p, 3e-4);
  const ParamSet next = adam_step(p, scalar_param(0.0), st);
  CHECK(next.at("w")(0, 0) == 0.7);
}

TEST_CASE("two adam steps with constant gradient match the hand recurrence") {
  const double lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.3;
  double w = 2.0, m = 0.0, v = 0.0;
  for (int step = 1; step <= 2; ++step) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, step));
    const double vhat = v / (1.0 - std::pow(b2, step));
    w -= lr * mhat / (std::sqrt(vhat) + eps);
  }

  ParamSet p = scalar_param(2.0);
  AdamState st = make_adam(p, lr);
  p = adam_step(p, scalar_param(g), st);
  p = adam_step(p, scalar_param(g), st);
  CHECK(p.at("w")(0, 0) == doctest::Approx(w).epsilon(1e-15));
}

TEST_CASE("non-finite gradients abort the step") {
  ParamSet p = scalar_param(1.0);
  AdamState st = make_adam(p, 3e-4);
  ParamSet g = scalar_param(std::nan(""));
  CHECK_THROWS_AS(adam_step(p, g, st), std::runtime_error);
}

TEST_CASE("adam result does not depend on parameter-map insertion order") {
  Rng rng(3);
  ParamSet p;
  p["b"] = Matrix::gaussian(2, 2, rng);
  p["a"] = Matrix::gaussian(2, 2, rng);
  ParamSet g;
  g["a"] = Matrix::gaussian(2, 2, rng);
  g["b"] = Matrix::gaussian(2, 2, rng);

  AdamState s1 = make_adam(p, 1e-3), s2 = make_adam(p, 1e-3);
  const ParamSet r1 = adam_step(p, g, s1);
  // same tensors inserted in swapped order
  ParamSet p2;
  p2["a"] = p["a"];
  p2["b"] = p["b"];
  const ParamSet r2 = adam_step(p2, g, s2);
  for (const auto& [key, m] : r1)
    for (std::size_t i = 0; i < m.data.size(); ++i)
      CHECK(m.data[i] == r2.at(key).data[i]);
}

TEST_CASE("evaluate returns zero error for a perfect model and matches a reference") {
  Rng rng(4);
  std::vector<Sample> windows = tiny_dataset(5, 21);
  ForecasterModel model = tiny_model(22);
  for (Sample& s : windows) s.y = model.predict(s.x);
  const Metrics perfect = evaluate(model, windows);
  CHECK(perfect.mse == 0.0);
  CHECK(perfect.mae == 0.0);

  // reference: one-pass accumulation over a non-perfect target set
  std::vector<Sample> hard = tiny_dataset(5, 23);
  double se = 0.0, ae = 0.0;
  std::size_t n = 0;
  for (const Sample& s : hard) {
    const Matrix y_hat = model.predict(s.x);
    for (std::size_t i = 0; i < s.y.data.size(); ++i) {
      const double e = y_hat.data[i] - s.y.data[i];
      se += e * e;
      ae += std::abs(e);
      ++n;
    }
  }
  const Metrics m = evaluate(model, hard);
  CHECK(m.mse == doctest::Approx(se / (double)n).epsilon(1e-12));
  CHECK(m.mae == doctest::Approx(ae / (double)n).epsilon(1e-12));
}

TEST_CASE("lr = 0 leaves losses constant across steps") {
  ForecasterModel model = tiny_model(31);
  const std::vector<Sample> data = tiny_dataset(8, 32);

  TrainConfig cfg;
  cfg.steps = 10;
  cfg.batch_size = 8;
  cfg.lr = 0.0;
  cfg.spectral_log_every = 1;
  const RunHistory h = train(model, data, data, cfg);
  REQUIRE(h.entries.size() == 10);
  CHECK(h.initial_train.mse == doctest::Approx(h.final_train.mse).epsilon(1e-12));
}

TEST_CASE("orthogonality and the spectral bound hold at every logged step") {
  ForecasterModel model = tiny_model(41);
  const std::vector<Sample> data = tiny_dataset(16, 42);

  TrainConfig cfg;
  cfg.steps = 30;
  cfg.batch_size = 4;
  cfg.spectral_log_every = 1;
  const RunHistory h = train(model, data, data, cfg);
  REQUIRE(!h.diverged);
  REQUIRE(h.snapshots.size() == 30);
  for (const SpectralSnapshot& s : h.snapshots) CHECK(s.max_sv < 0.99);

  const KoopmanOperator* op = model.koopman();
  REQUIRE(op != nullptr);
  CHECK(frobenius_norm(sub(matmul(transpose(op->u), op->u), Matrix::identity(4))) <
        1e-10);
  CHECK(frobenius_norm(sub(matmul(transpose(op->v), op->v), Matrix::identity(4))) <
        1e-10);
}

TEST_CASE("training histories are bit-identical across reruns") {
  const std::vector<Sample> data = tiny_dataset(12, 52);
  TrainConfig cfg;
  cfg.steps = 20;
  cfg.batch_size = 4;
  cfg.seed = 7;

  ForecasterModel m1 = tiny_model(51, KoopmanVariant::ScalarGated);
  ForecasterModel m2 = tiny_model(51, KoopmanVariant::ScalarGated);
  const RunHistory h1 = train(m1, data, data, cfg);
  const RunHistory h2 = train(m2, data, data, cfg);
  CHECK(history_to_text(h1) == history_to_text(h2));
  CHECK(h1.final_test.mse == h2.final_test.mse);
}

TEST_CASE("history entries have monotone step indices") {
  ForecasterModel model = tiny_model(61);
  const std::vector<Sample> data = tiny_dataset(8, 62);
  TrainConfig cfg;
  cfg.steps = 25;
  cfg.batch_size = 4;
  cfg.spectral_log_every = 7;
  const RunHistory h = train(model, data, data, cfg);
  for (std::size_t i = 1; i < h.entries.size(); ++i)
    CHECK(h.entries[i].step > h.entries[i - 1].step);
  CHECK(h.entries.back().step == 24);  // final step always logged
}

#pragma once

#include <memory>
#include <vector>

#include "koopcast/baselines.hpp"
#include "koopcast/forecaster.hpp"
#include "koopcast/serialize.hpp"

namespace koopcast {

struct Sample {
  Matrix x;  // P x d
  Matrix y;  // H x d
};

struct LossInfo {
  double loss = 0.0;
  double mse = 0.0;
  double hinge = 0.0;  // Lyapunov term before weighting
};

// Gradients share keys and shapes with the ParamSet they differentiate.
using GradientSet = ParamSet;

// Common surface for the training loop: parameters in/out, analytic
// loss-and-gradient, prediction, and an optional manifold retraction.
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;
  virtual ParamSet params() const = 0;
  virtual void set_params(const ParamSet& p) = 0;
  // grads may be null to evaluate the loss only. Throws std::runtime_error
  // on a non-finite loss (divergence).
  virtual LossInfo loss_and_grad(const std::vector<Sample>& batch,
                                 GradientSet* grads) const = 0;
  virtual Matrix predict(const Matrix& x) const = 0;
  virtual void retract_factors() {}
  virtual const KoopmanOperator* koopman() const { return nullptr; }
  virtual const Matrix* transition() const { return nullptr; }
};

// Batch loss = mean of per-sample losses; gradients are exact reverse-mode
// derivatives of that scalar. U/V gradients are ambient (Euclidean); the
// Stiefel constraint is restored by retraction after the optimizer step.
LossInfo forecaster_loss_and_grad(const Forecaster& f, const LossConfig& cfg,
                                  const std::vector<Sample>& batch, GradientSet* grads);

LossInfo dlinear_loss_and_grad(const DLinearModel& m, const std::vector<Sample>& batch,
                               GradientSet* grads);

LossInfo ssm_loss_and_grad(const SSMModel& m, const std::vector<Sample>& batch,
                           GradientSet* grads);

// Central differences (L(p+eps) - L(p-eps)) / (2 eps) against the analytic
// gradient, relative error with denominator max(|analytic|, |numeric|, 1e-8).
// Returns the max relative error over every parameter entry.
double finite_diff_check(TrainableModel& model, const std::vector<Sample>& batch,
                         double eps);

// --- TrainableModel adapters -------------------------------------------------

class ForecasterModel final : public TrainableModel {
 public:
  ForecasterModel(Forecaster f, LossConfig cfg) : f_(std::move(f)), cfg_(std::move(cfg)) {}
  ParamSet params() const override;
  void set_params(const ParamSet& p) override;
  LossInfo loss_and_grad(const std::vector<Sample>& batch, GradientSet* g) const override;
  Matrix predict(const Matrix& x) const override { return forward(f_, x).y_hat; }
  void retract_factors() override;
  const KoopmanOperator* koopman() const override { return &f_.koop; }
  const Forecaster& forecaster() const { return f_; }
  const LossConfig& loss_config() const { return cfg_; }

 private:
  Forecaster f_;
  LossConfig cfg_;
};

class DLinearTrainable final : public TrainableModel {
 public:
  explicit DLinearTrainable(DLinearModel m) : m_(std::move(m)) {}
  ParamSet params() const override;
  void set_params(const ParamSet& p) override;
  LossInfo loss_and_grad(const std::vector<Sample>& batch, GradientSet* g) const override {
    return dlinear_loss_and_grad(m_, batch, g);
  }
  Matrix predict(const Matrix& x) const override { return dlinear_forward(m_, x); }
  const DLinearModel& model() const { return m_; }

 private:
  DLinearModel m_;
};

class SsmTrainable final : public TrainableModel {
 public:
  SsmTrainable(SSMModel m, std::size_t horizon) : m_(std::move(m)), horizon_(horizon) {}
  ParamSet params() const override;
  void set_params(const ParamSet& p) override;
  LossInfo loss_and_grad(const std::vector<Sample>& batch, GradientSet* g) const override;
  Matrix predict(const Matrix& x) const override { return ssm_forward(m_, x, horizon_); }
  const Matrix* transition() const override { return &m_.a; }
  const SSMModel& model() const { return m_; }

 private:
  SSMModel m_;
  std::size_t horizon_;
};

}  // namespace koopcast

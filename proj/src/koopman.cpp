#include "koopcast/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace koopcast {

std::string variant_name(KoopmanVariant v) {
  switch (v) {
    case KoopmanVariant::ConstrainedODO: return "constrained";
    case KoopmanVariant::ScalarGated: return "scalar_gated";
    case KoopmanVariant::PerModeGated: return "per_mode_gated";
    case KoopmanVariant::MlpShaped: return "mlp_shaped";
    case KoopmanVariant::LowRank: return "low_rank";
    case KoopmanVariant::UnconstrainedDense: return "unconstrained";
  }
  return "?";
}

KoopmanVariant variant_from_name(const std::string& name) {
  if (name == "constrained") return KoopmanVariant::ConstrainedODO;
  if (name == "scalar_gated") return KoopmanVariant::ScalarGated;
  if (name == "per_mode_gated") return KoopmanVariant::PerModeGated;
  if (name == "mlp_shaped") return KoopmanVariant::MlpShaped;
  if (name == "low_rank") return KoopmanVariant::LowRank;
  if (name == "unconstrained") return KoopmanVariant::UnconstrainedDense;
  throw std::invalid_argument("unknown variant: " + name);
}

bool is_odo(KoopmanVariant v) { return v != KoopmanVariant::UnconstrainedDense; }

namespace {

// clamped away from 1 so the spectrum stays strictly below rho_max even when
// the gate saturates past the resolution of double precision
double sigmoid(double x) {
  return std::min(1.0 / (1.0 + std::exp(-x)), 1.0 - 1e-12);
}

double logit(double p) {
  p = std::max(p, 1e-300);  // a zero singular value maps to a very negative raw param
  return std::log(p / (1.0 - p));
}

}  // namespace

Vector build_spectrum(const SpectralParams& spec, KoopmanVariant variant) {
  const std::size_t m = spec.s.size();
  Vector out(m, 0.0);
  const double span = spec.rho_max - spec.rho_min;

  switch (variant) {
    case KoopmanVariant::ConstrainedODO:
    case KoopmanVariant::LowRank:
      for (std::size_t i = 0; i < m; ++i)
        out[i] = spec.rho_min + span * sigmoid(spec.s[i]);
      break;
    case KoopmanVariant::ScalarGated:
      if (spec.alpha.size() != 1 || spec.beta.size() != 1)
        throw std::invalid_argument("build_spectrum: scalar gate needs one alpha/beta");
      for (std::size_t i = 0; i < m; ++i)
        out[i] = spec.rho_min + span * sigmoid(spec.alpha[0] * spec.s[i] + spec.beta[0]);
      break;
    case KoopmanVariant::PerModeGated:
      if (spec.alpha.size() != m || spec.beta.size() != m)
        throw std::invalid_argument("build_spectrum: per-mode gate shape mismatch");
      for (std::size_t i = 0; i < m; ++i)
        out[i] = spec.rho_min + span * sigmoid(spec.alpha[i] * spec.s[i] + spec.beta[i]);
      break;
    case KoopmanVariant::MlpShaped: {
      const std::size_t h = spec.mlp_b1.size();
      if (spec.mlp_w1.rows != h || spec.mlp_w1.cols != 1 || spec.mlp_w2.rows != 1 ||
          spec.mlp_w2.cols != h)
        throw std::invalid_argument("build_spectrum: mlp shape mismatch");
      for (std::size_t i = 0; i < m; ++i) {
        double g = spec.mlp_b2;
        for (std::size_t j = 0; j < h; ++j)
          g += spec.mlp_w2(0, j) * std::tanh(spec.mlp_w1(j, 0) * spec.s[i] + spec.mlp_b1[j]);
        out[i] = spec.rho_min + span * sigmoid(g);
      }
      break;
    }
    case KoopmanVariant::UnconstrainedDense:
      throw std::invalid_argument("build_spectrum: dense variant has no spectrum parameters");
  }
  return out;
}

Matrix materialize(const KoopmanOperator& op) {
  if (op.variant == KoopmanVariant::UnconstrainedDense) return op.k_dense;
  const Vector sigma = build_spectrum(op.spec, op.variant);
  Matrix usv(op.d, op.d);
  for (std::size_t i = 0; i < op.d; ++i)
    for (std::size_t j = 0; j < op.d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < op.m; ++k) acc += op.u(i, k) * sigma[k] * op.v(j, k);
      usv(i, j) = acc;
    }
  return usv;
}

Vector apply(const KoopmanOperator& op, const Vector& z) {
  if (z.size() != op.d) throw std::invalid_argument("apply: dimension mismatch");
  if (op.variant == KoopmanVariant::UnconstrainedDense) return matvec(op.k_dense, z);
  const Vector sigma = build_spectrum(op.spec, op.variant);
  Vector c = matvec_t(op.v, z);  // V^T z
  for (std::size_t i = 0; i < op.m; ++i) c[i] *= sigma[i];
  return matvec(op.u, c);
}

Vector inverse_apply(const KoopmanOperator& op, const Vector& z) {
  if (!is_odo(op.variant) || op.variant == KoopmanVariant::LowRank)
    throw std::runtime_error("inverse_apply: invertibility not guaranteed for " +
                             variant_name(op.variant));
  if (op.spec.rho_min <= 0.0)
    throw std::runtime_error("inverse_apply: invertibility not guaranteed with rho_min = 0");
  if (z.size() != op.d) throw std::invalid_argument("inverse_apply: dimension mismatch");
  const Vector sigma = build_spectrum(op.spec, op.variant);
  Vector c = matvec_t(op.u, z);  // U^T z
  for (std::size_t i = 0; i < op.m; ++i) c[i] /= sigma[i];
  return matvec(op.v, c);
}

Vector operator_spectrum(const KoopmanOperator& op) {
  if (op.variant == KoopmanVariant::UnconstrainedDense)
    return singular_values(op.k_dense);
  Vector sigma = build_spectrum(op.spec, op.variant);
  for (auto& x : sigma) x = std::abs(x);
  std::sort(sigma.begin(), sigma.end(), std::greater<double>());
  sigma.resize(op.d, 0.0);  // LowRank: zero singular values past rank r
  return sigma;
}

KoopmanOperator retract(const KoopmanOperator& op) {
  if (!is_odo(op.variant))
    throw std::runtime_error("retract: dense variant has no orthonormal factors");
  KoopmanOperator out = op;
  out.u = qr_orthonormalize(op.u);
  out.v = qr_orthonormalize(op.v);
  return out;
}

KoopmanOperator make_koopman(const KoopmanInit& init, Rng& rng) {
  KoopmanOperator op;
  op.variant = init.variant;
  op.d = init.d;
  op.m = (init.variant == KoopmanVariant::LowRank) ? init.rank : init.d;
  if (init.variant == KoopmanVariant::LowRank && init.rank >= init.d)
    throw std::invalid_argument("make_koopman: low-rank requires rank < d");

  if (init.variant == KoopmanVariant::UnconstrainedDense) {
    op.k_dense = Matrix::gaussian(init.d, init.d, rng, 0.9 / std::sqrt((double)init.d));
    return op;
  }

  op.u = qr_orthonormalize(Matrix::gaussian(init.d, op.m, rng));
  op.v = qr_orthonormalize(Matrix::gaussian(init.d, op.m, rng));
  op.spec.rho_max = init.rho_max;
  op.spec.rho_min = init.rho_min;
  op.spec.s.resize(op.m);
  for (auto& x : op.spec.s) x = rng.gaussian() * 0.1;

  if (init.variant == KoopmanVariant::ScalarGated) {
    op.spec.alpha = {1.0};
    op.spec.beta = {0.0};
  } else if (init.variant == KoopmanVariant::PerModeGated) {
    op.spec.alpha.assign(op.m, 1.0);
    op.spec.beta.assign(op.m, 0.0);
  } else if (init.variant == KoopmanVariant::MlpShaped) {
    const std::size_t h = init.mlp_hidden;
    op.spec.mlp_w1 = Matrix::gaussian(h, 1, rng, 1.0);
    op.spec.mlp_b1.assign(h, 0.0);
    op.spec.mlp_w2 = Matrix::gaussian(1, h, rng, 1.0 / std::sqrt((double)h));
    op.spec.mlp_b2 = 0.0;
  }
  return op;
}

KoopmanOperator odo_from_matrix(const Matrix& m, double rho_max) {
  if (m.rows != m.cols) throw std::invalid_argument("odo_from_matrix: not square");
  SvdResult f = svd(m);
  if (!f.s.empty() && f.s[0] >= rho_max)
    throw std::invalid_argument("odo_from_matrix: ||M||_2 >= rho_max");

  KoopmanOperator op;
  op.variant = KoopmanVariant::ConstrainedODO;
  op.d = m.rows;
  op.m = m.rows;
  op.u = f.u;
  op.v = f.v;
  op.spec.rho_max = rho_max;
  op.spec.rho_min = 0.0;
  op.spec.s.resize(op.m);
  for (std::size_t i = 0; i < op.m; ++i) op.spec.s[i] = logit(f.s[i] / rho_max);
  return op;
}

KoopmanOperator lowrank_truncation(const Matrix& m, std::size_t r, double rho_max) {
  if (m.rows != m.cols) throw std::invalid_argument("lowrank_truncation: not square");
  if (r >= m.rows) throw std::invalid_argument("lowrank_truncation: rank must be < d");
  SvdResult f = svd(m);
  if (f.s[0] >= rho_max)
    throw std::invalid_argument("lowrank_truncation: leading singular value >= rho_max");

  KoopmanOperator op;
  op.variant = KoopmanVariant::LowRank;
  op.d = m.rows;
  op.m = r;
  op.u = Matrix(op.d, r);
  op.v = Matrix(op.d, r);
  op.spec.rho_max = rho_max;
  op.spec.rho_min = 0.0;
  op.spec.s.resize(r);
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t i = 0; i < op.d; ++i) {
      op.u(i, j) = f.u(i, j);
      op.v(i, j) = f.v(i, j);
    }
    op.spec.s[j] = logit(f.s[j] / rho_max);
  }
  return op;
}

}  // namespace koopcast

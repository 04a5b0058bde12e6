#pragma once

#include <string>

#include "koopcast/linalg.hpp"

namespace koopcast {

enum class KoopmanVariant {
  ConstrainedODO,
  ScalarGated,
  PerModeGated,
  MlpShaped,
  LowRank,
  UnconstrainedDense,
};

std::string variant_name(KoopmanVariant v);
KoopmanVariant variant_from_name(const std::string& name);
bool is_odo(KoopmanVariant v);

// Parameters generating the spectrum Sigma = rho_min + (rho_max - rho_min) *
// sigmoid(gate(S_i)). The gate depends on the variant: identity, shared
// affine, per-mode affine, or a one-hidden-layer tanh MLP applied entry-wise.
struct SpectralParams {
  Vector s;       // raw spectrum parameters, length m
  Vector alpha;   // length 1 (ScalarGated) or m (PerModeGated)
  Vector beta;    // same length as alpha
  Matrix mlp_w1;  // h x 1 (MlpShaped only)
  Vector mlp_b1;  // h
  Matrix mlp_w2;  // 1 x h
  double mlp_b2 = 0.0;
  double rho_max = 0.99;
  double rho_min = 0.0;
};

// One latent propagator. ODO variants keep K = U diag(Sigma) V^T implicitly;
// the unconstrained variant carries a free dense matrix.
struct KoopmanOperator {
  KoopmanVariant variant = KoopmanVariant::ConstrainedODO;
  std::size_t d = 0;  // latent dimension
  std::size_t m = 0;  // spectrum length; m == d except LowRank (m == r < d)
  Matrix u;           // d x m, orthonormal columns
  Matrix v;           // d x m, orthonormal columns
  SpectralParams spec;
  Matrix k_dense;     // d x d (UnconstrainedDense only)
};

// Squashed spectrum, each entry strictly inside (rho_min, rho_max).
Vector build_spectrum(const SpectralParams& spec, KoopmanVariant variant);

// Dense d x d matrix realizing the operator.
Matrix materialize(const KoopmanOperator& op);

// K z without materializing; O(d*m).
Vector apply(const KoopmanOperator& op, const Vector& z);

// V diag(Sigma^-1) U^T z. Requires a full-rank ODO variant with rho_min > 0;
// throws std::runtime_error otherwise (invertibility not guaranteed).
Vector inverse_apply(const KoopmanOperator& op, const Vector& z);

// Descending singular values: sorted |Sigma| for ODO variants (padded with
// zeros up to d for LowRank), computed SVD for the dense variant.
Vector operator_spectrum(const KoopmanOperator& op);

// QR-retract U and V back onto the Stiefel manifold; spectrum untouched.
// Throws std::runtime_error for UnconstrainedDense.
KoopmanOperator retract(const KoopmanOperator& op);

struct KoopmanInit {
  KoopmanVariant variant = KoopmanVariant::ConstrainedODO;
  std::size_t d = 32;
  std::size_t rank = 16;  // LowRank only
  double rho_max = 0.99;
  double rho_min = 0.0;
  std::size_t mlp_hidden = 16;  // MlpShaped only
};

// Random initialization: S ~ N(0, 0.1^2), alpha = 1, beta = 0, U/V as QR of
// standard Gaussians, dense K Gaussian scaled by 0.9/sqrt(d).
KoopmanOperator make_koopman(const KoopmanInit& init, Rng& rng);

// Exact ODO representation of a matrix with ||M||_2 < rho_max, built from
// its SVD (raw parameters recovered by inverting the squashing map).
KoopmanOperator odo_from_matrix(const Matrix& m, double rho_max);

// Rank-r SVD truncation of M expressed as a LowRank operator. Requires the
// retained singular values to lie strictly inside (0, rho_max).
KoopmanOperator lowrank_truncation(const Matrix& m, std::size_t r, double rho_max);

}  // namespace koopcast

#pragma once

#include "koopcast/koopman.hpp"
#include "koopcast/linalg.hpp"

namespace koopcast {

// Simplified patch encoder: flatten patches, linear embedding, fixed
// sinusoidal positions, optional single-head self-attention, mean pooling.
struct PatchEncoder {
  std::size_t n_patches = 4;
  std::size_t patch_len = 0;
  Matrix embed;     // d_model x (patch_len * d)
  Matrix pos_enc;   // n_patches x d_model, fixed (not trained)
  Matrix attn_qkv;  // 3*d_model x d_model, stacked [Wq; Wk; Wv]
  bool use_attention = false;
};

struct LinearDecoder {
  Matrix w;  // (H*d) x d_lat
  Vector b;  // H*d
};

struct LossConfig {
  double lambda_lyap = 0.1;
  Matrix p_metric;  // d_lat x d_lat, symmetric positive definite
};

struct Forecaster {
  std::size_t input_len = 0;  // P
  std::size_t horizon = 0;    // H
  std::size_t channels = 0;   // d
  std::size_t d_model = 32;   // == d_lat
  PatchEncoder encoder;
  KoopmanOperator koop;
  LinearDecoder decoder;
};

struct ForecasterInit {
  std::size_t input_len = 32;
  std::size_t horizon = 8;
  std::size_t channels = 4;
  std::size_t d_model = 32;
  std::size_t n_patches = 4;
  bool use_attention = true;
  KoopmanInit koopman;
};

Matrix sinusoidal_positions(std::size_t n, std::size_t d_model);
Forecaster make_forecaster(const ForecasterInit& init, Rng& rng);

// Intermediates kept for the reverse pass.
struct EncodeCache {
  std::vector<Vector> flats;    // flattened patches
  std::vector<Vector> tokens;   // after embedding + positions
  std::vector<Vector> q, k, v;  // attention projections (if enabled)
  std::vector<Vector> attn;     // softmax rows a_j
};

// z = mean-pooled token representation of the window.
Vector encode(const PatchEncoder& enc, const Matrix& x, std::size_t d_model,
              EncodeCache* cache = nullptr);

// reshape(W z + b, H, d)
Matrix decode(const LinearDecoder& dec, const Vector& z_next, std::size_t h,
              std::size_t d);

struct ForwardResult {
  Matrix y_hat;  // H x d
  Vector z;
  Vector z_next;
};

ForwardResult forward(const Forecaster& f, const Matrix& x);

// mean squared error over all H*d entries plus
// lambda * max(0, z_next^T P z_next - z^T P z)
double loss(const Matrix& y_hat, const Matrix& y, const Vector& z,
            const Vector& z_next, const LossConfig& cfg);

}  // namespace koopcast

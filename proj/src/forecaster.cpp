#include "koopcast/forecaster.hpp"

#include <cmath>
#include <stdexcept>

namespace koopcast {

Matrix sinusoidal_positions(std::size_t n, std::size_t d_model) {
  Matrix pos(n, d_model);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < d_model; ++k) {
      const double freq =
          std::pow(10000.0, -2.0 * static_cast<double>(k / 2) / static_cast<double>(d_model));
      const double angle = static_cast<double>(j) * freq;
      pos(j, k) = (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pos;
}

Forecaster make_forecaster(const ForecasterInit& init, Rng& rng) {
  Forecaster f;
  f.input_len = init.input_len;
  f.horizon = init.horizon;
  f.channels = init.channels;
  f.d_model = init.d_model;

  PatchEncoder& enc = f.encoder;
  enc.n_patches = init.n_patches;
  enc.patch_len = (init.input_len + init.n_patches - 1) / init.n_patches;
  const std::size_t flat = enc.patch_len * init.channels;
  enc.embed = Matrix::gaussian(init.d_model, flat, rng, 1.0 / std::sqrt((double)flat));
  enc.pos_enc = sinusoidal_positions(enc.n_patches, init.d_model);
  enc.use_attention = init.use_attention;
  if (init.use_attention)
    enc.attn_qkv = Matrix::gaussian(3 * init.d_model, init.d_model, rng,
                                    1.0 / std::sqrt((double)init.d_model));

  KoopmanInit ki = init.koopman;
  ki.d = init.d_model;
  f.koop = make_koopman(ki, rng);

  const std::size_t out = init.horizon * init.channels;
  f.decoder.w = Matrix::gaussian(out, init.d_model, rng, 1.0 / std::sqrt((double)init.d_model));
  f.decoder.b.assign(out, 0.0);
  return f;
}

namespace {

// right-pad by repeating the last row so P fills n_patches * patch_len
Matrix pad_window(const Matrix& x, std::size_t padded_rows) {
  if (x.rows == padded_rows) return x;
  Matrix p(padded_rows, x.cols);
  for (std::size_t i = 0; i < padded_rows; ++i) {
    const std::size_t src = (i < x.rows) ? i : x.rows - 1;
    for (std::size_t j = 0; j < x.cols; ++j) p(i, j) = x(src, j);
  }
  return p;
}

}  // namespace

Vector encode(const PatchEncoder& enc, const Matrix& x, std::size_t d_model,
              EncodeCache* cache) {
  const std::size_t d = x.cols;
  const Matrix xp = pad_window(x, enc.n_patches * enc.patch_len);
  const std::size_t flat = enc.patch_len * d;
  if (enc.embed.cols != flat || enc.embed.rows != d_model)
    throw std::invalid_argument("encode: embedding shape mismatch");

  std::vector<Vector> tokens(enc.n_patches);
  std::vector<Vector> flats(enc.n_patches);
  for (std::size_t j = 0; j < enc.n_patches; ++j) {
    Vector f(flat);
    for (std::size_t i = 0; i < enc.patch_len; ++i)
      for (std::size_t c = 0; c < d; ++c) f[i * d + c] = xp(j * enc.patch_len + i, c);
    tokens[j] = matvec(enc.embed, f);
    for (std::size_t k = 0; k < d_model; ++k) tokens[j][k] += enc.pos_enc(j, k);
    flats[j] = std::move(f);
  }
  if (cache) {
    cache->flats = flats;
    cache->tokens = tokens;
  }

  if (enc.use_attention) {
    const std::size_t n = enc.n_patches;
    const double inv_sqrt = 1.0 / std::sqrt((double)d_model);
    std::vector<Vector> q(n), kk(n), v(n);
    for (std::size_t j = 0; j < n; ++j) {
      Vector qkv = matvec(enc.attn_qkv, tokens[j]);
      q[j] = Vector(qkv.begin(), qkv.begin() + d_model);
      kk[j] = Vector(qkv.begin() + d_model, qkv.begin() + 2 * d_model);
      v[j] = Vector(qkv.begin() + 2 * d_model, qkv.end());
    }
    std::vector<Vector> attn(n);
    std::vector<Vector> out(n);
    for (std::size_t j = 0; j < n; ++j) {
      Vector score(n);
      double mx = -1e300;
      for (std::size_t l = 0; l < n; ++l) {
        score[l] = dot(q[j], kk[l]) * inv_sqrt;
        mx = std::max(mx, score[l]);
      }
      double zsum = 0.0;
      for (std::size_t l = 0; l < n; ++l) {
        score[l] = std::exp(score[l] - mx);
        zsum += score[l];
      }
      for (std::size_t l = 0; l < n; ++l) score[l] /= zsum;
      out[j].assign(d_model, 0.0);
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t k = 0; k < d_model; ++k) out[j][k] += score[l] * v[l][k];
      attn[j] = std::move(score);
    }
    if (cache) {
      cache->q = q;
      cache->k = kk;
      cache->v = v;
      cache->attn = attn;
    }
    tokens = std::move(out);
  }

  Vector z(d_model, 0.0);
  for (const auto& t : tokens)
    for (std::size_t k = 0; k < d_model; ++k) z[k] += t[k];
  for (auto& x2 : z) x2 /= static_cast<double>(enc.n_patches);
  return z;
}

Matrix decode(const LinearDecoder& dec, const Vector& z_next, std::size_t h,
              std::size_t d) {
  if (dec.w.rows != h * d || dec.w.cols != z_next.size())
    throw std::invalid_argument("decode: shape mismatch");
  Vector y = matvec(dec.w, z_next);
  Matrix out(h, d);
  for (std::size_t i = 0; i < h * d; ++i) out.data[i] = y[i] + dec.b[i];
  return out;
}

ForwardResult forward(const Forecaster& f, const Matrix& x) {
  if (x.rows != f.input_len || x.cols != f.channels)
    throw std::invalid_argument("forward: window shape mismatch");
  ForwardResult r;
  r.z = encode(f.encoder, x, f.d_model);
  r.z_next = koopcast::apply(f.koop, r.z);
  r.y_hat = decode(f.decoder, r.z_next, f.horizon, f.channels);
  return r;
}

double loss(const Matrix& y_hat, const Matrix& y, const Vector& z,
            const Vector& z_next, const LossConfig& cfg) {
  if (y_hat.rows != y.rows || y_hat.cols != y.cols)
    throw std::invalid_argument("loss: forecast/target shape mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double e = y_hat.data[i] - y.data[i];
    mse += e * e;
  }
  mse /= static_cast<double>(y.data.size());

  const Vector pz = matvec(cfg.p_metric, z);
  const Vector pzn = matvec(cfg.p_metric, z_next);
  const double gap = dot(z_next, pzn) - dot(z, pz);
  return mse + cfg.lambda_lyap * std::max(0.0, gap);
}

}  // namespace koopcast

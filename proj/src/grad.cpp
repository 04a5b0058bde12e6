#include "koopcast/grad.hpp"

#include <cmath>
#include <stdexcept>

namespace koopcast {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix col(const Vector& v) {
  Matrix m(v.size(), 1);
  m.data = v;
  return m;
}

Vector as_vec(const Matrix& m) { return m.data; }

void accumulate(Matrix& dst, const Matrix& src, double w) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += w * src.data[i];
}

// gate input per spectrum entry, shared by forward spectrum and backward
double gate_input(const SpectralParams& sp, KoopmanVariant variant, std::size_t i) {
  switch (variant) {
    case KoopmanVariant::ConstrainedODO:
    case KoopmanVariant::LowRank:
      return sp.s[i];
    case KoopmanVariant::ScalarGated:
      return sp.alpha[0] * sp.s[i] + sp.beta[0];
    case KoopmanVariant::PerModeGated:
      return sp.alpha[i] * sp.s[i] + sp.beta[i];
    case KoopmanVariant::MlpShaped: {
      double g = sp.mlp_b2;
      for (std::size_t j = 0; j < sp.mlp_b1.size(); ++j)
        g += sp.mlp_w2(0, j) * std::tanh(sp.mlp_w1(j, 0) * sp.s[i] + sp.mlp_b1[j]);
      return g;
    }
    default:
      throw std::logic_error("gate_input: dense variant");
  }
}

// dL/d(spectrum params) from dL/dSigma, accumulated into grads
void spectrum_backward(const SpectralParams& sp, KoopmanVariant variant,
                       const Vector& dsigma, GradientSet& g) {
  const std::size_t m = sp.s.size();
  const double span = sp.rho_max - sp.rho_min;
  Matrix& ds = g.at("koopman.S");

  for (std::size_t i = 0; i < m; ++i) {
    const double a = gate_input(sp, variant, i);
    const double p = sigmoid(a);
    const double dgate = dsigma[i] * span * p * (1.0 - p);

    switch (variant) {
      case KoopmanVariant::ConstrainedODO:
      case KoopmanVariant::LowRank:
        ds.data[i] += dgate;
        break;
      case KoopmanVariant::ScalarGated:
        ds.data[i] += dgate * sp.alpha[0];
        g.at("koopman.alpha").data[0] += dgate * sp.s[i];
        g.at("koopman.beta").data[0] += dgate;
        break;
      case KoopmanVariant::PerModeGated:
        ds.data[i] += dgate * sp.alpha[i];
        g.at("koopman.alpha").data[i] += dgate * sp.s[i];
        g.at("koopman.beta").data[i] += dgate;
        break;
      case KoopmanVariant::MlpShaped: {
        Matrix& dw1 = g.at("koopman.mlp_w1");
        Matrix& db1 = g.at("koopman.mlp_b1");
        Matrix& dw2 = g.at("koopman.mlp_w2");
        Matrix& db2 = g.at("koopman.mlp_b2");
        db2.data[0] += dgate;
        for (std::size_t j = 0; j < sp.mlp_b1.size(); ++j) {
          const double t = std::tanh(sp.mlp_w1(j, 0) * sp.s[i] + sp.mlp_b1[j]);
          dw2.data[j] += dgate * t;
          const double dpre = dgate * sp.mlp_w2(0, j) * (1.0 - t * t);
          dw1.data[j] += dpre * sp.s[i];
          db1.data[j] += dpre;
          ds.data[i] += dpre * sp.mlp_w1(j, 0);
        }
        break;
      }
      default:
        throw std::logic_error("spectrum_backward: dense variant");
    }
  }
}

GradientSet zero_like(const ParamSet& p) {
  GradientSet g;
  for (const auto& [k, t] : p) g.emplace(k, Matrix(t.rows, t.cols));
  return g;
}

}  // namespace

// ---- Forecaster ---------------------------------------------------------------

ParamSet ForecasterModel::params() const {
  ParamSet p;
  p["encoder.embed"] = f_.encoder.embed;
  if (f_.encoder.use_attention) p["encoder.attn_qkv"] = f_.encoder.attn_qkv;
  p["decoder.w"] = f_.decoder.w;
  p["decoder.b"] = col(f_.decoder.b);
  const KoopmanOperator& op = f_.koop;
  if (op.variant == KoopmanVariant::UnconstrainedDense) {
    p["koopman.K"] = op.k_dense;
    return p;
  }
  p["koopman.U"] = op.u;
  p["koopman.V"] = op.v;
  p["koopman.S"] = col(op.spec.s);
  if (op.variant == KoopmanVariant::ScalarGated ||
      op.variant == KoopmanVariant::PerModeGated) {
    p["koopman.alpha"] = col(op.spec.alpha);
    p["koopman.beta"] = col(op.spec.beta);
  } else if (op.variant == KoopmanVariant::MlpShaped) {
    p["koopman.mlp_w1"] = op.spec.mlp_w1;
    p["koopman.mlp_b1"] = col(op.spec.mlp_b1);
    p["koopman.mlp_w2"] = op.spec.mlp_w2;
    Matrix b2(1, 1);
    b2.data[0] = op.spec.mlp_b2;
    p["koopman.mlp_b2"] = b2;
  }
  return p;
}

void ForecasterModel::set_params(const ParamSet& p) {
  f_.encoder.embed = p.at("encoder.embed");
  if (f_.encoder.use_attention) f_.encoder.attn_qkv = p.at("encoder.attn_qkv");
  f_.decoder.w = p.at("decoder.w");
  f_.decoder.b = as_vec(p.at("decoder.b"));
  KoopmanOperator& op = f_.koop;
  if (op.variant == KoopmanVariant::UnconstrainedDense) {
    op.k_dense = p.at("koopman.K");
    return;
  }
  op.u = p.at("koopman.U");
  op.v = p.at("koopman.V");
  op.spec.s = as_vec(p.at("koopman.S"));
  if (op.variant == KoopmanVariant::ScalarGated ||
      op.variant == KoopmanVariant::PerModeGated) {
    op.spec.alpha = as_vec(p.at("koopman.alpha"));
    op.spec.beta = as_vec(p.at("koopman.beta"));
  } else if (op.variant == KoopmanVariant::MlpShaped) {
    op.spec.mlp_w1 = p.at("koopman.mlp_w1");
    op.spec.mlp_b1 = as_vec(p.at("koopman.mlp_b1"));
    op.spec.mlp_w2 = p.at("koopman.mlp_w2");
    op.spec.mlp_b2 = p.at("koopman.mlp_b2").data[0];
  }
}

void ForecasterModel::retract_factors() {
  if (is_odo(f_.koop.variant)) f_.koop = retract(f_.koop);
}

LossInfo ForecasterModel::loss_and_grad(const std::vector<Sample>& batch,
                                        GradientSet* g) const {
  return forecaster_loss_and_grad(f_, cfg_, batch, g);
}

LossInfo forecaster_loss_and_grad(const Forecaster& f, const LossConfig& cfg,
                                  const std::vector<Sample>& batch, GradientSet* grads) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  const std::size_t n_out = f.horizon * f.channels;
  const std::size_t dm = f.d_model;
  const KoopmanOperator& op = f.koop;
  const bool dense = op.variant == KoopmanVariant::UnconstrainedDense;
  const Vector sigma = dense ? Vector{} : build_spectrum(op.spec, op.variant);

  if (grads) {
    ForecasterModel tmp(f, cfg);  // key/shape template
    *grads = zero_like(tmp.params());
  }

  LossInfo info;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  for (const Sample& sample : batch) {
    EncodeCache cache;
    const Vector z = encode(f.encoder, sample.x, dm, &cache);

    Vector c, sz, z_next;
    if (dense) {
      z_next = matvec(op.k_dense, z);
    } else {
      c = matvec_t(op.v, z);
      sz = c;
      for (std::size_t i = 0; i < op.m; ++i) sz[i] *= sigma[i];
      z_next = matvec(op.u, sz);
    }

    Vector y_hat = matvec(f.decoder.w, z_next);
    for (std::size_t i = 0; i < n_out; ++i) y_hat[i] += f.decoder.b[i];

    double mse = 0.0;
    Vector dy(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
      const double e = y_hat[i] - sample.y.data[i];
      mse += e * e;
      dy[i] = 2.0 * e / static_cast<double>(n_out);
    }
    mse /= static_cast<double>(n_out);

    const Vector pz = matvec(cfg.p_metric, z);
    const Vector pzn = matvec(cfg.p_metric, z_next);
    const double gap = dot(z_next, pzn) - dot(z, pz);
    const double hinge = std::max(0.0, gap);

    info.mse += mse * inv_batch;
    info.hinge += hinge * inv_batch;
    info.loss += (mse + cfg.lambda_lyap * hinge) * inv_batch;

    if (!grads) continue;
    GradientSet& g = *grads;

    // decoder
    Vector dz_next = matvec_t(f.decoder.w, dy);
    accumulate(g.at("decoder.w"), outer(dy, z_next), inv_batch);
    accumulate(g.at("decoder.b"), col(dy), inv_batch);

    // hinge subgradient: zero at the kink (gap <= 0)
    Vector dz(dm, 0.0);
    if (gap > 0.0) {
      for (std::size_t i = 0; i < dm; ++i) {
        dz_next[i] += cfg.lambda_lyap * 2.0 * pzn[i];
        dz[i] -= cfg.lambda_lyap * 2.0 * pz[i];
      }
    }

    // Koopman layer
    if (dense) {
      accumulate(g.at("koopman.K"), outer(dz_next, z), inv_batch);
      const Vector back = matvec_t(op.k_dense, dz_next);
      for (std::size_t i = 0; i < dm; ++i) dz[i] += back[i];
    } else {
      // z_next = U (sigma .* (V^T z))
      accumulate(g.at("koopman.U"), outer(dz_next, sz), inv_batch);
      Vector dsz = matvec_t(op.u, dz_next);
      Vector dsigma(op.m), dc(op.m);
      for (std::size_t i = 0; i < op.m; ++i) {
        dsigma[i] = dsz[i] * c[i] * inv_batch;
        dc[i] = dsz[i] * sigma[i];
      }
      accumulate(g.at("koopman.V"), outer(z, dc), inv_batch);
      const Vector back = matvec(op.v, dc);
      for (std::size_t i = 0; i < dm; ++i) dz[i] += back[i];
      spectrum_backward(op.spec, op.variant, dsigma, g);
    }

    // mean pooling
    const std::size_t n = f.encoder.n_patches;
    std::vector<Vector> dtok(n, Vector(dm, 0.0));
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < dm; ++k) dtok[j][k] = dz[k] / static_cast<double>(n);

    if (f.encoder.use_attention) {
      const double inv_sqrt = 1.0 / std::sqrt((double)dm);
      std::vector<Vector> dq(n, Vector(dm, 0.0)), dk(n, Vector(dm, 0.0)),
          dv(n, Vector(dm, 0.0));
      for (std::size_t j = 0; j < n; ++j) {
        // o_j = sum_l a_jl v_l
        Vector da(n, 0.0);
        for (std::size_t l = 0; l < n; ++l) {
          da[l] = dot(dtok[j], cache.v[l]);
          for (std::size_t kk = 0; kk < dm; ++kk)
            dv[l][kk] += cache.attn[j][l] * dtok[j][kk];
        }
        double inner = 0.0;
        for (std::size_t l = 0; l < n; ++l) inner += cache.attn[j][l] * da[l];
        for (std::size_t l = 0; l < n; ++l) {
          const double dscore = cache.attn[j][l] * (da[l] - inner);
          for (std::size_t kk = 0; kk < dm; ++kk) {
            dq[j][kk] += dscore * cache.k[l][kk] * inv_sqrt;
            dk[l][kk] += dscore * cache.q[j][kk] * inv_sqrt;
          }
        }
      }
      // qkv projection: rows [Wq; Wk; Wv] applied to pre-attention tokens
      Matrix& dqkv = g.at("encoder.attn_qkv");
      std::vector<Vector> dtok_pre(n, Vector(dm, 0.0));
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t r = 0; r < dm; ++r)
          for (std::size_t kk = 0; kk < dm; ++kk) {
            dqkv(r, kk) += inv_batch * dq[j][r] * cache.tokens[j][kk];
            dqkv(dm + r, kk) += inv_batch * dk[j][r] * cache.tokens[j][kk];
            dqkv(2 * dm + r, kk) += inv_batch * dv[j][r] * cache.tokens[j][kk];
          }
        for (std::size_t kk = 0; kk < dm; ++kk) {
          double acc = 0.0;
          for (std::size_t r = 0; r < dm; ++r) {
            acc += f.encoder.attn_qkv(r, kk) * dq[j][r];
            acc += f.encoder.attn_qkv(dm + r, kk) * dk[j][r];
            acc += f.encoder.attn_qkv(2 * dm + r, kk) * dv[j][r];
          }
          dtok_pre[j][kk] = acc;
        }
      }
      dtok = std::move(dtok_pre);
    }

    // embedding (positions are fixed)
    Matrix& demb = g.at("encoder.embed");
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t r = 0; r < dm; ++r) {
        const double dr = dtok[j][r] * inv_batch;
        if (dr == 0.0) continue;
        for (std::size_t cidx = 0; cidx < cache.flats[j].size(); ++cidx)
          demb(r, cidx) += dr * cache.flats[j][cidx];
      }
  }

  if (!std::isfinite(info.loss))
    throw std::runtime_error("loss_and_grad: non-finite loss (divergence)");
  return info;
}

// ---- DLinear --------------------------------------------------------------------

ParamSet DLinearTrainable::params() const {
  return {{"dlinear.w", m_.w}, {"dlinear.b", col(m_.b)}};
}

void DLinearTrainable::set_params(const ParamSet& p) {
  m_.w = p.at("dlinear.w");
  m_.b = as_vec(p.at("dlinear.b"));
}

LossInfo dlinear_loss_and_grad(const DLinearModel& m, const std::vector<Sample>& batch,
                               GradientSet* grads) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  if (grads) {
    *grads = GradientSet{{"dlinear.w", Matrix(m.w.rows, m.w.cols)},
                         {"dlinear.b", Matrix(m.b.size(), 1)}};
  }
  LossInfo info;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (const Sample& s : batch) {
    const Matrix y_hat = dlinear_forward(m, s.x);
    const std::size_t n_out = y_hat.data.size();
    double mse = 0.0;
    Matrix dy(y_hat.rows, y_hat.cols);
    for (std::size_t i = 0; i < n_out; ++i) {
      const double e = y_hat.data[i] - s.y.data[i];
      mse += e * e;
      dy.data[i] = 2.0 * e / static_cast<double>(n_out);
    }
    mse /= static_cast<double>(n_out);
    info.mse += mse * inv_batch;
    info.loss += mse * inv_batch;
    if (!grads) continue;
    Matrix& dw = grads->at("dlinear.w");
    Matrix& db = grads->at("dlinear.b");
    for (std::size_t c = 0; c < s.x.cols; ++c)
      for (std::size_t i = 0; i < m.w.rows; ++i) {
        const double d = dy(i, c) * inv_batch;
        db.data[i] += d;
        for (std::size_t t = 0; t < m.w.cols; ++t) dw(i, t) += d * s.x(t, c);
      }
  }
  if (!std::isfinite(info.loss))
    throw std::runtime_error("loss_and_grad: non-finite loss (divergence)");
  return info;
}

// ---- SSM -------------------------------------------------------------------------

ParamSet SsmTrainable::params() const {
  return {{"ssm.A", m_.a}, {"ssm.B", m_.b}, {"ssm.C", m_.c_read}};
}

void SsmTrainable::set_params(const ParamSet& p) {
  m_.a = p.at("ssm.A");
  m_.b = p.at("ssm.B");
  m_.c_read = p.at("ssm.C");
  // diagonal transition: off-diagonal entries are structurally zero, not free
  // parameters, so incoming values there are discarded
  if (m_.diagonal)
    for (std::size_t i = 0; i < m_.a.rows; ++i)
      for (std::size_t j = 0; j < m_.a.cols; ++j)
        if (i != j) m_.a(i, j) = 0.0;
}

LossInfo SsmTrainable::loss_and_grad(const std::vector<Sample>& batch,
                                     GradientSet* g) const {
  LossInfo info = ssm_loss_and_grad(m_, batch, g);
  // diagonal transition: keep off-diagonal entries pinned at zero
  if (g && m_.diagonal) {
    Matrix& da = g->at("ssm.A");
    for (std::size_t i = 0; i < da.rows; ++i)
      for (std::size_t j = 0; j < da.cols; ++j)
        if (i != j) da(i, j) = 0.0;
  }
  return info;
}

LossInfo ssm_loss_and_grad(const SSMModel& m, const std::vector<Sample>& batch,
                           GradientSet* grads) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  const std::size_t d_h = m.a.rows;
  if (grads) {
    *grads = GradientSet{{"ssm.A", Matrix(d_h, d_h)},
                         {"ssm.B", Matrix(m.b.rows, m.b.cols)},
                         {"ssm.C", Matrix(m.c_read.rows, m.c_read.cols)}};
  }
  LossInfo info;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (const Sample& s : batch) {
    const std::size_t p = s.x.rows;
    std::vector<Vector> h(p + 1, Vector(d_h, 0.0));
    for (std::size_t t = 0; t < p; ++t) {
      Vector next = matvec(m.a, h[t]);
      for (std::size_t i = 0; i < d_h; ++i) {
        double acc = next[i];
        for (std::size_t c = 0; c < s.x.cols; ++c) acc += m.b(i, c) * s.x(t, c);
        next[i] = acc;
      }
      h[t + 1] = std::move(next);
    }
    Vector y_hat = matvec(m.c_read, h[p]);
    const std::size_t n_out = y_hat.size();
    double mse = 0.0;
    Vector dy(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
      const double e = y_hat[i] - s.y.data[i];
      mse += e * e;
      dy[i] = 2.0 * e / static_cast<double>(n_out);
    }
    mse /= static_cast<double>(n_out);
    info.mse += mse * inv_batch;
    info.loss += mse * inv_batch;
    if (!grads) continue;

    accumulate(grads->at("ssm.C"), outer(dy, h[p]), inv_batch);
    Vector dh = matvec_t(m.c_read, dy);
    Matrix& da = grads->at("ssm.A");
    Matrix& db = grads->at("ssm.B");
    for (std::size_t t = p; t-- > 0;) {
      accumulate(da, outer(dh, h[t]), inv_batch);
      for (std::size_t i = 0; i < d_h; ++i)
        for (std::size_t c = 0; c < s.x.cols; ++c)
          db(i, c) += inv_batch * dh[i] * s.x(t, c);
      dh = matvec_t(m.a, dh);
    }
  }
  if (!std::isfinite(info.loss))
    throw std::runtime_error("loss_and_grad: non-finite loss (divergence)");
  return info;
}

// ---- finite differences ------------------------------------------------------------

double finite_diff_check(TrainableModel& model, const std::vector<Sample>& batch,
                         double eps) {
  if (eps < 1e-7 || eps > 1e-3)
    throw std::invalid_argument("finite_diff_check: eps out of [1e-7, 1e-3]");

  GradientSet analytic;
  model.loss_and_grad(batch, &analytic);
  ParamSet base = model.params();

  double max_rel = 0.0;
  for (auto& [key, tensor] : base) {
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
      const double saved = tensor.data[i];

      tensor.data[i] = saved + eps;
      model.set_params(base);
      const double lp = model.loss_and_grad(batch, nullptr).loss;

      tensor.data[i] = saved - eps;
      model.set_params(base);
      const double lm = model.loss_and_grad(batch, nullptr).loss;

      tensor.data[i] = saved;

      const double numeric = (lp - lm) / (2.0 * eps);
      const double exact = analytic.at(key).data[i];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(numeric - exact) / denom);
    }
  }
  model.set_params(base);
  return max_rel;
}

}  // namespace koopcast

#include "koopcast/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace koopcast {

DLinearModel make_dlinear(std::size_t p, std::size_t h, Rng& rng) {
  DLinearModel m;
  m.w = Matrix::gaussian(h, p, rng, 1.0 / std::sqrt((double)p));
  m.b.assign(h, 0.0);
  return m;
}

SSMModel make_ssm(std::size_t d_h, std::size_t d, std::size_t h, bool diagonal, Rng& rng) {
  SSMModel m;
  m.diagonal = diagonal;
  if (diagonal) {
    m.a = Matrix(d_h, d_h);
    for (std::size_t i = 0; i < d_h; ++i) m.a(i, i) = rng.gaussian() * 0.9;
  } else {
    m.a = Matrix::gaussian(d_h, d_h, rng, 0.9 / std::sqrt((double)d_h));
  }
  m.b = Matrix::gaussian(d_h, d, rng, 1.0 / std::sqrt((double)d));
  m.c_read = Matrix::gaussian(h * d, d_h, rng, 1.0 / std::sqrt((double)d_h));
  return m;
}

Matrix dlinear_forward(const DLinearModel& m, const Matrix& x) {
  if (m.w.cols != x.rows) throw std::invalid_argument("dlinear_forward: shape mismatch");
  Matrix out(m.w.rows, x.cols);
  for (std::size_t c = 0; c < x.cols; ++c) {
    for (std::size_t i = 0; i < m.w.rows; ++i) {
      double acc = m.b[i];
      for (std::size_t t = 0; t < x.rows; ++t) acc += m.w(i, t) * x(t, c);
      out(i, c) = acc;
    }
  }
  return out;
}

Matrix ssm_forward(const SSMModel& m, const Matrix& x, std::size_t horizon) {
  if (m.b.cols != x.cols) throw std::invalid_argument("ssm_forward: input width mismatch");
  const std::size_t d_h = m.a.rows;
  Vector h(d_h, 0.0);
  for (std::size_t t = 0; t < x.rows; ++t) {
    Vector next = matvec(m.a, h);
    for (std::size_t i = 0; i < d_h; ++i) {
      double acc = next[i];
      for (std::size_t c = 0; c < x.cols; ++c) acc += m.b(i, c) * x(t, c);
      next[i] = acc;
    }
    h = std::move(next);
    for (double v : h)
      if (!std::isfinite(v))
        throw std::runtime_error("ssm_forward: state diverged at step " + std::to_string(t));
  }
  Vector y = matvec(m.c_read, h);
  Matrix out(horizon, x.cols);
  if (y.size() != out.data.size())
    throw std::invalid_argument("ssm_forward: readout size mismatch");
  out.data.assign(y.begin(), y.end());
  return out;
}

SSMModel augment_unstable_ssm(const SSMModel& m, double gamma, std::size_t extra_dim) {
  if (gamma < 1.0)
    throw std::invalid_argument("augment_unstable_ssm: gamma must be >= 1");
  const std::size_t n = m.a.rows;
  SSMModel out;
  out.diagonal = false;
  out.a = Matrix(n + extra_dim, n + extra_dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.a(i, j) = m.a(i, j);
  for (std::size_t i = 0; i < extra_dim; ++i) out.a(n + i, n + i) = gamma;

  out.b = Matrix(n + extra_dim, m.b.cols);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m.b.cols; ++j) out.b(i, j) = m.b(i, j);

  out.c_read = Matrix(m.c_read.rows, n + extra_dim);
  for (std::size_t i = 0; i < m.c_read.rows; ++i)
    for (std::size_t j = 0; j < n; ++j) out.c_read(i, j) = m.c_read(i, j);
  return out;
}

Matrix persistence_forecast(const Matrix& x, std::size_t horizon) {
  if (x.rows == 0) throw std::invalid_argument("persistence_forecast: empty window");
  Matrix out(horizon, x.cols);
  for (std::size_t i = 0; i < horizon; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = x(x.rows - 1, j);
  return out;
}

}  // namespace koopcast

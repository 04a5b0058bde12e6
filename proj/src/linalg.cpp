#include "koopcast/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace koopcast {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::gaussian(std::size_t r, std::size_t c, Rng& rng, double scale) {
  Matrix m(r, c);
  for (auto& x : m.data) x = rng.gaussian() * scale;
  return m;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("add: shape mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("sub: shape mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (auto& x : c.data) x *= s;
  return c;
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (double x : a.data) acc += x * x;
  return std::sqrt(acc);
}

double norm2(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double dot(const Vector& a, const Vector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

bool all_finite(const Matrix& a) {
  for (double x : a.data)
    if (!std::isfinite(x)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows));
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols != x.size()) throw std::invalid_argument("matvec: shape mismatch");
  Vector y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
  if (a.rows != x.size()) throw std::invalid_argument("matvec_t: shape mismatch");
  Vector y(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double xi = x[i];
    for (std::size_t j = 0; j < a.cols; ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

Matrix outer(const Vector& x, const Vector& y) {
  Matrix m(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) m(i, j) = x[i] * y[j];
  return m;
}

Matrix qr_orthonormalize(const Matrix& a) {
  const std::size_t d = a.rows, r = a.cols;
  if (r > d) throw std::invalid_argument("qr_orthonormalize: more columns than rows");

  Matrix work = a;
  std::vector<Vector> reflectors;
  reflectors.reserve(r);
  Vector rdiag(r, 0.0);

  for (std::size_t k = 0; k < r; ++k) {
    double normx = 0.0;
    for (std::size_t i = k; i < d; ++i) normx += work(i, k) * work(i, k);
    normx = std::sqrt(normx);
    if (normx < 1e-12)
      throw std::runtime_error("qr_orthonormalize: rank deficiency at column " +
                               std::to_string(k));
    const double x0 = work(k, k);
    const double alpha = (x0 >= 0.0) ? -normx : normx;

    Vector v(d - k, 0.0);
    for (std::size_t i = k; i < d; ++i) v[i - k] = work(i, k);
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;

    if (vnorm2 > 0.0) {
      for (std::size_t j = k; j < r; ++j) {
        double proj = 0.0;
        for (std::size_t i = k; i < d; ++i) proj += v[i - k] * work(i, j);
        const double f = 2.0 * proj / vnorm2;
        for (std::size_t i = k; i < d; ++i) work(i, j) -= f * v[i - k];
      }
    }
    rdiag[k] = alpha;
    reflectors.push_back(std::move(v));
  }

  // Q = H_0 ... H_{r-1} applied to the first r columns of I
  Matrix q(d, r);
  for (std::size_t j = 0; j < r; ++j) q(j, j) = 1.0;
  for (std::size_t k = r; k-- > 0;) {
    const Vector& v = reflectors[k];
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = 0; j < r; ++j) {
      double proj = 0.0;
      for (std::size_t i = k; i < d; ++i) proj += v[i - k] * q(i, j);
      const double f = 2.0 * proj / vnorm2;
      for (std::size_t i = k; i < d; ++i) q(i, j) -= f * v[i - k];
    }
  }

  // sign convention: nonnegative diagonal of R
  for (std::size_t k = 0; k < r; ++k)
    if (rdiag[k] < 0.0)
      for (std::size_t i = 0; i < d; ++i) q(i, k) = -q(i, k);
  return q;
}

namespace {

// One-sided Jacobi on the columns of a copy of A (m >= n assumed).
SvdResult svd_tall(const Matrix& a) {
  const std::size_t m = a.rows, n = a.cols;
  Matrix w = a;
  Matrix v = Matrix::identity(n);

  constexpr int kMaxSweeps = 100;
  constexpr double kTol = 1e-12;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          app += w(i, p) * w(i, p);
          aqq += w(i, q) * w(i, q);
          apq += w(i, p) * w(i, q);
        }
        if (std::abs(apq) <= kTol * std::sqrt(app * aqq)) continue;
        converged = false;

        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;

        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (converged) break;
    if (sweep == kMaxSweeps - 1)
      throw std::runtime_error("svd: Jacobi sweeps did not converge");
  }

  Vector s(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += w(i, j) * w(i, j);
    s[j] = std::sqrt(acc);
  }

  // sort descending
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return s[i] > s[j]; });

  SvdResult out;
  out.s.resize(n);
  out.u = Matrix(m, n);
  out.v = Matrix(n, n);
  const double smax = s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.s[j] = s[src];
    const double inv = (s[src] > 1e-300 && s[src] > 1e-15 * smax) ? 1.0 / s[src] : 0.0;
    for (std::size_t i = 0; i < m; ++i) out.u(i, j) = w(i, src) * inv;
    for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
  }
  return out;
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.rows >= a.cols) return svd_tall(a);
  SvdResult t = svd_tall(transpose(a));
  return SvdResult{t.v, t.s, t.u};  // A = (A^T)^T = V S U^T swapped
}

Vector singular_values(const Matrix& a) { return svd(a).s; }

double spectral_radius_estimate(const Matrix& a, int k) {
  if (a.rows != a.cols) throw std::invalid_argument("spectral_radius_estimate: not square");
  if (k < 1) throw std::invalid_argument("spectral_radius_estimate: k must be >= 1");

  // exponentiation by squaring, each factor renormalized by its Frobenius
  // norm with the log of the scale tracked separately
  auto normalize = [](Matrix& m, double& log_scale) -> bool {
    const double f = frobenius_norm(m);
    if (f == 0.0) return false;  // exactly nilpotent power
    m = scale(m, 1.0 / f);
    log_scale += std::log(f);
    return true;
  };

  Matrix result = Matrix::identity(a.rows);
  Matrix base = a;
  double log_r = 0.0, log_b = 0.0;
  if (!normalize(base, log_b)) return 0.0;

  int e = k;
  while (e > 0) {
    if (e & 1) {
      result = matmul(result, base);
      log_r += log_b;
      if (!normalize(result, log_r)) return 0.0;
    }
    e >>= 1;
    if (e > 0) {
      base = matmul(base, base);
      log_b *= 2.0;
      if (!normalize(base, log_b)) return 0.0;
    }
  }

  Vector sv = singular_values(result);
  const double top = sv.empty() ? 0.0 : sv[0];
  if (top == 0.0) return 0.0;
  return std::exp((log_r + std::log(top)) / static_cast<double>(k));
}

double sym_max_eig(const Matrix& m) {
  if (m.rows != m.cols) throw std::invalid_argument("sym_max_eig: not square");
  const Matrix asym = sub(m, transpose(m));
  if (frobenius_norm(asym) >= 1e-10)
    throw std::invalid_argument("sym_max_eig: matrix asymmetric beyond tolerance");

  const std::size_t n = m.rows;
  const double c = frobenius_norm(m);
  Matrix b = m;
  for (std::size_t i = 0; i < n; ++i) b(i, i) += c;

  // deterministic start vector with all components nonzero
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = 1.0 + 0.1 * std::sin(static_cast<double>(i) + 1.0);
  double nv = norm2(v);
  for (auto& x : v) x /= nv;

  double lambda = 0.0;
  for (int it = 0; it < 200000; ++it) {
    Vector w = matvec(b, v);
    const double rayleigh = dot(v, w);
    const double nw = norm2(w);
    if (nw < 1e-300) return -c;  // b v = 0: shifted eigenvalue 0
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (it > 0 && std::abs(rayleigh - lambda) <= 1e-12 * std::max(1.0, std::abs(rayleigh))) {
      lambda = rayleigh;
      break;
    }
    lambda = rayleigh;
  }
  return lambda - c;
}

}  // namespace koopcast

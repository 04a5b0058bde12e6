#pragma once

#include <cstddef>
#include <vector>

#include "koopcast/rng.hpp"

namespace koopcast {

// Dense row-major real matrix. All arithmetic in the project is double.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix identity(std::size_t n);
  static Matrix gaussian(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0);
};

using Vector = std::vector<double>;

// ---- element-wise / norms -------------------------------------------------

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
double frobenius_norm(const Matrix& a);
double norm2(const Vector& v);
double dot(const Vector& a, const Vector& b);
bool all_finite(const Matrix& a);

// ---- products ---------------------------------------------------------------

// Standard product, deterministic accumulation order (i, k, j loops).
// Throws std::invalid_argument on inner-dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Vector matvec(const Matrix& a, const Vector& x);
// a^T x without forming the transpose
Vector matvec_t(const Matrix& a, const Vector& x);
// outer product x y^T
Matrix outer(const Vector& x, const Vector& y);

// ---- factorizations ---------------------------------------------------------

// Householder QR of a d x r matrix (r <= d); returns the thin Q factor with
// orthonormal columns. Deterministic sign convention: the diagonal of the
// triangular factor is nonnegative. Throws std::runtime_error when a pivot
// column norm drops below 1e-12 (rank deficiency).
Matrix qr_orthonormalize(const Matrix& a);

struct SvdResult {
  Matrix u;   // m x n, orthonormal columns where s_i > 0
  Vector s;   // descending, nonnegative
  Matrix v;   // n x n
};

// One-sided Jacobi SVD (Hestenes). Iteration cap 100 sweeps, relative
// off-diagonal tolerance 1e-12; throws std::runtime_error on non-convergence.
SvdResult svd(const Matrix& a);

// Singular values only, descending.
Vector singular_values(const Matrix& a);

// Gelfand estimate ||A^k||_2^{1/k}. Upper-biased, converges to the spectral
// radius as k grows; powering uses scale-and-track-exponent to avoid overflow.
double spectral_radius_estimate(const Matrix& a, int k = 64);

// Largest eigenvalue of a symmetric matrix via power iteration on M + cI
// with c = ||M||_F. Throws std::invalid_argument when ||M - M^T||_F >= 1e-10.
double sym_max_eig(const Matrix& m);

}  // namespace koopcast

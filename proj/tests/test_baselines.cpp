#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "koopcast/baselines.hpp"
#include "koopcast/linalg.hpp"

using namespace koopcast;

TEST_CASE("dlinear with uniform weights forecasts the per-channel window mean") {
  DLinearModel m;
  m.w = Matrix(2, 4, 1.0 / 4.0);
  m.b = {0.0, 0.0};

  Matrix x(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    x(i, 0) = (double)i;        // mean 1.5
    x(i, 1) = 2.0 * (double)i;  // mean 3.0
  }
  const Matrix y = dlinear_forward(m, x);
  for (std::size_t h = 0; h < 2; ++h) {
    CHECK(y(h, 0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(y(h, 1) == doctest::Approx(3.0).epsilon(1e-14));
  }
}

TEST_CASE("dlinear with a last-value selector reproduces persistence") {
  DLinearModel m;
  m.w = Matrix(3, 5);
  for (std::size_t h = 0; h < 3; ++h) m.w(h, 4) = 1.0;
  m.b = {0.0, 0.0, 0.0};

  Rng rng(8);
  const Matrix x = Matrix::gaussian(5, 2, rng);
  const Matrix y = dlinear_forward(m, x);
  const Matrix p = persistence_forecast(x, 3);
  for (std::size_t i = 0; i < y.data.size(); ++i) CHECK(y.data[i] == p.data[i]);
}

TEST_CASE("dlinear is equivariant to channel permutation") {
  Rng rng(9);
  DLinearModel m = make_dlinear(4, 2, rng);
  const Matrix x = Matrix::gaussian(4, 3, rng);
  Matrix x_perm(4, 3);
  const std::size_t perm[3] = {2, 0, 1};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c) x_perm(i, c) = x(i, perm[c]);

  const Matrix y = dlinear_forward(m, x);
  const Matrix yp = dlinear_forward(m, x_perm);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t c = 0; c < 3; ++c) CHECK(yp(h, c) == y(h, perm[c]));
}

TEST_CASE("ssm with A=0 and B=I reads out only the final input row") {
  SSMModel m;
  m.a = Matrix(2, 2);
  m.b = Matrix::identity(2);
  m.c_read = Matrix::identity(2);  // H=1, d=2
  Rng rng(10);
  const Matrix x = Matrix::gaussian(5, 2, rng);
  const Matrix y = ssm_forward(m, x, 1);
  CHECK(y(0, 0) == x(4, 0));
  CHECK(y(0, 1) == x(4, 1));
}

TEST_CASE("ssm with A=I and B=I accumulates the window") {
  SSMModel m;
  m.a = Matrix::identity(2);
  m.b = Matrix::identity(2);
  m.c_read = Matrix::identity(2);
  Matrix x(4, 2, 1.0);
  const Matrix y = ssm_forward(m, x, 1);
  CHECK(y(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(y(0, 1) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("ssm forward equals a step-by-step oracle recomputation") {
  Rng rng(31);
  const SSMModel m = make_ssm(6, 3, 2, false, rng);
  const Matrix x = Matrix::gaussian(7, 3, rng);

  Vector h(6, 0.0);
  for (std::size_t t = 0; t < 7; ++t) {
    Vector nh(6, 0.0);
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) nh[i] += m.a(i, j) * h[j];
      for (std::size_t c = 0; c < 3; ++c) nh[i] += m.b(i, c) * x(t, c);
    }
    h = nh;
  }
  const Vector read = matvec(m.c_read, h);

  const Matrix y = ssm_forward(m, x, 2);
  for (std::size_t i = 0; i < y.data.size(); ++i)
    CHECK(y.data[i] == doctest::Approx(read[i]).epsilon(1e-12));
}

TEST_CASE("ssm reports a non-finite state instead of masking it") {
  SSMModel m;
  m.a = scale(Matrix::identity(2), 1e200);
  m.b = Matrix::identity(2);
  m.c_read = Matrix::identity(2);
  Matrix x(8, 2, 1.0);
  CHECK_THROWS_AS(ssm_forward(m, x, 1), std::runtime_error);
}

TEST_CASE("stable ssm state obeys the geometric-series bound") {
  Rng rng(12);
  for (int t = 0; t < 10; ++t) {
    SSMModel m = make_ssm(5, 2, 1, false, rng);
    m.a = scale(m.a, 0.8 / singular_values(m.a)[0]);  // force a stable draw
    const double a_norm = singular_values(m.a)[0];
    const double b_norm = singular_values(m.b)[0];
    m.c_read = Matrix(2, 5);
    for (std::size_t i = 0; i < 2; ++i) m.c_read(i, i) = 1.0;

    Matrix x(20, 2);
    double max_x = 0.0;
    for (auto& v : x.data) {
      v = rng.gaussian();
      max_x = std::max(max_x, std::abs(v) * std::sqrt(2.0));
    }
    // readout picks two state coordinates, so |y| <= ||h_P||
    const Matrix y = ssm_forward(m, x, 1);
    const double bound = b_norm * max_x / (1.0 - a_norm);
    for (double v : y.data) CHECK(std::abs(v) <= bound + 1e-9);
  }
}

TEST_CASE("unstable augmentation leaves outputs exactly unchanged") {
  Rng rng(14);
  const SSMModel base = make_ssm(4, 2, 3, false, rng);
  const SSMModel aug = augment_unstable_ssm(base, 2.0, 3);

  for (int w = 0; w < 50; ++w) {
    const Matrix x = Matrix::gaussian(6, 2, rng);
    const Matrix y0 = ssm_forward(base, x, 3);
    const Matrix y1 = ssm_forward(aug, x, 3);
    for (std::size_t i = 0; i < y0.data.size(); ++i) CHECK(y0.data[i] == y1.data[i]);
  }

  CHECK(spectral_radius_estimate(aug.a) >= 1.9);
  CHECK_THROWS_AS(augment_unstable_ssm(base, 0.5, 2), std::invalid_argument);

  // gamma = 1: the augmented block contributes radius 1
  const SSMModel unit = augment_unstable_ssm(base, 1.0, 2);
  const double rho_base = spectral_radius_estimate(base.a);
  const double rho_unit = spectral_radius_estimate(unit.a);
  CHECK(rho_unit >= std::max(rho_base, 1.0) - 5e-2);
}

TEST_CASE("persistence forecast repeats the last observed row") {
  Matrix constant(4, 2, 3.5);
  const Matrix y = persistence_forecast(constant, 3);
  for (double v : y.data) CHECK(v == 3.5);

  Matrix x(2, 2);
  x(1, 0) = 1.0;
  x(1, 1) = 2.0;
  const Matrix y2 = persistence_forecast(x, 3);
  REQUIRE(y2.rows == 3);
  for (std::size_t h = 0; h < 3; ++h) {
    CHECK(y2(h, 0) == 1.0);
    CHECK(y2(h, 1) == 2.0);
  }
}

TEST_CASE("persistence MSE on a linear ramp matches the closed form") {
  const double slope = 0.25;
  const std::size_t p = 6, h = 4;
  Matrix x(p, 1);
  Matrix target(h, 1);
  for (std::size_t i = 0; i < p; ++i) x(i, 0) = slope * (double)i;
  for (std::size_t i = 0; i < h; ++i) target(i, 0) = slope * (double)(p + i);

  const Matrix y = persistence_forecast(x, h);
  double mse = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    const double e = y(i, 0) - target(i, 0);
    mse += e * e;
  }
  mse /= (double)h;

  double expected = 0.0;  // slope^2 * mean of (1..H)^2
  for (std::size_t k = 1; k <= h; ++k) expected += (double)(k * k);
  expected *= slope * slope / (double)h;
  CHECK(mse == doctest::Approx(expected).epsilon(1e-14));
}

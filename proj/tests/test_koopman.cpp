#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "koopcast/koopman.hpp"

using namespace koopcast;

namespace {

double sigmoid_oracle(double x) { return 1.0 / (1.0 + std::exp(-x)); }

KoopmanOperator random_operator(KoopmanVariant v, std::size_t d, Rng& rng,
                                double spread = 3.0) {
  KoopmanInit init;
  init.variant = v;
  init.d = d;
  init.rank = d / 2;
  KoopmanOperator op = make_koopman(init, rng);
  // push parameters well outside the init distribution
  for (auto& x : op.spec.s) x = rng.gaussian() * spread;
  for (auto& x : op.spec.alpha) x = rng.gaussian() * spread;
  for (auto& x : op.spec.beta) x = rng.gaussian() * spread;
  if (v == KoopmanVariant::MlpShaped) {
    for (auto& x : op.spec.mlp_b1) x = rng.gaussian();
    op.spec.mlp_b2 = rng.gaussian();
  }
  return op;
}

const KoopmanVariant kOdoVariants[] = {
    KoopmanVariant::ConstrainedODO, KoopmanVariant::ScalarGated,
    KoopmanVariant::PerModeGated, KoopmanVariant::MlpShaped, KoopmanVariant::LowRank};

}  // namespace

TEST_CASE("variant names round-trip and unknown names are rejected") {
  for (KoopmanVariant v : {KoopmanVariant::ConstrainedODO, KoopmanVariant::ScalarGated,
                           KoopmanVariant::PerModeGated, KoopmanVariant::MlpShaped,
                           KoopmanVariant::LowRank, KoopmanVariant::UnconstrainedDense})
    CHECK(variant_from_name(variant_name(v)) == v);
  CHECK_THROWS_AS(variant_from_name("frobnicate"), std::invalid_argument);
}

TEST_CASE("constrained spectrum squashes raw zeros to half of rho_max") {
  SpectralParams spec;
  spec.s = {0.0, 0.0};
  const Vector sigma = build_spectrum(spec, KoopmanVariant::ConstrainedODO);
  CHECK(sigma[0] == doctest::Approx(0.495).epsilon(1e-14));
  CHECK(sigma[1] == doctest::Approx(0.495).epsilon(1e-14));
}

TEST_CASE("scalar gate applies one affine map to every mode") {
  SpectralParams spec;
  spec.s = {0.5, -1.0};
  spec.alpha = {2.0};
  spec.beta = {1.0};
  const Vector sigma = build_spectrum(spec, KoopmanVariant::ScalarGated);
  CHECK(sigma[0] == doctest::Approx(0.99 * sigmoid_oracle(2.0 * 0.5 + 1.0)).epsilon(1e-14));
  CHECK(sigma[1] == doctest::Approx(0.99 * sigmoid_oracle(2.0 * -1.0 + 1.0)).epsilon(1e-14));
}

TEST_CASE("per-mode gate applies independent affine maps") {
  SpectralParams spec;
  spec.s = {0.0, 0.0};
  spec.alpha = {1.0, 1.0};
  spec.beta = {0.0, 2.0};
  const Vector sigma = build_spectrum(spec, KoopmanVariant::PerModeGated);
  CHECK(sigma[0] == doctest::Approx(0.495).epsilon(1e-14));
  CHECK(sigma[1] == doctest::Approx(0.99 * sigmoid_oracle(2.0)).epsilon(1e-14));
}

TEST_CASE("mlp gate matches a hand-computed single-hidden-unit network") {
  SpectralParams spec;
  spec.s = {0.7};
  spec.mlp_w1 = Matrix(1, 1);
  spec.mlp_w1(0, 0) = 2.0;
  spec.mlp_b1 = {0.1};
  spec.mlp_w2 = Matrix(1, 1);
  spec.mlp_w2(0, 0) = -1.5;
  spec.mlp_b2 = 0.3;
  const double g = 0.3 + -1.5 * std::tanh(2.0 * 0.7 + 0.1);
  const Vector sigma = build_spectrum(spec, KoopmanVariant::MlpShaped);
  CHECK(sigma[0] == doctest::Approx(0.99 * sigmoid_oracle(g)).epsilon(1e-14));
}

TEST_CASE("rho_min shifts the squashing range") {
  SpectralParams spec;
  spec.s = {0.0};
  spec.rho_min = 0.01;
  const Vector sigma = build_spectrum(spec, KoopmanVariant::ConstrainedODO);
  CHECK(sigma[0] == doctest::Approx(0.01 + 0.98 * 0.5).epsilon(1e-14));
}

TEST_CASE("apply agrees with multiplying by the materialized matrix") {
  Rng rng(101);
  for (KoopmanVariant v : kOdoVariants) {
    const KoopmanOperator op = random_operator(v, 10, rng);
    Vector z(10);
    for (auto& x : z) x = rng.gaussian();
    const Vector fast = apply(op, z);
    const Vector slow = matvec(materialize(op), z);
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
  }
}

TEST_CASE("materialized spectral norm stays below rho_max and equals max Sigma") {
  Rng rng(7);
  for (KoopmanVariant v : kOdoVariants) {
    for (int t = 0; t < 50; ++t) {
      const KoopmanOperator op = random_operator(v, 8, rng, 5.0);
      const Vector sv = singular_values(materialize(op));
      const Vector sp = operator_spectrum(op);
      CHECK(sv[0] < 0.99);
      CHECK(std::abs(sv[0] - sp[0]) < 1e-10);
    }
  }
}

TEST_CASE("iterated application contracts under the rho_max envelope") {
  Rng rng(13);
  for (KoopmanVariant v : kOdoVariants) {
    const KoopmanOperator op = random_operator(v, 8, rng);
    Vector z(8);
    for (auto& x : z) x = rng.gaussian();
    double bound = norm2(z);
    for (int n = 1; n <= 100; ++n) {
      z = apply(op, z);
      bound *= op.spec.rho_max;
      CHECK(norm2(z) <= bound * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("inverse_apply round-trips when rho_min is positive") {
  Rng rng(19);
  KoopmanInit init;
  init.d = 6;
  init.rho_min = 0.01;
  for (int t = 0; t < 100; ++t) {
    const KoopmanOperator op = make_koopman(init, rng);
    Vector z(6);
    for (auto& x : z) x = rng.gaussian();
    const Vector round = apply(op, inverse_apply(op, z));
    double err = 0.0;
    for (std::size_t i = 0; i < 6; ++i) err += (round[i] - z[i]) * (round[i] - z[i]);
    CHECK(std::sqrt(err) < 1e-8 * norm2(z));
  }
}

TEST_CASE("inverse_apply refuses when invertibility is not guaranteed") {
  Rng rng(19);
  Vector z(6, 1.0);

  KoopmanInit init;
  init.d = 6;
  CHECK_THROWS_AS(inverse_apply(make_koopman(init, rng), z), std::runtime_error);

  init.variant = KoopmanVariant::LowRank;
  init.rank = 3;
  init.rho_min = 0.01;
  CHECK_THROWS_AS(inverse_apply(make_koopman(init, rng), z), std::runtime_error);

  init.variant = KoopmanVariant::UnconstrainedDense;
  CHECK_THROWS_AS(inverse_apply(make_koopman(init, rng), z), std::runtime_error);
}

TEST_CASE("low-rank operators have exactly r nonzero singular values") {
  Rng rng(29);
  KoopmanInit init;
  init.variant = KoopmanVariant::LowRank;
  init.d = 12;
  init.rank = 5;
  const KoopmanOperator op = make_koopman(init, rng);
  const Vector sv = singular_values(materialize(op));
  CHECK(sv[4] > 1e-3);
  CHECK(sv[5] < 1e-10);

  const Vector sp = operator_spectrum(op);
  REQUIRE(sp.size() == 12);  // padded to d
  CHECK(sp[5] == 0.0);

  init.rank = 12;
  CHECK_THROWS_AS(make_koopman(init, rng), std::invalid_argument);
}

TEST_CASE("retract restores orthonormality without touching the spectrum") {
  Rng rng(31);
  KoopmanInit init;
  init.d = 8;
  KoopmanOperator op = make_koopman(init, rng);
  // simulate an unconstrained optimizer step
  for (auto& x : op.u.data) x += 0.05 * rng.gaussian();
  for (auto& x : op.v.data) x += 0.05 * rng.gaussian();
  const Vector before = build_spectrum(op.spec, op.variant);

  const KoopmanOperator r = retract(op);
  CHECK(frobenius_norm(sub(matmul(transpose(r.u), r.u), Matrix::identity(8))) < 1e-12);
  CHECK(frobenius_norm(sub(matmul(transpose(r.v), r.v), Matrix::identity(8))) < 1e-12);
  const Vector after = build_spectrum(r.spec, r.variant);
  for (std::size_t i = 0; i < 8; ++i) CHECK(before[i] == after[i]);

  KoopmanInit dense;
  dense.variant = KoopmanVariant::UnconstrainedDense;
  dense.d = 4;
  CHECK_THROWS_AS(retract(make_koopman(dense, rng)), std::runtime_error);
}

TEST_CASE("odo_from_matrix reproduces any matrix with spectral norm below rho_max") {
  Rng rng(37);
  for (int t = 0; t < 50; ++t) {
    Matrix m = Matrix::gaussian(6, 6, rng);
    const double top = singular_values(m)[0];
    m = scale(m, 0.89 / top);

    const KoopmanOperator op = odo_from_matrix(m, 0.99);
    CHECK(frobenius_norm(sub(materialize(op), m)) < 1e-9);
  }

  Matrix big = scale(Matrix::identity(3), 1.5);
  CHECK_THROWS_AS(odo_from_matrix(big, 0.99), std::invalid_argument);
}

TEST_CASE("lowrank_truncation beats random rank-2 operators (Eckart-Young)") {
  Rng rng(43);
  for (int t = 0; t < 20; ++t) {
    Matrix m = Matrix::gaussian(8, 8, rng);
    m = scale(m, 0.89 / singular_values(m)[0]);

    const KoopmanOperator best = lowrank_truncation(m, 2, 0.99);
    const double best_err = frobenius_norm(sub(materialize(best), m));

    KoopmanInit init;
    init.variant = KoopmanVariant::LowRank;
    init.d = 8;
    init.rank = 2;
    for (int c = 0; c < 10; ++c) {
      KoopmanOperator rival = make_koopman(init, rng);
      for (auto& x : rival.spec.s) x = rng.gaussian() * 3.0;
      CHECK(best_err <= frobenius_norm(sub(materialize(rival), m)) + 1e-12);
    }
  }
}

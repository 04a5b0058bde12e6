#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "koopcast/diagnostics.hpp"
#include "koopcast/linalg.hpp"

using namespace koopcast;

namespace {

KoopmanOperator constrained_op(std::size_t d, uint64_t seed) {
  Rng rng(seed);
  KoopmanInit init;
  init.d = d;
  KoopmanOperator op = make_koopman(init, rng);
  for (auto& x : op.spec.s) x = rng.gaussian() * 3.0;
  return op;
}

}  // namespace

TEST_CASE("operator snapshots stay under rho_max and agree with the SVD oracle") {
  const KoopmanOperator op = constrained_op(6, 1);
  const SpectralSnapshot snap = snapshot(op, 42);
  CHECK(snap.step == 42);
  CHECK(snap.variant == "constrained");
  CHECK(snap.max_sv < 0.99);
  CHECK(snap.max_sv == snap.singular_values[0]);
  for (std::size_t i = 1; i < snap.singular_values.size(); ++i)
    CHECK(snap.singular_values[i] <= snap.singular_values[i - 1]);

  const Vector oracle = singular_values(materialize(op));
  for (std::size_t i = 0; i < oracle.size(); ++i)
    CHECK(std::abs(snap.singular_values[i] - oracle[i]) < 1e-10);
  CHECK(snap.radius_estimate == snap.max_sv);  // ODO reports max Sigma
}

TEST_CASE("matrix snapshots report unconstrained transition spectra") {
  const Matrix a = scale(Matrix::identity(3), 1.1);
  const SpectralSnapshot snap = snapshot(a, 0, "ssm");
  CHECK(snap.variant == "ssm");
  CHECK(snap.max_sv == doctest::Approx(1.1).epsilon(1e-10));
  CHECK(snap.radius_estimate == doctest::Approx(1.1).epsilon(5e-2));
}

TEST_CASE("contraction envelope covers 100 iterates of random operators") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const KoopmanOperator op = constrained_op(6, 100 + (uint64_t)t);
    Vector z0(6);
    for (auto& x : z0) x = rng.gaussian();
    const auto env = contraction_envelope(op, z0, 100);
    REQUIRE(env.size() == 101);
    for (const EnvelopePoint& p : env) CHECK(p.norm <= p.bound * (1.0 + 1e-12));
  }
}

TEST_CASE("contraction envelope with n_max = 0 returns the starting point") {
  const KoopmanOperator op = constrained_op(4, 3);
  const Vector z0{1.0, 2.0, 0.0, -1.0};
  const auto env = contraction_envelope(op, z0, 0);
  REQUIRE(env.size() == 1);
  CHECK(env[0].n == 0);
  CHECK(env[0].norm == norm2(z0));
  CHECK(env[0].bound == env[0].norm);
}

TEST_CASE("diagonal operator with equal spectrum follows a pure geometric decay") {
  // U = V = I: K = c I, so ||z_n|| = c^n ||z_0|| exactly
  KoopmanOperator op;
  op.variant = KoopmanVariant::ConstrainedODO;
  op.d = 3;
  op.m = 3;
  op.u = Matrix::identity(3);
  op.v = Matrix::identity(3);
  op.spec.s.assign(3, 0.0);  // spectrum = 0.495 everywhere
  const Vector z0{1.0, -2.0, 0.5};
  const auto env = contraction_envelope(op, z0, 10);
  double c = 0.495 / 0.99;  // norm / bound ratio per step
  double ratio = 1.0;
  for (std::size_t n = 1; n < env.size(); ++n) {
    ratio *= c;
    CHECK(env[n].norm == doctest::Approx(env[n].bound * ratio).epsilon(1e-12));
  }
}

TEST_CASE("lyapunov certificate on scaled identities") {
  const Matrix eye = Matrix::identity(4);
  const CertificateResult ok = lyapunov_certificate_check(scale(eye, 0.9), eye);
  CHECK(ok.holds);
  CHECK(ok.max_eig == doctest::Approx(-0.19).epsilon(1e-9));

  const CertificateResult bad = lyapunov_certificate_check(scale(eye, 1.1), eye);
  CHECK(!bad.holds);
  CHECK(bad.max_eig == doctest::Approx(0.21).epsilon(1e-9));

  Matrix asym = eye;
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(lyapunov_certificate_check(eye, asym), std::invalid_argument);
}

TEST_CASE("constrained operators always carry an identity-metric certificate") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const KoopmanOperator op = constrained_op(5, 200 + seed);
    const CertificateResult r =
        lyapunov_certificate_check(materialize(op), Matrix::identity(5), 0.0);
    CHECK(r.holds);
  }
}

TEST_CASE("a strict certificate bounds the radius estimate near one") {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    Matrix k = Matrix::gaussian(5, 5, rng);
    k = scale(k, 0.9 / singular_values(k)[0]);
    const CertificateResult r = lyapunov_certificate_check(k, Matrix::identity(5));
    REQUIRE(r.holds);
    CHECK(spectral_radius_estimate(k) < 1.0 + 5e-2);
  }
}

TEST_CASE("spectra export pools one record per singular value and round-trips") {
  std::vector<SpectraRecord> records;
  for (int run = 0; run < 2; ++run)
    for (int i = 0; i < 4; ++i)
      records.push_back({"constrained", "patch", 16, 4, 0.1 * (double)(i + run) + 0.05});
  const std::string text = export_spectra(records);
  CHECK(text.rfind("variant,backbone,P,H,singular_value\n", 0) == 0);

  const auto back = parse_spectra(text);
  REQUIRE(back.size() == 8);  // two runs, four values each
  CHECK(export_spectra(back) == text);  // byte-exact round trip
  for (const auto& r : back) {
    CHECK(r.variant == "constrained");
    CHECK(r.input_len == 16);
    CHECK(r.singular_value < 0.99);
  }

  CHECK_THROWS_AS(parse_spectra("wrong,header\n"), std::runtime_error);
}

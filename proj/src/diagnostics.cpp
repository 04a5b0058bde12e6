#include "koopcast/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "koopcast/serialize.hpp"

namespace koopcast {

SpectralSnapshot snapshot(const KoopmanOperator& op, long step) {
  SpectralSnapshot s;
  s.step = step;
  s.variant = variant_name(op.variant);
  s.singular_values = operator_spectrum(op);
  s.max_sv = s.singular_values.empty() ? 0.0 : s.singular_values[0];
  s.radius_estimate = is_odo(op.variant)
                          ? s.max_sv
                          : spectral_radius_estimate(op.k_dense);
  return s;
}

SpectralSnapshot snapshot(const Matrix& transition, long step, const std::string& tag) {
  SpectralSnapshot s;
  s.step = step;
  s.variant = tag;
  s.singular_values = singular_values(transition);
  s.max_sv = s.singular_values.empty() ? 0.0 : s.singular_values[0];
  s.radius_estimate = spectral_radius_estimate(transition);
  return s;
}

std::vector<EnvelopePoint> contraction_envelope(const KoopmanOperator& op,
                                                const Vector& z0, std::size_t n_max) {
  if (!is_odo(op.variant))
    throw std::invalid_argument("contraction_envelope: requires an ODO variant");
  const double rho_max = op.spec.rho_max;
  const double base = norm2(z0);

  std::vector<EnvelopePoint> env;
  env.reserve(n_max + 1);
  env.push_back({0, base, base});

  Vector z = z0;
  double bound = base;
  for (std::size_t n = 1; n <= n_max; ++n) {
    z = koopcast::apply(op, z);
    bound *= rho_max;
    const double nz = norm2(z);
    if (nz > bound * (1.0 + 1e-12))
      throw std::runtime_error("contraction_envelope: bound violated at n = " +
                               std::to_string(n));
    env.push_back({n, nz, bound});
  }
  return env;
}

CertificateResult lyapunov_certificate_check(const Matrix& k, const Matrix& p,
                                             double tol) {
  const Matrix asym = sub(p, transpose(p));
  if (frobenius_norm(asym) >= 1e-10)
    throw std::invalid_argument("lyapunov_certificate_check: P asymmetric");
  const Matrix m = sub(matmul(transpose(k), matmul(p, k)), p);
  CertificateResult r;
  r.max_eig = sym_max_eig(m);
  r.holds = r.max_eig <= tol;
  return r;
}

std::string export_spectra(const std::vector<SpectraRecord>& records) {
  std::ostringstream os;
  os << "variant,backbone,P,H,singular_value\n";
  for (const auto& r : records)
    os << r.variant << "," << r.backbone << "," << r.input_len << "," << r.horizon
       << "," << format_double(r.singular_value) << "\n";
  return os.str();
}

std::vector<SpectraRecord> parse_spectra(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "variant,backbone,P,H,singular_value")
    throw std::runtime_error("parse_spectra: bad header");
  std::vector<SpectraRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    SpectraRecord r;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    if (!(ls >> r.variant >> r.backbone >> r.input_len >> r.horizon >> r.singular_value))
      throw std::runtime_error("parse_spectra: malformed record: " + line);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace koopcast

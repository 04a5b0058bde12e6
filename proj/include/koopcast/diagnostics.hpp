#pragma once

#include <string>
#include <vector>

#include "koopcast/koopman.hpp"

namespace koopcast {

struct SpectralSnapshot {
  long step = 0;
  std::string variant;
  Vector singular_values;  // descending
  double radius_estimate = 0.0;
  double max_sv = 0.0;
};

// Koopman operators report sorted Sigma (radius = max Sigma for ODO,
// Gelfand estimate for the dense variant).
SpectralSnapshot snapshot(const KoopmanOperator& op, long step);
// SSM/dense transition matrices report singular values + Gelfand estimate.
SpectralSnapshot snapshot(const Matrix& transition, long step, const std::string& tag);

struct EnvelopePoint {
  std::size_t n = 0;
  double norm = 0.0;   // ||K^n z0||
  double bound = 0.0;  // rho_max^n ||z0||
};

// Iterated application against the rho_max^n envelope. Throws
// std::runtime_error on a bound violation (broken invariant).
std::vector<EnvelopePoint> contraction_envelope(const KoopmanOperator& op,
                                                const Vector& z0, std::size_t n_max);

struct CertificateResult {
  bool holds = false;
  double max_eig = 0.0;  // largest eigenvalue of K^T P K - P
};

// Discrete Lyapunov inequality check: holds iff max eig of K^T P K - P <= tol.
CertificateResult lyapunov_certificate_check(const Matrix& k, const Matrix& p,
                                             double tol = 1e-10);

// One pooled record per singular value of a run's final snapshot.
struct SpectraRecord {
  std::string variant;
  std::string backbone;
  std::size_t input_len = 0;
  std::size_t horizon = 0;
  double singular_value = 0.0;
};

// CSV with header "variant,backbone,P,H,singular_value"; %.17g values so the
// records round-trip byte-exactly.
std::string export_spectra(const std::vector<SpectraRecord>& records);
std::vector<SpectraRecord> parse_spectra(const std::string& text);

}  // namespace koopcast

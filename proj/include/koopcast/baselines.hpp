#pragma once

#include "koopcast/linalg.hpp"

namespace koopcast {

// One shared linear map from the length-P history of each channel to the
// H-step forecast, applied channel-independently.
struct DLinearModel {
  Matrix w;  // H x P
  Vector b;  // H
};

// Discrete-time linear state-space model h_{t+1} = A h_t + B x_t with a
// linear readout of the final hidden state. A is unconstrained by default;
// the diagonal switch restricts it to a diagonal transition.
struct SSMModel {
  Matrix a;       // d_h x d_h
  Matrix b;       // d_h x d
  Matrix c_read;  // (H*d) x d_h
  bool diagonal = false;
};

DLinearModel make_dlinear(std::size_t p, std::size_t h, Rng& rng);
SSMModel make_ssm(std::size_t d_h, std::size_t d, std::size_t h, bool diagonal, Rng& rng);

Matrix dlinear_forward(const DLinearModel& m, const Matrix& x);

// Iterates the recursion over the window rows from h_0 = 0 and decodes the
// final state. Throws std::runtime_error if the state goes non-finite.
Matrix ssm_forward(const SSMModel& m, const Matrix& x, std::size_t horizon);

// Block-diagonal augmentation A' = diag(A, gamma I); the new block is never
// excited (zero input rows, zero readout), so outputs on any finite window
// are bit-identical while the transition's spectral radius is ~gamma.
SSMModel augment_unstable_ssm(const SSMModel& m, double gamma, std::size_t extra_dim);

// Every forecast row equals the last input row.
Matrix persistence_forecast(const Matrix& x, std::size_t horizon);

}  // namespace koopcast

#pragma once

#include <cmath>

namespace sqz {

// Variance normalization used throughout: shot-noise units (SNU), vacuum
// quadrature variance = 1. All dB figures are 10*log10(V / 1 SNU).
//
// Squeeze sign convention: SqueezeParams::phi marks the DEAMPLIFIED axis.
// quadrature_variance(apply_squeeze(vacuum(), {r, phi}), phi) == exp(-2r).

// 2x2 symmetric matrix, symmetric by construction (shared off-diagonal).
struct SymMat2 {
  double xx = 1.0;
  double xp = 0.0;
  double pp = 1.0;

  double det() const { return xx * pp - xp * xp; }
  double trace() const { return xx + pp; }
};

struct GaussianState {
  double mean_x = 0.0;
  double mean_p = 0.0;
  SymMat2 cov{};
};

struct SqueezeParams {
  double r = 0.0;    // squeezing parameter, dimensionless, >= 0
  double phi = 0.0;  // deamplified-axis angle, wrapped into [0, 2*pi)
};

// Tolerance for the symplectic (det preserved) and Heisenberg
// (det >= 1) checks; double-precision roundoff headroom for 2x2 products.
inline constexpr double kCovTolerance = 1e-9;

// Wraps an angle into [0, 2*pi).
double wrap_angle(double phi);

// Normalizes and validates squeeze parameters. Rejects non-finite or
// negative r.
SqueezeParams make_squeeze_params(double r, double phi);

// Throws std::invalid_argument if the state violates the invariants
// (finite entries, positive-definite covariance, det >= 1 - tolerance).
void validate(const GaussianState& state);

GaussianState vacuum();

// Symplectic squeeze S = R(phi) diag(e^-r, e^+r) R(phi)^T applied as
// mean <- S mean, cov <- S cov S^T. det(cov) is preserved.
GaussianState apply_squeeze(const GaussianState& state, const SqueezeParams& params);

// Loss channel of transmittance eta: beamsplitter mix with vacuum,
// cov <- eta cov + (1 - eta) I, mean <- sqrt(eta) mean.
GaussianState apply_loss(const GaussianState& state, double eta);

// Variance of the quadrature x cos(theta) + p sin(theta): u^T cov u.
double quadrature_variance(const GaussianState& state, double theta);

// Mean of the same quadrature: u . (mean_x, mean_p).
double quadrature_mean(const GaussianState& state, double theta);

// State with principal quadrature variances (v_along_phi, v_orthogonal) on
// axes at angle phi, zero mean: cov = R(phi) diag(v1, v2) R(phi)^T.
// Admits mixed squeezed states (v1 * v2 > 1), e.g. a squeezing channel whose
// antisqueezing exceeds the inverse of its squeezing.
GaussianState from_quadrature_variances(double v_along_phi, double v_orthogonal,
                                        double phi);

}  // namespace sqz

#include "sqz/gaussian_state.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace sqz {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// cov' = M cov M^T for symmetric M (rotations and squeezes below are
// symmetric or handled through their explicit components).
SymMat2 congruence(const SymMat2& cov, double m00, double m01, double m10,
                   double m11) {
  // A = M * cov
  const double a00 = m00 * cov.xx + m01 * cov.xp;
  const double a01 = m00 * cov.xp + m01 * cov.pp;
  const double a10 = m10 * cov.xx + m11 * cov.xp;
  const double a11 = m10 * cov.xp + m11 * cov.pp;
  // cov' = A * M^T
  SymMat2 out;
  out.xx = a00 * m00 + a01 * m01;
  out.xp = a00 * m10 + a01 * m11;
  out.pp = a10 * m10 + a11 * m11;
  return out;
}

}  // namespace

double wrap_angle(double phi) {
  double wrapped = std::fmod(phi, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

SqueezeParams make_squeeze_params(double r, double phi) {
  if (!std::isfinite(r) || r < 0.0)
    throw std::invalid_argument("squeeze parameter r must be finite and >= 0, got " +
                                std::to_string(r));
  if (!std::isfinite(phi))
    throw std::invalid_argument("squeeze angle phi must be finite");
  return SqueezeParams{r, wrap_angle(phi)};
}

void validate(const GaussianState& state) {
  const auto& c = state.cov;
  if (!std::isfinite(state.mean_x) || !std::isfinite(state.mean_p) ||
      !std::isfinite(c.xx) || !std::isfinite(c.xp) || !std::isfinite(c.pp))
    throw std::invalid_argument("Gaussian state has non-finite entries");
  // Positive definite: positive diagonal and positive determinant.
  if (c.xx <= 0.0 || c.pp <= 0.0 || c.det() <= 0.0)
    throw std::invalid_argument("covariance is not positive definite");
  if (c.det() < 1.0 - kCovTolerance)
    throw std::invalid_argument("covariance violates det(cov) >= 1 (got det = " +
                                std::to_string(c.det()) + ")");
}

GaussianState vacuum() { return GaussianState{}; }

GaussianState apply_squeeze(const GaussianState& state, const SqueezeParams& params) {
  const SqueezeParams p = make_squeeze_params(params.r, params.phi);
  const double down = std::exp(-p.r);
  const double up = std::exp(p.r);
  const double c = std::cos(p.phi);
  const double s = std::sin(p.phi);
  // S = R(phi) diag(down, up) R(phi)^T, symmetric.
  const double s00 = c * c * down + s * s * up;
  const double s01 = c * s * (down - up);
  const double s11 = s * s * down + c * c * up;

  GaussianState out;
  out.mean_x = s00 * state.mean_x + s01 * state.mean_p;
  out.mean_p = s01 * state.mean_x + s11 * state.mean_p;
  out.cov = congruence(state.cov, s00, s01, s01, s11);
  return out;
}

GaussianState apply_loss(const GaussianState& state, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("loss transmittance eta must lie in [0, 1], got " +
                                std::to_string(eta));
  GaussianState out;
  const double root = std::sqrt(eta);
  out.mean_x = root * state.mean_x;
  out.mean_p = root * state.mean_p;
  out.cov.xx = eta * state.cov.xx + (1.0 - eta);
  out.cov.xp = eta * state.cov.xp;
  out.cov.pp = eta * state.cov.pp + (1.0 - eta);
  return out;
}

double quadrature_variance(const GaussianState& state, double theta) {
  if (!std::isfinite(theta))
    throw std::invalid_argument("quadrature angle must be finite");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return c * c * state.cov.xx + 2.0 * c * s * state.cov.xp + s * s * state.cov.pp;
}

double quadrature_mean(const GaussianState& state, double theta) {
  if (!std::isfinite(theta))
    throw std::invalid_argument("quadrature angle must be finite");
  return std::cos(theta) * state.mean_x + std::sin(theta) * state.mean_p;
}

GaussianState from_quadrature_variances(double v_along_phi, double v_orthogonal,
                                        double phi) {
  if (!std::isfinite(v_along_phi) || !std::isfinite(v_orthogonal) ||
      v_along_phi <= 0.0 || v_orthogonal <= 0.0)
    throw std::invalid_argument("quadrature variances must be finite and > 0");
  const double angle = wrap_angle(phi);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  GaussianState out;
  out.cov.xx = c * c * v_along_phi + s * s * v_orthogonal;
  out.cov.xp = c * s * (v_along_phi - v_orthogonal);
  out.cov.pp = s * s * v_along_phi + c * c * v_orthogonal;
  validate(out);
  return out;
}

}  // namespace sqz

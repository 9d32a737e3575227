#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sqz {

// Plane-wave degenerate parametric amplifier in the undepleted-pump limit.
// The squeezing parameter follows r = kappa * sqrt(p_pump), and a bright
// probe at relative phase theta sees the intensity gain
//   G(theta) = cosh(2r) + sinh(2r) * cos(theta),
// so G(0) = e^{+2r} (amplification) and G(pi) = e^{-2r} (deamplification).
struct DopaModel {
  double kappa = 0.0;      // pump coupling, 1/sqrt(mW)
  double p_pump_mw = 0.0;  // average pump power, mW
  double phi = 0.0;        // squeeze orientation (deamplified axis), rad
  double mu_gid = 0.0;     // gain-induced-diffraction floor, in [0, 1)

  bool operator==(const DopaModel&) const = default;
};

// One measured point of a gain curve.
struct GainPoint {
  double p_pump_mw = 0.0;
  double g_amp = 1.0;
  double g_deamp = 1.0;
  double weight = 1.0;
};

void validate(const DopaModel& model);

// r = kappa * sqrt(p_pump).
double squeeze_param(const DopaModel& model);

// Plane-wave intensity gain at probe phase theta (see above).
double classical_gain(double r, double theta);

// Deamplification gain with a one-parameter convex floor standing in for
// gain-induced diffraction:
//   G_d = (1 - mu) * e^{-2r} + mu.
// mu = 0 recovers the plane-wave value; G_d -> mu as r -> infinity. The
// amplified quadrature is left plane-wave, so model amplification times
// model deamplification exceeds 1 once mu > 0 and r > 0.
double gid_deamp(double r, double mu_gid);

struct GainPair {
  double g_amp = 1.0;
  double g_deamp = 1.0;
};

// (e^{+2r}, gid_deamp(r, mu)) for the model's r.
GainPair effective_gains(const DopaModel& model);

// Inverts a measured deamplification gain: r = -ln(g_deamp) / 2.
// Requires 0 < g_deamp <= 1.
double infer_r_from_deamp(double g_deamp);

struct GainFitOptions {
  bool fit_mu = false;                     // float mu_gid as a second parameter
  std::optional<double> max_pump_mw;       // keep only points with P <= bound
  int max_iterations = 200;
  double rel_step_tol = 1e-10;
};

struct GainFitResult {
  double kappa = 0.0;
  double mu_gid = 0.0;
  double residual = 0.0;  // attained sum of squared log-gain residuals
  int iterations = 0;
  bool converged = false;
  std::size_t points_used = 0;
  std::size_t points_filtered = 0;  // dropped by max_pump_mw
};

// Weighted least squares of log-gains against the model above, over
// r = kappa * sqrt(P). Cost:
//   sum_i w_i * [ (ln g_amp_i - 2 r_i)^2 + (ln g_deamp_i - ln G_d(r_i))^2 ].
// Damped Gauss-Newton with fixed initialization (kappa from the
// lowest-power point, mu = 0) and a fixed convergence rule, so the result
// is deterministic for a given input. Non-convergence is reported through
// GainFitResult::converged, never silently accepted.
GainFitResult fit_gain_curve(std::span<const GainPoint> points,
                             const GainFitOptions& options = {});

// Returns a human-readable note for points that defy the expected ordering
// g_amp >= 1 >= g_deamp (accepted for fitting, but worth surfacing).
std::vector<std::string> gain_point_warnings(std::span<const GainPoint> points);

}  // namespace sqz

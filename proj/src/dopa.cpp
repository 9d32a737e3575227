#include "sqz/dopa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sqz {

void validate(const DopaModel& model) {
  if (!std::isfinite(model.kappa) || model.kappa < 0.0)
    throw std::invalid_argument("kappa must be finite and >= 0");
  if (!std::isfinite(model.p_pump_mw) || model.p_pump_mw < 0.0)
    throw std::invalid_argument("pump power must be finite and >= 0");
  if (!std::isfinite(model.mu_gid) || model.mu_gid < 0.0 || model.mu_gid >= 1.0)
    throw std::invalid_argument("mu_gid must lie in [0, 1)");
  if (!std::isfinite(model.phi))
    throw std::invalid_argument("phi must be finite");
}

double squeeze_param(const DopaModel& model) {
  validate(model);
  return model.kappa * std::sqrt(model.p_pump_mw);
}

double classical_gain(double r, double theta) {
  if (!std::isfinite(r) || r < 0.0)
    throw std::invalid_argument("r must be finite and >= 0");
  return std::cosh(2.0 * r) + std::sinh(2.0 * r) * std::cos(theta);
}

double gid_deamp(double r, double mu_gid) {
  if (!std::isfinite(r) || r < 0.0)
    throw std::invalid_argument("r must be finite and >= 0");
  if (!(mu_gid >= 0.0 && mu_gid < 1.0))
    throw std::invalid_argument("mu_gid must lie in [0, 1)");
  return (1.0 - mu_gid) * std::exp(-2.0 * r) + mu_gid;
}

GainPair effective_gains(const DopaModel& model) {
  const double r = squeeze_param(model);
  return GainPair{std::exp(2.0 * r), gid_deamp(r, model.mu_gid)};
}

double infer_r_from_deamp(double g_deamp) {
  if (!(g_deamp > 0.0 && g_deamp <= 1.0))
    throw std::invalid_argument("deamplification gain must lie in (0, 1]");
  return -0.5 * std::log(g_deamp);
}

std::vector<std::string> gain_point_warnings(std::span<const GainPoint> points) {
  std::vector<std::string> notes;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    if (pt.g_amp < 1.0)
      notes.push_back("point " + std::to_string(i) + ": amplification gain " +
                      std::to_string(pt.g_amp) + " below unity");
    if (pt.g_deamp > 1.0)
      notes.push_back("point " + std::to_string(i) + ": deamplification gain " +
                      std::to_string(pt.g_deamp) + " above unity");
  }
  return notes;
}

namespace {

struct Residuals {
  double cost = 0.0;
  // Normal equations accumulated over residuals: J^T J (2x2) and J^T r (2).
  double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0;
  double jtr0 = 0.0, jtr1 = 0.0;
};

// Parameters: p[0] = kappa, p[1] = mu. Residuals are model minus data in
// log-gain, weighted by sqrt(w).
Residuals evaluate(std::span<const GainPoint> pts, double kappa, double mu,
                   bool with_jacobian) {
  Residuals acc;
  for (const auto& pt : pts) {
    const double w = pt.weight;
    if (w == 0.0) continue;
    const double sqrt_p = std::sqrt(pt.p_pump_mw);
    const double r = kappa * sqrt_p;
    const double e2r = std::exp(-2.0 * r);
    const double gd = (1.0 - mu) * e2r + mu;

    const double res_amp = 2.0 * r - std::log(pt.g_amp);
    const double res_de = std::log(gd) - std::log(pt.g_deamp);
    acc.cost += w * (res_amp * res_amp + res_de * res_de);
    if (!with_jacobian) continue;

    // d(2r)/dkappa = 2 sqrt(P); d(ln gd)/dkappa = -2 sqrt(P) (1-mu) e^-2r / gd;
    // d(ln gd)/dmu = (1 - e^-2r) / gd.
    const double ja_k = 2.0 * sqrt_p;
    const double jd_k = -2.0 * sqrt_p * (1.0 - mu) * e2r / gd;
    const double jd_m = (1.0 - e2r) / gd;

    acc.jtj00 += w * (ja_k * ja_k + jd_k * jd_k);
    acc.jtj01 += w * (jd_k * jd_m);
    acc.jtj11 += w * (jd_m * jd_m);
    acc.jtr0 += w * (ja_k * res_amp + jd_k * res_de);
    acc.jtr1 += w * (jd_m * res_de);
  }
  return acc;
}

double clamp_mu(double mu) { return std::clamp(mu, 0.0, 1.0 - 1e-12); }
double clamp_kappa(double kappa) { return std::max(kappa, 0.0); }

}  // namespace

GainFitResult fit_gain_curve(std::span<const GainPoint> points,
                             const GainFitOptions& options) {
  std::vector<GainPoint> pts;
  pts.reserve(points.size());
  std::size_t filtered = 0;
  for (const auto& pt : points) {
    if (!(pt.g_amp > 0.0) || !(pt.g_deamp > 0.0))
      throw std::invalid_argument("gains must be > 0");
    if (!(pt.p_pump_mw >= 0.0))
      throw std::invalid_argument("pump power must be >= 0");
    if (pt.weight < 0.0) throw std::invalid_argument("weights must be >= 0");
    if (options.max_pump_mw && pt.p_pump_mw > *options.max_pump_mw) {
      ++filtered;
      continue;
    }
    pts.push_back(pt);
  }
  if (pts.size() < 2)
    throw std::invalid_argument("gain fit needs at least 2 points in range");
  if (std::all_of(pts.begin(), pts.end(),
                  [](const GainPoint& p) { return p.weight == 0.0; }))
    throw std::invalid_argument("gain fit needs at least one nonzero weight");
  if (options.fit_mu && pts.size() < 2)
    throw std::invalid_argument("fitting mu requires at least 2 points");

  // Fixed initialization: kappa from the lowest-power point with P > 0,
  // averaging the amplification and deamplification estimates (exact when
  // mu = 0); mu starts at 0.
  const auto lowest = std::min_element(
      pts.begin(), pts.end(), [](const GainPoint& a, const GainPoint& b) {
        const bool a_ok = a.p_pump_mw > 0.0, b_ok = b.p_pump_mw > 0.0;
        if (a_ok != b_ok) return a_ok;
        return a.p_pump_mw < b.p_pump_mw;
      });
  double kappa = 0.1;
  if (lowest != pts.end() && lowest->p_pump_mw > 0.0) {
    const double est =
        (std::log(lowest->g_amp) - std::log(lowest->g_deamp)) /
        (4.0 * std::sqrt(lowest->p_pump_mw));
    if (std::isfinite(est) && est > 0.0) kappa = est;
  }
  double mu = 0.0;

  GainFitResult result;
  result.points_used = pts.size();
  result.points_filtered = filtered;

  double lambda = 1e-3;
  Residuals cur = evaluate(pts, kappa, mu, true);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    // Solve (J^T J + lambda diag(J^T J)) step = -J^T r.
    double a00 = cur.jtj00 * (1.0 + lambda);
    double a01 = cur.jtj01;
    double a11 = cur.jtj11 * (1.0 + lambda);
    double step_k = 0.0, step_m = 0.0;
    if (options.fit_mu) {
      const double det = a00 * a11 - a01 * a01;
      if (det == 0.0) break;
      step_k = (-cur.jtr0 * a11 + cur.jtr1 * a01) / det;
      step_m = (-cur.jtr1 * a00 + cur.jtr0 * a01) / det;
    } else {
      if (a00 == 0.0) break;
      step_k = -cur.jtr0 / a00;
    }

    const double trial_k = clamp_kappa(kappa + step_k);
    const double trial_m = options.fit_mu ? clamp_mu(mu + step_m) : mu;
    const Residuals trial = evaluate(pts, trial_k, trial_m, false);

    if (trial.cost <= cur.cost) {
      const double rel_step =
          std::abs(trial_k - kappa) / (std::abs(kappa) + 1e-30) +
          (options.fit_mu ? std::abs(trial_m - mu) / (std::abs(mu) + 1e-30) : 0.0);
      kappa = trial_k;
      mu = trial_m;
      cur = evaluate(pts, kappa, mu, true);
      lambda = std::max(lambda * 0.1, 1e-12);
      if (rel_step < options.rel_step_tol || cur.cost == 0.0) {
        result.converged = true;
        ++iter;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) {
        // Damping saturated: no direction improves the cost, treat the
        // current point as converged-at-minimum.
        result.converged = true;
        ++iter;
        break;
      }
    }
  }

  result.kappa = kappa;
  result.mu_gid = mu;
  result.residual = cur.cost;
  result.iterations = iter;
  return result;
}

}  // namespace sqz

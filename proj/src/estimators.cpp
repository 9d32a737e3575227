#include "sqz/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sqz {

namespace {

constexpr double kDbFactor = 10.0 / std::numbers::ln10;  // d(dB)/d(ln V)

double normal_cdf(double x, double mean, double sigma) {
  return 0.5 * std::erfc((mean - x) / (sigma * std::numbers::sqrt2));
}

// Solves the symmetric 3x3 system A x = b and returns A^-1 alongside;
// used for the sinusoid-fit normal equations.
struct Sym3 {
  // row-major upper triangle
  double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;

  double det() const {
    return a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02) +
           a02 * (a01 * a12 - a11 * a02);
  }

  std::array<double, 9> inverse() const {
    const double d = det();
    if (d == 0.0 || !std::isfinite(d))
      throw std::runtime_error("singular normal equations");
    const double inv = 1.0 / d;
    std::array<double, 9> m{};
    m[0] = (a11 * a22 - a12 * a12) * inv;
    m[1] = (a02 * a12 - a01 * a22) * inv;
    m[2] = (a01 * a12 - a02 * a11) * inv;
    m[3] = m[1];
    m[4] = (a00 * a22 - a02 * a02) * inv;
    m[5] = (a01 * a02 - a00 * a12) * inv;
    m[6] = m[2];
    m[7] = m[5];
    m[8] = (a00 * a11 - a01 * a01) * inv;
    return m;
  }
};

struct SinusoidFit {
  double a = 0, p = 0, q = 0;        // V = a + p cos2t + q sin2t
  std::array<double, 9> cov{};       // covariance of (a, p, q)
  bool ok = false;
};

SinusoidFit fit_sinusoid(std::span<const VarianceTrace> trace) {
  // Pass 1: unweighted least squares. Pass 2: weights from the pass-1 model
  // (not from the noisy per-block estimates, which would bias the fit low).
  SinusoidFit fit;
  double rel = 0.0;  // stderr / variance, constant across blocks
  std::size_t n_rel = 0;
  for (const auto& blk : trace) {
    if (!blk.degenerate && blk.variance_snu > 0.0) {
      rel += blk.stderr_snu / blk.variance_snu;
      ++n_rel;
    }
  }
  if (n_rel == 0) return fit;
  rel /= static_cast<double>(n_rel);

  double a = 0, p = 0, q = 0;
  for (int pass = 0; pass < 2; ++pass) {
    Sym3 normal;
    double b0 = 0, b1 = 0, b2 = 0;
    for (const auto& blk : trace) {
      const double c = std::cos(2.0 * blk.phase_mid);
      const double s = std::sin(2.0 * blk.phase_mid);
      double w = 1.0;
      if (pass == 1) {
        const double model = a + p * c + q * s;
        const double sigma = std::max(model * rel, 1e-12);
        w = 1.0 / (sigma * sigma);
      }
      normal.a00 += w;
      normal.a01 += w * c;
      normal.a02 += w * s;
      normal.a11 += w * c * c;
      normal.a12 += w * c * s;
      normal.a22 += w * s * s;
      b0 += w * blk.variance_snu;
      b1 += w * blk.variance_snu * c;
      b2 += w * blk.variance_snu * s;
    }
    std::array<double, 9> inv;
    try {
      inv = normal.inverse();
    } catch (const std::runtime_error&) {
      return fit;
    }
    a = inv[0] * b0 + inv[1] * b1 + inv[2] * b2;
    p = inv[3] * b0 + inv[4] * b1 + inv[5] * b2;
    q = inv[6] * b0 + inv[7] * b1 + inv[8] * b2;
    if (pass == 1) fit.cov = inv;
    if (!(a > 0.0)) return fit;  // nonsense fit, keep the raw path only
  }
  fit.a = a;
  fit.p = p;
  fit.q = q;
  fit.ok = true;
  return fit;
}

}  // namespace

BlockVarianceResult block_variances(std::span<const PulseRecord> records,
                                    std::size_t block_size, double snl_raw) {
  if (records.empty()) throw std::invalid_argument("empty pulse stream");
  if (block_size < 2) throw std::invalid_argument("block_size must be >= 2");
  if (!(snl_raw > 0.0)) throw std::invalid_argument("snl_raw must be > 0");
  if (records.size() < block_size)
    throw std::invalid_argument("stream shorter than one block");

  BlockVarianceResult result;
  result.block_size = block_size;
  const std::size_t n_blocks = records.size() / block_size;
  result.dropped_tail = records.size() - n_blocks * block_size;
  result.blocks.reserve(n_blocks);
  const double nb = static_cast<double>(block_size);

  for (std::size_t b = 0; b < n_blocks; ++b) {
    const auto* first = records.data() + b * block_size;
    double mean_value = 0.0, mean_phase = 0.0;
    for (std::size_t i = 0; i < block_size; ++i) {
      mean_value += first[i].value;
      mean_phase += first[i].lo_phase;
    }
    mean_value /= nb;
    mean_phase /= nb;
    double ss = 0.0;
    for (std::size_t i = 0; i < block_size; ++i) {
      const double d = first[i].value - mean_value;
      ss += d * d;
    }
    const double v = ss / (nb - 1.0) / snl_raw;
    VarianceTrace entry;
    entry.block_index = b;
    entry.phase_mid = mean_phase;
    entry.variance_snu = v;
    entry.degenerate = (v == 0.0);
    entry.stderr_snu = entry.degenerate ? 0.0 : variance_stderr(v, block_size);
    result.blocks.push_back(entry);
  }
  return result;
}

double to_db(double v_snu) {
  if (!(v_snu > 0.0))
    throw std::invalid_argument("variance must be > 0 for dB conversion");
  return 10.0 * std::log10(v_snu);
}

double from_db(double db) { return std::pow(10.0, db / 10.0); }

double variance_stderr(double v_snu, std::size_t n) {
  if (n < 2) throw std::invalid_argument("variance stderr needs n >= 2");
  if (!(v_snu > 0.0)) throw std::invalid_argument("variance must be > 0");
  return v_snu * std::sqrt(2.0 / static_cast<double>(n - 1));
}

DbPair infer_squeezing_from_gains(double g_amp, double g_deamp, double eta) {
  if (!(g_amp > 0.0) || !(g_deamp > 0.0))
    throw std::invalid_argument("gains must be > 0");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("eta must lie in [0, 1]");
  return DbPair{to_db(eta * g_deamp + (1.0 - eta)),
                to_db(eta * g_amp + (1.0 - eta))};
}

InferenceJacobian inference_jacobian(double g_amp, double g_deamp, double eta) {
  const double v_sq = eta * g_deamp + (1.0 - eta);
  const double v_anti = eta * g_amp + (1.0 - eta);
  InferenceJacobian jac;
  jac.d_sq_d_gdeamp = kDbFactor * eta / v_sq;
  jac.d_sq_d_eta = kDbFactor * (g_deamp - 1.0) / v_sq;
  jac.d_anti_d_gamp = kDbFactor * eta / v_anti;
  jac.d_anti_d_eta = kDbFactor * (g_amp - 1.0) / v_anti;
  return jac;
}

DbPairSigma propagate_inference_uncertainty(double g_amp, double sigma_g_amp,
                                            double g_deamp, double sigma_g_deamp,
                                            double eta, double sigma_eta) {
  if (sigma_g_amp < 0.0 || sigma_g_deamp < 0.0 || sigma_eta < 0.0)
    throw std::invalid_argument("uncertainties must be >= 0");
  infer_squeezing_from_gains(g_amp, g_deamp, eta);  // validates the inputs
  const InferenceJacobian jac = inference_jacobian(g_amp, g_deamp, eta);
  DbPairSigma sigma;
  sigma.sigma_squeezed_db = std::hypot(jac.d_sq_d_gdeamp * sigma_g_deamp,
                                       jac.d_sq_d_eta * sigma_eta);
  sigma.sigma_antisqueezed_db = std::hypot(jac.d_anti_d_gamp * sigma_g_amp,
                                           jac.d_anti_d_eta * sigma_eta);
  return sigma;
}

GaussianFit gaussian_fit(std::span<const double> samples) {
  if (samples.size() < 30)
    throw std::invalid_argument("gaussian fit needs at least 30 samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : samples) {
    const double d = x - mean;
    ss += d * d;
  }
  const double variance = ss / (n - 1.0);
  if (variance == 0.0) throw std::invalid_argument("zero variance");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double sigma = std::sqrt(variance);
  double d_stat = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = normal_cdf(sorted[i], mean, sigma);
    const double d_plus = static_cast<double>(i + 1) / n - cdf;
    const double d_minus = cdf - static_cast<double>(i) / n;
    d_stat = std::max({d_stat, d_plus, d_minus});
  }

  GaussianFit fit;
  fit.mean = mean;
  fit.variance = variance;
  fit.ks_statistic = d_stat;
  fit.ks_pass_1pct = d_stat < 1.63 / std::sqrt(n);
  fit.n = samples.size();
  return fit;
}

Histogram histogram(std::span<const double> samples, std::size_t n_bins,
                    double lo, double hi) {
  if (n_bins < 2) throw std::invalid_argument("histogram needs >= 2 bins");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
    throw std::invalid_argument("invalid histogram range");

  Histogram h;
  h.edges.resize(n_bins + 1);
  h.counts.assign(n_bins, 0);
  h.model.assign(n_bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i <= n_bins; ++i)
    h.edges[i] = lo + width * static_cast<double>(i);

  for (double x : samples) {
    if (x < lo || x >= hi) continue;
    auto bin = static_cast<std::size_t>((x - lo) / width);
    if (bin >= n_bins) bin = n_bins - 1;
    ++h.counts[bin];
    ++h.in_range;
  }

  if (samples.size() >= 30) {
    try {
      h.fit = gaussian_fit(samples);
      h.fit_valid = true;
      const double sigma = std::sqrt(h.fit.variance);
      const double norm =
          static_cast<double>(h.in_range) * width / (sigma * std::sqrt(2.0 * std::numbers::pi));
      for (std::size_t i = 0; i < n_bins; ++i) {
        const double center = lo + width * (static_cast<double>(i) + 0.5);
        const double z = (center - h.fit.mean) / sigma;
        h.model[i] = norm * std::exp(-0.5 * z * z);
      }
    } catch (const std::invalid_argument&) {
      h.fit_valid = false;
    }
  }
  return h;
}

ShotNoiseCalibration calibrate_shot_noise(std::span<const ShotNoisePoint> points,
                                          std::optional<double> n_lo_ref) {
  if (points.size() < 2)
    throw std::invalid_argument("calibration fit needs at least 2 LO levels");
  double x_min = points.front().n_lo, x_max = points.front().n_lo;
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& pt : points) {
    x_min = std::min(x_min, pt.n_lo);
    x_max = std::max(x_max, pt.n_lo);
    mean_x += pt.n_lo;
    mean_y += pt.variance_raw;
  }
  const double n = static_cast<double>(points.size());
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& pt : points) {
    const double dx = pt.n_lo - mean_x;
    const double dy = pt.variance_raw - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0)
    throw std::invalid_argument(
        "degenerate design matrix: all LO levels identical");

  ShotNoiseCalibration cal;
  cal.slope = sxy / sxx;
  cal.intercept = mean_y - cal.slope * mean_x;
  double ss_res = 0.0;
  for (const auto& pt : points) {
    const double resid = pt.variance_raw - (cal.slope * pt.n_lo + cal.intercept);
    ss_res += resid * resid;
  }
  cal.r_squared = (syy == 0.0) ? 1.0 : 1.0 - ss_res / syy;
  cal.n_lo_ref = n_lo_ref.value_or(x_max);
  cal.snl_raw = cal.slope * cal.n_lo_ref;
  cal.v_elec_raw = cal.intercept;
  if (!(cal.snl_raw > 0.0))
    throw std::invalid_argument("calibration produced nonpositive shot noise");
  return cal;
}

ShotNoiseCalibration calibrate_shot_noise(std::span<const PulseRecord> vacuum_records,
                                          double v_elec_raw) {
  if (vacuum_records.size() < 2)
    throw std::invalid_argument("calibration needs at least 2 samples");
  if (v_elec_raw < 0.0)
    throw std::invalid_argument("electronic noise variance must be >= 0");
  double mean = 0.0;
  for (const auto& rec : vacuum_records) mean += rec.value;
  mean /= static_cast<double>(vacuum_records.size());
  double ss = 0.0;
  for (const auto& rec : vacuum_records) {
    const double d = rec.value - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(vacuum_records.size() - 1);
  ShotNoiseCalibration cal;
  cal.snl_raw = var - v_elec_raw;
  cal.v_elec_raw = v_elec_raw;
  if (!(cal.snl_raw > 0.0))
    throw std::invalid_argument("calibration produced nonpositive shot noise");
  return cal;
}

SqueezingReport extremal_variances(std::span<const VarianceTrace> trace) {
  if (trace.empty()) throw std::invalid_argument("empty variance trace");

  SqueezingReport report;
  report.n_blocks = trace.size();

  const VarianceTrace* min_blk = nullptr;
  const VarianceTrace* max_blk = nullptr;
  double phase_lo = trace.front().phase_mid, phase_hi = trace.front().phase_mid;
  for (const auto& blk : trace) {
    phase_lo = std::min(phase_lo, blk.phase_mid);
    phase_hi = std::max(phase_hi, blk.phase_mid);
    if (blk.degenerate) continue;
    if (!min_blk || blk.variance_snu < min_blk->variance_snu) min_blk = &blk;
    if (!max_blk || blk.variance_snu > max_blk->variance_snu) max_blk = &blk;
  }
  if (!min_blk)
    throw std::invalid_argument("variance trace has no usable (non-degenerate) blocks");

  report.raw_min_db = to_db(min_blk->variance_snu);
  report.raw_max_db = to_db(max_blk->variance_snu);
  report.raw_min_err_db = kDbFactor * min_blk->stderr_snu / min_blk->variance_snu;
  report.raw_max_err_db = kDbFactor * max_blk->stderr_snu / max_blk->variance_snu;
  report.raw_min_block = min_blk->block_index;
  report.raw_max_block = max_blk->block_index;

  const bool coverage_ok =
      trace.size() >= 3 && (phase_hi - phase_lo) > std::numbers::pi;
  if (!coverage_ok) {
    report.coverage_note =
        "fit path disabled: need >= 3 blocks spanning > pi of phase";
  } else {
    const SinusoidFit fit = fit_sinusoid(trace);
    if (!fit.ok) {
      report.coverage_note = "fit path disabled: degenerate sinusoid fit";
    } else {
      const double b = std::hypot(fit.p, fit.q);
      const double v_min = fit.a - b;
      const double v_max = fit.a + b;
      if (v_min > 0.0) {
        report.fit_available = true;
        report.fit_mean_snu = fit.a;
        report.fit_amp_snu = b;
        report.fit_phase_rad = std::atan2(fit.q, fit.p);
        report.fit_min_snu = v_min;
        report.fit_max_snu = v_max;

        // Var(a -+ b) from the parameter covariance and the gradient of b.
        const double gb_p = (b > 0.0) ? fit.p / b : 1.0;
        const double gb_q = (b > 0.0) ? fit.q / b : 0.0;
        const double var_b = gb_p * gb_p * fit.cov[4] +
                             2.0 * gb_p * gb_q * fit.cov[5] +
                             gb_q * gb_q * fit.cov[8];
        const double cov_ab = gb_p * fit.cov[1] + gb_q * fit.cov[2];
        const double var_min = std::max(fit.cov[0] + var_b - 2.0 * cov_ab, 0.0);
        const double var_max = std::max(fit.cov[0] + var_b + 2.0 * cov_ab, 0.0);

        report.v_min_db = to_db(v_min);
        report.v_max_db = to_db(v_max);
        report.err_min_db = kDbFactor * std::sqrt(var_min) / v_min;
        report.err_max_db = kDbFactor * std::sqrt(var_max) / v_max;
        report.method = "sinusoid_fit";
      } else {
        report.coverage_note = "fit path disabled: fitted minimum not positive";
      }
    }
  }

  if (!report.fit_available) {
    report.method = "block_minmax";
    report.v_min_db = report.raw_min_db;
    report.v_max_db = report.raw_max_db;
    report.err_min_db = report.raw_min_err_db;
    report.err_max_db = report.raw_max_err_db;
  }
  return report;
}

}  // namespace sqz

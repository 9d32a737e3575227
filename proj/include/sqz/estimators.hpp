#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqz/homodyne.hpp"

namespace sqz {

// One block of the variance-vs-phase trace.
struct VarianceTrace {
  std::size_t block_index = 0;
  double phase_mid = 0.0;     // mean recorded LO phase over the block
  double variance_snu = 0.0;  // unbiased sample variance, SNU
  double stderr_snu = 0.0;    // variance_snu * sqrt(2 / (block_size - 1))
  bool degenerate = false;    // all samples identical
};

struct BlockVarianceResult {
  std::vector<VarianceTrace> blocks;
  std::size_t block_size = 0;
  std::size_t dropped_tail = 0;  // samples in the discarded partial block
};

// Non-overlapping fixed-size blocks; the trailing partial block is dropped
// and reported. Raw variances are converted to SNU by dividing by snl_raw.
// Summation within a block is plain left-to-right two-pass.
BlockVarianceResult block_variances(std::span<const PulseRecord> records,
                                    std::size_t block_size, double snl_raw);

// 10 * log10(v / 1 SNU). Rejects v <= 0.
double to_db(double v_snu);
double from_db(double db);

// Gaussian variance-of-sample-variance: sigma_V = v * sqrt(2 / (n - 1)).
double variance_stderr(double v_snu, std::size_t n);

struct DbPair {
  double squeezed_db = 0.0;
  double antisqueezed_db = 0.0;
};

// Squeezing levels inferred from classical parametric gains through a
// detection efficiency eta:
//   ( 10*log10(eta*g_deamp + 1 - eta), 10*log10(eta*g_amp + 1 - eta) ).
DbPair infer_squeezing_from_gains(double g_amp, double g_deamp, double eta);

// Jacobian of infer_squeezing_from_gains. Rows: (squeezed_db,
// antisqueezed_db); columns: (g_amp, g_deamp, eta).
struct InferenceJacobian {
  double d_sq_d_gamp = 0.0, d_sq_d_gdeamp = 0.0, d_sq_d_eta = 0.0;
  double d_anti_d_gamp = 0.0, d_anti_d_gdeamp = 0.0, d_anti_d_eta = 0.0;
};
InferenceJacobian inference_jacobian(double g_amp, double g_deamp, double eta);

struct DbPairSigma {
  double sigma_squeezed_db = 0.0;
  double sigma_antisqueezed_db = 0.0;
};

// First-order Gaussian propagation of independent uncertainties on the two
// gains and on eta through infer_squeezing_from_gains.
DbPairSigma propagate_inference_uncertainty(double g_amp, double sigma_g_amp,
                                            double g_deamp, double sigma_g_deamp,
                                            double eta, double sigma_eta);

struct GaussianFit {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double ks_statistic = 0.0;
  bool ks_pass_1pct = false;  // D < 1.63 / sqrt(n), asymptotic 1% level
  std::size_t n = 0;
};

// Maximum-likelihood Gaussian (sample mean, unbiased variance) plus the
// Kolmogorov-Smirnov distance against the fitted Gaussian. Needs >= 30
// samples and nonzero variance.
GaussianFit gaussian_fit(std::span<const double> samples);

struct Histogram {
  std::vector<double> edges;          // n_bins + 1
  std::vector<std::uint64_t> counts;  // per bin; sums to in_range
  std::vector<double> model;          // fitted-Gaussian expected counts
  std::size_t in_range = 0;
  GaussianFit fit{};
  bool fit_valid = false;  // overlay is all zeros when the fit is unavailable
};

// Counts samples into n_bins equal bins over [lo, hi); the overlay is the
// fitted Gaussian density times in-range count times bin width.
Histogram histogram(std::span<const double> samples, std::size_t n_bins,
                    double lo, double hi);

struct ShotNoiseCalibration {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  double n_lo_ref = std::numeric_limits<double>::quiet_NaN();
  double snl_raw = 0.0;     // raw variance per SNU at the reference LO level
  double v_elec_raw = 0.0;  // raw electronic-noise variance (the intercept)
};

// Ordinary least squares of raw variance against LO photon number.
// snl_raw = slope * n_lo_ref (default reference: the largest level).
// Requires >= 2 distinct LO levels.
ShotNoiseCalibration calibrate_shot_noise(std::span<const ShotNoisePoint> points,
                                          std::optional<double> n_lo_ref = {});

// Single-level vacuum stream: snl_raw is the sample variance minus a
// supplied (or zero) electronic-noise variance in raw units.
ShotNoiseCalibration calibrate_shot_noise(std::span<const PulseRecord> vacuum_records,
                                          double v_elec_raw = 0.0);

struct SqueezingReport {
  // Headline numbers. method names the estimation path that produced them:
  // "sinusoid_fit" when the V(theta) = a + b cos(2 theta - c) fit is
  // available (lower-variance estimator), otherwise "block_minmax".
  std::string method;
  double v_min_db = 0.0;
  double v_max_db = 0.0;
  double err_min_db = 0.0;
  double err_max_db = 0.0;

  // Raw extremal blocks, always reported (what a variance-vs-phase plot
  // visually shows; biased outward by extreme-value selection).
  double raw_min_db = 0.0;
  double raw_max_db = 0.0;
  double raw_min_err_db = 0.0;
  double raw_max_err_db = 0.0;
  std::size_t raw_min_block = 0;
  std::size_t raw_max_block = 0;

  bool fit_available = false;
  double fit_mean_snu = 0.0;   // a
  double fit_amp_snu = 0.0;    // b >= 0
  double fit_phase_rad = 0.0;  // c
  double fit_min_snu = 0.0;    // a - b
  double fit_max_snu = 0.0;    // a + b
  std::string coverage_note;   // why the fit path is disabled, if it is

  std::size_t n_blocks = 0;
  double eta_used = std::numeric_limits<double>::quiet_NaN();
  bool elec_correction = false;
  std::optional<DbPair> inferred_from_gains;
};

// Extremal variances of a trace: raw min/max blocks with
// variance-of-variance error bars, refined by a least-squares fit of
// V(theta) = a + b cos(2 theta - c) when at least 3 blocks span more than
// pi of phase. Insufficient coverage disables the fit path only.
SqueezingReport extremal_variances(std::span<const VarianceTrace> trace);

}  // namespace sqz

#include "sqz/homodyne.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sqz/rng.hpp"

namespace sqz {

void validate(const DetectionChain& chain) {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!in_unit(chain.eta_t) || !in_unit(chain.eta_h) || !in_unit(chain.eta_d))
    throw std::invalid_argument("efficiencies must lie in [0, 1]");
  if (!std::isfinite(chain.v_elec_snu) || chain.v_elec_snu < 0.0)
    throw std::invalid_argument("electronic noise variance must be >= 0");
  if (!std::isfinite(chain.n_lo) || chain.n_lo < 0.0)
    throw std::invalid_argument("LO photon number must be >= 0");
  if (!std::isfinite(chain.gain_raw) || chain.gain_raw <= 0.0)
    throw std::invalid_argument("gain_raw must be > 0");
}

void validate(const ScanConfig& cfg) {
  if (cfg.n_pulses < 1) throw std::invalid_argument("n_pulses must be >= 1");
  if (cfg.block_size < 2) throw std::invalid_argument("block_size must be >= 2");
  if (!std::isfinite(cfg.phase_start_rad) || !std::isfinite(cfg.phase_end_rad))
    throw std::invalid_argument("phase ramp must be finite");
  if (!std::isfinite(cfg.rep_rate_hz) || cfg.rep_rate_hz <= 0.0)
    throw std::invalid_argument("repetition rate must be > 0");
}

double overall_efficiency(const DetectionChain& chain) {
  validate(chain);
  return chain.eta_t * chain.eta_h * chain.eta_h * chain.eta_d;
}

double measured_variance(double v_signal_snu, const DetectionChain& chain,
                         bool include_elec) {
  if (!(v_signal_snu > 0.0))
    throw std::invalid_argument("signal variance must be > 0");
  const double eta = overall_efficiency(chain);
  double v = eta * v_signal_snu + (1.0 - eta);
  if (include_elec) v += chain.v_elec_snu;
  return v;
}

double phase_at(std::uint64_t i, const ScanConfig& cfg) {
  validate(cfg);
  if (i >= cfg.n_pulses)
    throw std::out_of_range("pulse index " + std::to_string(i) +
                            " out of range for " + std::to_string(cfg.n_pulses) +
                            " pulses");
  if (cfg.n_pulses == 1) return cfg.phase_start_rad;
  const double frac =
      static_cast<double>(i) / static_cast<double>(cfg.n_pulses - 1);
  return cfg.phase_start_rad + (cfg.phase_end_rad - cfg.phase_start_rad) * frac;
}

std::vector<PulseRecord> sample_pulse_train(const GaussianState& state,
                                            const DetectionChain& chain,
                                            const ScanConfig& cfg,
                                            int n_threads) {
  sqz::validate(state);
  validate(chain);
  validate(cfg);

  const double eta = overall_efficiency(chain);
  const double sqrt_eta = std::sqrt(eta);
  const std::size_t n = static_cast<std::size_t>(cfg.n_pulses);

  std::vector<double> normals(n);
  rng::fill_standard_normals(cfg.seed, /*stream_id=*/0, normals, n_threads);

  std::vector<PulseRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = phase_at(i, cfg);
    const double v =
        eta * quadrature_variance(state, theta) + (1.0 - eta) + chain.v_elec_snu;
    const double mean = quadrature_mean(state, theta) * sqrt_eta * chain.gain_raw;
    records[i] = PulseRecord{i, theta,
                             mean + chain.gain_raw * std::sqrt(v) * normals[i]};
  }
  return records;
}

std::vector<ShotNoisePoint> shot_noise_scan(const DetectionChain& chain,
                                            std::span<const double> n_lo_levels,
                                            std::uint64_t pulses_per_level,
                                            std::uint64_t seed) {
  validate(chain);
  if (n_lo_levels.empty())
    throw std::invalid_argument("shot-noise scan needs at least one LO level");
  if (pulses_per_level < 2)
    throw std::invalid_argument("shot-noise scan needs at least 2 pulses per level");
  if (!(chain.n_lo > 0.0))
    throw std::invalid_argument("reference LO level must be > 0");

  std::vector<ShotNoisePoint> out;
  out.reserve(n_lo_levels.size());
  std::vector<double> normals(pulses_per_level);
  for (std::size_t level = 0; level < n_lo_levels.size(); ++level) {
    const double n_lo = n_lo_levels[level];
    if (!(n_lo > 0.0))
      throw std::invalid_argument("LO levels must be > 0");
    rng::fill_standard_normals(seed, /*stream_id=*/level + 1, normals);
    const double sigma =
        chain.gain_raw * std::sqrt(n_lo / chain.n_lo + chain.v_elec_snu);
    // Two-pass sample variance of sigma * z.
    double mean = 0.0;
    for (double z : normals) mean += sigma * z;
    mean /= static_cast<double>(pulses_per_level);
    double ss = 0.0;
    for (double z : normals) {
      const double d = sigma * z - mean;
      ss += d * d;
    }
    out.push_back(
        ShotNoisePoint{n_lo, ss / static_cast<double>(pulses_per_level - 1)});
  }
  return out;
}

}  // namespace sqz

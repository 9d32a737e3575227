#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sqz/gaussian_state.hpp"

namespace sqz {

// Homodyne imperfection budget. The composite detection efficiency is
// eta = eta_t * eta_h^2 * eta_d (visibility enters squared). v_elec is the
// electronic-noise variance in SNU, referenced to the shot-noise level at
// the operating LO energy n_lo. gain_raw converts SNU amplitudes to raw
// detector units at that operating point.
struct DetectionChain {
  double eta_t = 0.92;
  double eta_h = 0.935;
  double eta_d = 0.945;
  double v_elec_snu = 0.0073;
  double n_lo = 2.5e8;     // LO photons per pulse at the operating point
  double gain_raw = 1.0;   // raw units per SNU amplitude

  bool operator==(const DetectionChain&) const = default;
};

// LO photons per pulse above which time-domain shot-noise linearity is no
// longer vouched for; crossing it earns a warning, nothing more.
inline constexpr double kLoLinearityCeiling = 2.5e8;

struct ScanConfig {
  std::uint64_t n_pulses = 0;
  std::uint64_t block_size = 2500;
  double phase_start_rad = 0.0;
  double phase_end_rad = 0.0;
  double rep_rate_hz = 790000.0;  // metadata only
  std::uint64_t seed = 1;

  bool operator==(const ScanConfig&) const = default;
};

struct PulseRecord {
  std::uint64_t index = 0;
  double lo_phase = 0.0;
  double value = 0.0;  // raw quadrature sample
};

// Descriptive metadata carried through file headers; never used in any
// computation.
struct MetaConfig {
  double wavelength_nm = 846.0;
  double pulse_fwhm_fs = 150.0;
  double crystal_len_um = 100.0;
  double crystal_temp_c = -14.0;
  double waist_um = 16.0;

  bool operator==(const MetaConfig&) const = default;
};

void validate(const DetectionChain& chain);
void validate(const ScanConfig& cfg);

double overall_efficiency(const DetectionChain& chain);

// Variance seen by the detector for a signal of variance v_signal (SNU):
//   V_m = eta * v_signal + (1 - eta) [+ v_elec if include_elec].
double measured_variance(double v_signal_snu, const DetectionChain& chain,
                         bool include_elec);

// Linear LO phase ramp over the record; endpoints map exactly.
double phase_at(std::uint64_t i, const ScanConfig& cfg);

// One Gaussian draw per pulse:
//   value_i ~ Normal( m(theta_i) * sqrt(eta) * gain_raw,
//                     gain_raw^2 * [eta * V(theta_i) + (1 - eta) + v_elec] )
// with theta_i = phase_at(i) and V, m from the Gaussian state. Records are
// generated in seed-derived chunks (see sqz::rng), so any thread count
// produces the identical stream.
std::vector<PulseRecord> sample_pulse_train(const GaussianState& state,
                                            const DetectionChain& chain,
                                            const ScanConfig& cfg,
                                            int n_threads = 1);

struct ShotNoisePoint {
  double n_lo = 0.0;
  double variance_raw = 0.0;
};

// Vacuum-signal calibration sweep over LO pulse energies. Raw variance at
// level L follows gain_raw^2 * (L / chain.n_lo + v_elec): shot noise scales
// linearly with LO photons while the electronic floor stays put. Level j
// draws from RNG stream j + 1 of `seed` (stream 0 is the pulse train).
std::vector<ShotNoisePoint> shot_noise_scan(const DetectionChain& chain,
                                            std::span<const double> n_lo_levels,
                                            std::uint64_t pulses_per_level,
                                            std::uint64_t seed);

}  // namespace sqz

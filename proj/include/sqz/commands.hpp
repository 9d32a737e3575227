#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sqz/config.hpp"
#include "sqz/estimators.hpp"
#include "sqz/stream_file.hpp"

namespace sqz {

enum class StreamFormat { kBinary, kCsv };

struct SimulateOptions {
  std::filesystem::path config_path;  // empty: documented defaults
  std::filesystem::path out_path;
  std::optional<std::uint64_t> seed_override;
  StreamFormat format = StreamFormat::kBinary;
  int n_threads = 1;
};

struct SimulateResult {
  RunConfig config;  // fully resolved (defaults applied, seed override in)
  std::filesystem::path out_path;
  double snl_raw = 0.0;
  std::vector<std::string> warnings;
};

// dopa_model -> gaussian state -> homodyne sampling -> stream file. The
// simulated state carries the model's effective gains as its quadrature
// variances (deamplified axis at phi). Deterministic: a fixed config yields
// a byte-identical file.
SimulateResult cmd_simulate(const SimulateOptions& options);

struct AnalyzeOptions {
  std::filesystem::path stream_path;
  std::filesystem::path out_dir = ".";
  std::optional<double> snl_raw_override;      // required for CSV streams
  std::optional<std::uint64_t> block_size_override;
  bool elec_correction = false;  // subtract the configured v_elec from variances
  std::optional<GainPair> gains;  // also report inference from these gains
  std::size_t hist_bins = 61;
  double hist_halfwidth_snu = 6.0;
};

struct AnalyzeResult {
  SqueezingReport report;
  BlockVarianceResult trace;
  double snl_raw = 0.0;
  std::filesystem::path trace_csv;
  std::filesystem::path hist_min_csv;
  std::filesystem::path hist_max_csv;
  std::filesystem::path report_path;
  std::string report_text;
};

// Stream file -> variance trace, extremal squeezing report, and histogram
// CSVs for the extremal blocks.
AnalyzeResult cmd_analyze(const AnalyzeOptions& options);

struct FitGainOptions {
  std::filesystem::path csv_path;  // p_pump_mw,g_amp,g_deamp[,weight]
  bool fit_mu = false;
  std::optional<double> max_pump_mw;
  std::filesystem::path model_csv_path;  // empty: skip the model curve
  std::size_t model_points = 100;
};

struct FitGainReport {
  GainFitResult fit;
  std::vector<std::string> warnings;
};

// Fits the gain curve; throws NonConvergenceError if the fitter gives up.
FitGainReport cmd_fit_gain(const FitGainOptions& options);

struct InferOptions {
  double g_amp = 1.0;
  double g_deamp = 1.0;
  double eta_t = 0.92;
  double eta_h = 0.935;
  double eta_d = 0.945;
  double sigma_g_amp = 0.0;
  double sigma_g_deamp = 0.0;
  double sigma_eta = 0.0;
  bool plane_wave_check = false;
};

struct InferReport {
  double eta = 0.0;
  DbPair levels;
  DbPairSigma sigmas;
  std::vector<std::string> warnings;
};

InferReport cmd_infer(const InferOptions& options);

struct CalibrateOptions {
  std::vector<std::filesystem::path> stream_paths;  // one per LO level
  std::optional<std::filesystem::path> pairs_csv;   // n_lo,variance_raw
  bool no_intercept = false;        // single-level mode
  double assumed_v_elec_raw = 0.0;  // electronic variance for --no-intercept
  std::optional<double> n_lo_ref;
};

struct CalibrateReport {
  ShotNoiseCalibration cal;
  double ratio_db = 0.0;  // 10 log10(snl_raw / v_elec_raw)
  bool ratio_available = false;
  bool ratio_pass_11db = false;
  std::size_t n_levels = 0;
  std::vector<std::string> warnings;
};

CalibrateReport cmd_calibrate(const CalibrateOptions& options);

// Text renderings used by both the CLI and the report files.
std::string render_report(const AnalyzeResult& result);
std::string render_report(const FitGainReport& report, const FitGainOptions& options);
std::string render_report(const InferReport& report);
std::string render_report(const CalibrateReport& report);

}  // namespace sqz

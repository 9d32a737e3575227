// Command-line front end for the pulsed squeezed-light simulator and its
// analysis pipeline. Exit codes: 0 success, 2 usage error, 3 data/format
// error, 4 numerical failure.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sqz/commands.hpp"
#include "sqz/errors.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct GlobalFlags {
  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string format = "bin";
  bool verbose = false;
  int threads = 1;
};

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pulsed squeezed-light homodyne simulator and estimator"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config, "run configuration file");
  app.add_option("--seed", flags.seed, "override the configured RNG seed")
      ->each([&](const std::string&) { flags.seed_set = true; });
  app.add_option("--out-dir", flags.out_dir, "directory for analysis outputs");
  app.add_option("--format", flags.format, "stream output format")
      ->check(CLI::IsMember({"bin", "csv"}));
  app.add_flag("--verbose", flags.verbose, "chatty progress output");
  app.add_option("--threads", flags.threads, "worker threads for generation")
      ->check(CLI::PositiveNumber);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "generate a pulse stream");
  simulate->fallthrough();
  std::string sim_out = "stream.sqzp";
  simulate->add_option("--out", sim_out, "output stream path");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "variance trace and squeezing report");
  analyze->fallthrough();
  std::string ana_stream;
  analyze->add_option("stream", ana_stream, "pulse stream file")->required();
  double ana_snl = 0.0;
  bool ana_snl_set = false;
  analyze->add_option("--snl", ana_snl, "shot-noise calibration, raw variance per SNU")
      ->each([&](const std::string&) { ana_snl_set = true; });
  std::uint64_t ana_block = 0;
  analyze->add_option("--block-size", ana_block, "override the block size");
  bool ana_elec = false;
  analyze->add_flag("--elec-correction", ana_elec,
                    "subtract the configured electronic noise");
  double ana_g_amp = 0.0, ana_g_deamp = 0.0;
  auto* opt_g_amp = analyze->add_option("--g-amp", ana_g_amp,
                                        "classical amplification gain to infer from");
  auto* opt_g_deamp = analyze->add_option("--g-deamp", ana_g_deamp,
                                          "classical deamplification gain");
  opt_g_amp->needs(opt_g_deamp);
  opt_g_deamp->needs(opt_g_amp);

  // fit-gain
  auto* fit_gain = app.add_subcommand("fit-gain", "fit the parametric gain curve");
  fit_gain->fallthrough();
  std::string fit_csv;
  fit_gain->add_option("csv", fit_csv, "gain data CSV (p_pump_mw,g_amp,g_deamp[,weight])")
      ->required();
  double fit_max_pump = 0.0;
  bool fit_max_pump_set = false;
  fit_gain->add_option("--max-pump-mw", fit_max_pump,
                       "fit only points with pump power <= bound")
      ->each([&](const std::string&) { fit_max_pump_set = true; });
  bool fit_mu = false;
  fit_gain->add_flag("--fit-mu", fit_mu, "also float the diffraction floor mu");
  std::string fit_model_csv = "gain_model.csv";
  fit_gain->add_option("--model-csv", fit_model_csv,
                       "write the fitted model curve here");

  // infer
  auto* infer = app.add_subcommand("infer", "squeezing inferred from classical gains");
  infer->fallthrough();
  sqz::InferOptions infer_options;
  infer->add_option("--g-amp", infer_options.g_amp, "amplification gain")->required();
  infer->add_option("--g-deamp", infer_options.g_deamp, "deamplification gain")
      ->required();
  infer->add_option("--eta-t", infer_options.eta_t, "optical transmission");
  infer->add_option("--eta-h", infer_options.eta_h, "mode-match visibility");
  infer->add_option("--eta-d", infer_options.eta_d, "photodiode efficiency");
  infer->add_option("--sigma-g-amp", infer_options.sigma_g_amp,
                    "uncertainty on the amplification gain");
  infer->add_option("--sigma-g-deamp", infer_options.sigma_g_deamp,
                    "uncertainty on the deamplification gain");
  infer->add_option("--sigma-eta", infer_options.sigma_eta,
                    "uncertainty on the overall efficiency");
  infer->add_flag("--plane-wave-check", infer_options.plane_wave_check,
                  "warn about gains no plane-wave model can produce");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "shot-noise calibration");
  calibrate->fallthrough();
  std::vector<std::string> cal_streams;
  calibrate->add_option("streams", cal_streams, "vacuum stream files, one per LO level");
  std::string cal_pairs;
  calibrate->add_option("--pairs", cal_pairs, "CSV of n_lo,variance_raw pairs");
  bool cal_no_intercept = false;
  calibrate->add_flag("--no-intercept", cal_no_intercept,
                      "single-level mode: no electronic-noise intercept");
  double cal_elec_raw = 0.0;
  calibrate->add_option("--elec-raw", cal_elec_raw,
                        "assumed electronic variance (raw) for --no-intercept");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message; 0 means --help
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      sqz::SimulateOptions options;
      options.config_path = flags.config;
      options.out_path = sim_out;
      if (flags.seed_set) options.seed_override = flags.seed;
      options.format = (flags.format == "csv") ? sqz::StreamFormat::kCsv
                                               : sqz::StreamFormat::kBinary;
      options.n_threads = flags.threads;
      const auto result = sqz::cmd_simulate(options);
      print_warnings(result.warnings);
      if (flags.verbose)
        std::cerr << "wrote " << result.config.scan.n_pulses << " pulses to "
                  << result.out_path.string() << "\n";
    } else if (analyze->parsed()) {
      sqz::AnalyzeOptions options;
      options.stream_path = ana_stream;
      options.out_dir = flags.out_dir;
      if (ana_snl_set) options.snl_raw_override = ana_snl;
      if (ana_block != 0) options.block_size_override = ana_block;
      options.elec_correction = ana_elec;
      if (opt_g_amp->count() > 0)
        options.gains = sqz::GainPair{ana_g_amp, ana_g_deamp};
      const auto result = sqz::cmd_analyze(options);
      std::cout << result.report_text;
    } else if (fit_gain->parsed()) {
      sqz::FitGainOptions options;
      options.csv_path = fit_csv;
      options.fit_mu = fit_mu;
      if (fit_max_pump_set) options.max_pump_mw = fit_max_pump;
      if (!fit_model_csv.empty())
        options.model_csv_path =
            std::filesystem::path(flags.out_dir) / fit_model_csv;
      const auto report = sqz::cmd_fit_gain(options);
      print_warnings(report.warnings);
      std::cout << sqz::render_report(report, options);
    } else if (infer->parsed()) {
      const auto report = sqz::cmd_infer(infer_options);
      std::cout << sqz::render_report(report);
    } else if (calibrate->parsed()) {
      sqz::CalibrateOptions options;
      for (const auto& s : cal_streams) options.stream_paths.emplace_back(s);
      if (!cal_pairs.empty()) options.pairs_csv = cal_pairs;
      options.no_intercept = cal_no_intercept;
      options.assumed_v_elec_raw = cal_elec_raw;
      const auto report = sqz::cmd_calibrate(options);
      print_warnings(report.warnings);
      std::cout << sqz::render_report(report);
    }
  } catch (const sqz::NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const sqz::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const sqz::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}

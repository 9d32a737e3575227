#include "sqz/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sqz/errors.hpp"
#include "sqz/rng.hpp"

namespace sqz {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_field(const std::string& token, const std::string& where) {
  double out = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end)
    throw FormatError(where + ": expected a number, got '" + token + "'");
  return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw FormatError("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string bool_text(bool v) { return v ? "true" : "false"; }

void append_histogram_csv(std::string& out, const Histogram& h) {
  out += "edge,count,model\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out += format_double(h.edges[i]);
    out += ',';
    out += std::to_string(h.counts[i]);
    out += ',';
    out += format_double(h.model[i]);
    out += '\n';
  }
  // closing edge row so all n+1 edges are recoverable
  out += format_double(h.edges.back());
  out += ",0,0\n";
}

}  // namespace

SimulateResult cmd_simulate(const SimulateOptions& options) {
  SimulateResult result;
  result.config = options.config_path.empty()
                      ? default_config()
                      : load_config(options.config_path.string());
  if (options.seed_override) result.config.scan.seed = *options.seed_override;
  if (options.out_path.empty()) throw ConfigError("simulate: no output path");

  const RunConfig& cfg = result.config;
  validate(cfg.dopa);
  validate(cfg.detection);
  validate(cfg.scan);
  if (cfg.detection.n_lo > kLoLinearityCeiling)
    result.warnings.push_back(
        "LO level " + format_double(cfg.detection.n_lo) +
        " photons/pulse exceeds the verified linearity ceiling " +
        format_double(kLoLinearityCeiling));

  const GainPair gains = effective_gains(cfg.dopa);
  const GaussianState state =
      from_quadrature_variances(gains.g_deamp, gains.g_amp, cfg.dopa.phi);
  const auto records =
      sample_pulse_train(state, cfg.detection, cfg.scan, options.n_threads);

  result.snl_raw = cfg.detection.gain_raw * cfg.detection.gain_raw;
  result.out_path = options.out_path;
  if (options.format == StreamFormat::kBinary) {
    StreamHeader header;
    header.config = cfg;
    header.rng_algorithm = std::string(rng::kAlgorithmId);
    header.snl_raw = result.snl_raw;
    write_stream(options.out_path, header, records);
  } else {
    write_stream_csv(options.out_path, records);
  }
  return result;
}

AnalyzeResult cmd_analyze(const AnalyzeOptions& options) {
  AnalyzeResult result;
  std::vector<PulseRecord> records;
  std::optional<StreamHeader> header;

  if (is_stream_file(options.stream_path)) {
    StreamFile file = read_stream(options.stream_path);
    header = std::move(file.header);
    records = std::move(file.records);
  } else {
    records = read_stream_csv(options.stream_path);
  }

  if (options.snl_raw_override) {
    result.snl_raw = *options.snl_raw_override;
  } else if (header && header->snl_raw) {
    result.snl_raw = *header->snl_raw;
  } else {
    throw FormatError(
        "missing calibration: the stream carries no snl_raw and none was "
        "supplied (--snl)");
  }

  std::uint64_t block_size = options.block_size_override.value_or(
      header ? header->config.scan.block_size : 2500);
  result.trace = block_variances(records, block_size, result.snl_raw);

  std::vector<VarianceTrace> blocks = result.trace.blocks;
  double v_elec = 0.0;
  if (options.elec_correction) {
    if (!header)
      throw ConfigError(
          "electronic-noise correction needs the stream header (binary format)");
    v_elec = header->config.detection.v_elec_snu;
    for (auto& blk : blocks) {
      blk.variance_snu -= v_elec;
      if (!(blk.variance_snu > 0.0)) {
        blk.variance_snu = 0.0;
        blk.degenerate = true;
        blk.stderr_snu = 0.0;
      }
    }
  }

  result.report = extremal_variances(blocks);
  result.report.elec_correction = options.elec_correction;
  if (header)
    result.report.eta_used = overall_efficiency(header->config.detection);
  if (options.gains) {
    if (!header)
      throw ConfigError("gain inference needs the stream header for eta");
    result.report.inferred_from_gains = infer_squeezing_from_gains(
        options.gains->g_amp, options.gains->g_deamp, result.report.eta_used);
  }

  std::filesystem::create_directories(options.out_dir);

  std::string trace_csv = "block_index,phase_mid,variance_snu,stderr_snu\n";
  for (const auto& blk : blocks) {
    trace_csv += std::to_string(blk.block_index);
    trace_csv += ',';
    trace_csv += format_double(blk.phase_mid);
    trace_csv += ',';
    trace_csv += format_double(blk.variance_snu);
    trace_csv += ',';
    trace_csv += format_double(blk.stderr_snu);
    trace_csv += '\n';
  }
  result.trace_csv = options.out_dir / "trace.csv";
  write_text_atomic(result.trace_csv, trace_csv);

  // Histograms of the extremal blocks, in SNU amplitude units.
  const double amp_scale = 1.0 / std::sqrt(result.snl_raw);
  auto block_samples = [&](std::size_t block_index) {
    std::vector<double> samples(block_size);
    const std::size_t base = block_index * block_size;
    for (std::size_t i = 0; i < block_size; ++i)
      samples[i] = records[base + i].value * amp_scale;
    return samples;
  };
  const double hw = options.hist_halfwidth_snu;
  const Histogram hist_min = histogram(block_samples(result.report.raw_min_block),
                                       options.hist_bins, -hw, hw);
  const Histogram hist_max = histogram(block_samples(result.report.raw_max_block),
                                       options.hist_bins, -hw, hw);
  std::string hist_text;
  append_histogram_csv(hist_text, hist_min);
  result.hist_min_csv = options.out_dir / "hist_min.csv";
  write_text_atomic(result.hist_min_csv, hist_text);
  hist_text.clear();
  append_histogram_csv(hist_text, hist_max);
  result.hist_max_csv = options.out_dir / "hist_max.csv";
  write_text_atomic(result.hist_max_csv, hist_text);

  result.report_text = render_report(result);
  result.report_path = options.out_dir / "report.txt";
  write_text_atomic(result.report_path, result.report_text);
  return result;
}

std::string render_report(const AnalyzeResult& result) {
  const SqueezingReport& rep = result.report;
  std::ostringstream out;
  out << "[report]\n";
  out << "method = " << rep.method << "\n";
  out << "v_min_db = " << format_double(rep.v_min_db) << "\n";
  out << "v_min_err_db = " << format_double(rep.err_min_db) << "\n";
  out << "v_max_db = " << format_double(rep.v_max_db) << "\n";
  out << "v_max_err_db = " << format_double(rep.err_max_db) << "\n";
  out << "raw_min_db = " << format_double(rep.raw_min_db) << "\n";
  out << "raw_min_err_db = " << format_double(rep.raw_min_err_db) << "\n";
  out << "raw_max_db = " << format_double(rep.raw_max_db) << "\n";
  out << "raw_max_err_db = " << format_double(rep.raw_max_err_db) << "\n";
  out << "raw_min_block = " << rep.raw_min_block << "\n";
  out << "raw_max_block = " << rep.raw_max_block << "\n";
  out << "fit_available = " << bool_text(rep.fit_available) << "\n";
  if (rep.fit_available) {
    out << "fit_mean_snu = " << format_double(rep.fit_mean_snu) << "\n";
    out << "fit_amp_snu = " << format_double(rep.fit_amp_snu) << "\n";
    out << "fit_phase_rad = " << format_double(rep.fit_phase_rad) << "\n";
    out << "fit_min_snu = " << format_double(rep.fit_min_snu) << "\n";
    out << "fit_max_snu = " << format_double(rep.fit_max_snu) << "\n";
  }
  if (!rep.coverage_note.empty())
    out << "coverage_note = " << rep.coverage_note << "\n";
  out << "n_blocks = " << rep.n_blocks << "\n";
  out << "block_size = " << result.trace.block_size << "\n";
  out << "dropped_tail = " << result.trace.dropped_tail << "\n";
  out << "snl_raw = " << format_double(result.snl_raw) << "\n";
  out << "eta_used = " << format_double(rep.eta_used) << "\n";
  out << "elec_correction = " << bool_text(rep.elec_correction) << "\n";
  if (rep.inferred_from_gains) {
    out << "\n[inferred]\n";
    out << "squeezed_db = " << format_double(rep.inferred_from_gains->squeezed_db)
        << "\n";
    out << "antisqueezed_db = "
        << format_double(rep.inferred_from_gains->antisqueezed_db) << "\n";
  }
  return out.str();
}

FitGainReport cmd_fit_gain(const FitGainOptions& options) {
  std::ifstream in(options.csv_path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + options.csv_path.string() + "'");
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("'" + options.csv_path.string() + "': empty file");
  bool has_weight = false;
  if (line == "p_pump_mw,g_amp,g_deamp") {
    has_weight = false;
  } else if (line == "p_pump_mw,g_amp,g_deamp,weight") {
    has_weight = true;
  } else {
    throw FormatError("'" + options.csv_path.string() +
                      "': expected header 'p_pump_mw,g_amp,g_deamp[,weight]'");
  }

  std::vector<GainPoint> points;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where =
        "'" + options.csv_path.string() + "' line " + std::to_string(line_no);
    const auto fields = split_csv_line(line);
    if (fields.size() != (has_weight ? 4u : 3u))
      throw FormatError(where + ": expected " +
                        std::to_string(has_weight ? 4 : 3) + " fields, got " +
                        std::to_string(fields.size()));
    GainPoint pt;
    pt.p_pump_mw = parse_field(fields[0], where);
    pt.g_amp = parse_field(fields[1], where);
    pt.g_deamp = parse_field(fields[2], where);
    if (has_weight) pt.weight = parse_field(fields[3], where);
    points.push_back(pt);
  }

  FitGainReport report;
  report.warnings = gain_point_warnings(points);
  GainFitOptions fit_options;
  fit_options.fit_mu = options.fit_mu;
  fit_options.max_pump_mw = options.max_pump_mw;
  report.fit = fit_gain_curve(points, fit_options);
  if (!report.fit.converged)
    throw NonConvergenceError("gain fit did not converge within " +
                              std::to_string(fit_options.max_iterations) +
                              " iterations");

  if (!options.model_csv_path.empty()) {
    double p_max = 0.0;
    for (const auto& pt : points) p_max = std::max(p_max, pt.p_pump_mw);
    if (p_max <= 0.0) p_max = 1.0;
    std::string csv = "p_pump_mw,g_amp_model,g_deamp_model\n";
    for (std::size_t i = 0; i < options.model_points; ++i) {
      const double p = p_max * static_cast<double>(i + 1) /
                       static_cast<double>(options.model_points);
      DopaModel model{report.fit.kappa, p, 0.0, report.fit.mu_gid};
      const GainPair g = effective_gains(model);
      csv += format_double(p);
      csv += ',';
      csv += format_double(g.g_amp);
      csv += ',';
      csv += format_double(g.g_deamp);
      csv += '\n';
    }
    write_text_atomic(options.model_csv_path, csv);
  }
  return report;
}

std::string render_report(const FitGainReport& report, const FitGainOptions& options) {
  std::ostringstream out;
  out << "[gain_fit]\n";
  out << "kappa_per_sqrt_mw = " << format_double(report.fit.kappa) << "\n";
  if (options.fit_mu)
    out << "mu_gid = " << format_double(report.fit.mu_gid) << "\n";
  out << "residual = " << format_double(report.fit.residual) << "\n";
  out << "iterations = " << report.fit.iterations << "\n";
  out << "points_used = " << report.fit.points_used << "\n";
  out << "points_filtered = " << report.fit.points_filtered << "\n";
  return out.str();
}

InferReport cmd_infer(const InferOptions& options) {
  DetectionChain chain;
  chain.eta_t = options.eta_t;
  chain.eta_h = options.eta_h;
  chain.eta_d = options.eta_d;

  InferReport report;
  report.eta = overall_efficiency(chain);
  report.levels =
      infer_squeezing_from_gains(options.g_amp, options.g_deamp, report.eta);
  report.sigmas = propagate_inference_uncertainty(
      options.g_amp, options.sigma_g_amp, options.g_deamp,
      options.sigma_g_deamp, report.eta, options.sigma_eta);
  if (options.plane_wave_check) {
    if (options.g_deamp > 1.0)
      report.warnings.push_back("deamplification gain exceeds unity");
    if (options.g_amp < 1.0)
      report.warnings.push_back("amplification gain below unity");
    if (options.g_amp * options.g_deamp < 1.0 - 1e-12)
      report.warnings.push_back(
          "gain product below unity: smaller than any plane-wave pair");
  }
  return report;
}

std::string render_report(const InferReport& report) {
  std::ostringstream out;
  out << "[inference]\n";
  out << "eta = " << format_double(report.eta) << "\n";
  out << "squeezed_db = " << format_double(report.levels.squeezed_db) << "\n";
  out << "squeezed_err_db = " << format_double(report.sigmas.sigma_squeezed_db)
      << "\n";
  out << "antisqueezed_db = " << format_double(report.levels.antisqueezed_db)
      << "\n";
  out << "antisqueezed_err_db = "
      << format_double(report.sigmas.sigma_antisqueezed_db) << "\n";
  for (const auto& w : report.warnings) out << "warning = " << w << "\n";
  return out.str();
}

CalibrateReport cmd_calibrate(const CalibrateOptions& options) {
  CalibrateReport report;
  std::vector<ShotNoisePoint> points;

  if (options.pairs_csv) {
    std::ifstream in(*options.pairs_csv, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + options.pairs_csv->string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "n_lo,variance_raw")
      throw FormatError("'" + options.pairs_csv->string() +
                        "': expected header 'n_lo,variance_raw'");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto where = "'" + options.pairs_csv->string() + "' line " +
                         std::to_string(line_no);
      const auto fields = split_csv_line(line);
      if (fields.size() != 2)
        throw FormatError(where + ": expected 2 fields");
      points.push_back(ShotNoisePoint{parse_field(fields[0], where),
                                      parse_field(fields[1], where)});
    }
  } else {
    for (const auto& path : options.stream_paths) {
      const StreamFile file = read_stream(path);
      if (file.records.size() < 2)
        throw FormatError("'" + path.string() +
                          "': need at least 2 records to estimate a variance");
      double mean = 0.0;
      for (const auto& rec : file.records) mean += rec.value;
      mean /= static_cast<double>(file.records.size());
      double ss = 0.0;
      for (const auto& rec : file.records) {
        const double d = rec.value - mean;
        ss += d * d;
      }
      const double var = ss / static_cast<double>(file.records.size() - 1);
      points.push_back(ShotNoisePoint{file.header.config.detection.n_lo, var});
    }
  }

  report.n_levels = points.size();
  for (const auto& pt : points)
    if (pt.n_lo > kLoLinearityCeiling)
      report.warnings.push_back(
          "LO level " + format_double(pt.n_lo) +
          " photons/pulse exceeds the verified linearity ceiling " +
          format_double(kLoLinearityCeiling));

  if (options.no_intercept) {
    if (points.size() != 1)
      throw std::invalid_argument(
          "--no-intercept applies to exactly one LO level");
    ShotNoiseCalibration cal;
    cal.snl_raw = points[0].variance_raw - options.assumed_v_elec_raw;
    cal.v_elec_raw = options.assumed_v_elec_raw;
    cal.n_lo_ref = points[0].n_lo;
    if (!(cal.snl_raw > 0.0))
      throw std::invalid_argument("calibration produced nonpositive shot noise");
    report.cal = cal;
  } else {
    if (points.size() < 2)
      throw std::invalid_argument(
          "calibration needs at least 2 LO levels (or --no-intercept)");
    report.cal = calibrate_shot_noise(points, options.n_lo_ref);
  }

  if (report.cal.v_elec_raw > 0.0) {
    report.ratio_available = true;
    report.ratio_db = 10.0 * std::log10(report.cal.snl_raw / report.cal.v_elec_raw);
    report.ratio_pass_11db = report.ratio_db >= 11.0;
  }
  return report;
}

std::string render_report(const CalibrateReport& report) {
  std::ostringstream out;
  out << "[calibration]\n";
  out << "n_levels = " << report.n_levels << "\n";
  out << "slope = " << format_double(report.cal.slope) << "\n";
  out << "intercept = " << format_double(report.cal.intercept) << "\n";
  out << "r_squared = " << format_double(report.cal.r_squared) << "\n";
  out << "n_lo_ref = " << format_double(report.cal.n_lo_ref) << "\n";
  out << "snl_raw = " << format_double(report.cal.snl_raw) << "\n";
  out << "v_elec_raw = " << format_double(report.cal.v_elec_raw) << "\n";
  if (report.ratio_available) {
    out << "shot_to_elec_db = " << format_double(report.ratio_db) << "\n";
    out << "ratio_11db_pass = " << bool_text(report.ratio_pass_11db) << "\n";
  }
  for (const auto& w : report.warnings) out << "warning = " << w << "\n";
  return out.str();
}

}  // namespace sqz

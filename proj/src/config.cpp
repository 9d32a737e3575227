#include "sqz/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "sqz/errors.hpp"

namespace sqz {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

double parse_double(const IniEntry& e) {
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end)
    fail(e.line, "expected a decimal number for " + e.section + "." + e.key +
                     ", got '" + e.value + "'");
  return out;
}

std::uint64_t parse_count(const IniEntry& e) {
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end)
    fail(e.line, "expected an unsigned integer for " + e.section + "." + e.key +
                     ", got '" + e.value + "'");
  return out;
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  // r such that exp(2r) equals the reference amplification gain, and the
  // diffraction floor placed so the deamplification gain comes out at its
  // reference value: mu = (g_d - e^-2r) / (1 - e^-2r).
  cfg.dopa.kappa = 0.5 * std::log(kReferenceGainAmp);
  cfg.dopa.p_pump_mw = 1.0;
  cfg.dopa.phi = 0.0;
  const double plane_deamp = 1.0 / kReferenceGainAmp;
  cfg.dopa.mu_gid =
      (kReferenceGainDeamp - plane_deamp) / (1.0 - plane_deamp);
  cfg.scan.n_pulses = 1'000'000;
  cfg.scan.block_size = 2500;
  cfg.scan.phase_start_rad = 0.0;
  cfg.scan.phase_end_rad = 2.0 * std::numbers::pi;
  cfg.scan.rep_rate_hz = 790000.0;
  cfg.scan.seed = 1;
  return cfg;
}

std::vector<IniEntry> parse_ini(std::string_view text) {
  std::vector<IniEntry> entries;
  std::string section;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) fail(line_no, "empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(line_no, "expected 'key = value', got '" + std::string(line) + "'");
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    if (key.empty()) fail(line_no, "empty key");
    if (section.empty()) fail(line_no, "key '" + key + "' outside any section");
    if (!seen.insert({section, key}).second)
      fail(line_no, "duplicate key " + section + "." + key);
    entries.push_back(IniEntry{section, key, value, line_no});
  }
  return entries;
}

RunConfig config_from_entries(std::span<const IniEntry> entries,
                              std::span<const std::string_view> skip_sections) {
  RunConfig cfg = default_config();
  for (const auto& e : entries) {
    if (std::find(skip_sections.begin(), skip_sections.end(), e.section) !=
        skip_sections.end())
      continue;
    if (e.section == "dopa") {
      if (e.key == "kappa_per_sqrt_mw") cfg.dopa.kappa = parse_double(e);
      else if (e.key == "p_pump_mw") cfg.dopa.p_pump_mw = parse_double(e);
      else if (e.key == "phi_rad") cfg.dopa.phi = parse_double(e);
      else if (e.key == "mu_gid") cfg.dopa.mu_gid = parse_double(e);
      else fail(e.line, "unknown key dopa." + e.key);
    } else if (e.section == "detection") {
      if (e.key == "eta_t") cfg.detection.eta_t = parse_double(e);
      else if (e.key == "eta_h") cfg.detection.eta_h = parse_double(e);
      else if (e.key == "eta_d") cfg.detection.eta_d = parse_double(e);
      else if (e.key == "v_elec_snu") cfg.detection.v_elec_snu = parse_double(e);
      else if (e.key == "n_lo_photons") cfg.detection.n_lo = parse_double(e);
      else if (e.key == "gain_raw") cfg.detection.gain_raw = parse_double(e);
      else fail(e.line, "unknown key detection." + e.key);
    } else if (e.section == "scan") {
      if (e.key == "n_pulses") cfg.scan.n_pulses = parse_count(e);
      else if (e.key == "block_size") cfg.scan.block_size = parse_count(e);
      else if (e.key == "phase_start_rad") cfg.scan.phase_start_rad = parse_double(e);
      else if (e.key == "phase_end_rad") cfg.scan.phase_end_rad = parse_double(e);
      else if (e.key == "rep_rate_hz") cfg.scan.rep_rate_hz = parse_double(e);
      else if (e.key == "seed") cfg.scan.seed = parse_count(e);
      else fail(e.line, "unknown key scan." + e.key);
    } else if (e.section == "meta") {
      if (e.key == "wavelength_nm") cfg.meta.wavelength_nm = parse_double(e);
      else if (e.key == "pulse_fwhm_fs") cfg.meta.pulse_fwhm_fs = parse_double(e);
      else if (e.key == "crystal_len_um") cfg.meta.crystal_len_um = parse_double(e);
      else if (e.key == "crystal_temp_c") cfg.meta.crystal_temp_c = parse_double(e);
      else if (e.key == "waist_um") cfg.meta.waist_um = parse_double(e);
      else fail(e.line, "unknown key meta." + e.key);
    } else if (e.section == "output") {
      if (e.key == "out_dir") cfg.out_dir = e.value;
      else fail(e.line, "unknown key output." + e.key);
    } else {
      fail(e.line, "unknown section [" + e.section + "]");
    }
  }
  return cfg;
}

RunConfig parse_config(std::string_view text) {
  const auto entries = parse_ini(text);
  return config_from_entries(entries);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string echo_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[dopa]\n";
  out << "kappa_per_sqrt_mw = " << format_double(cfg.dopa.kappa) << "\n";
  out << "p_pump_mw = " << format_double(cfg.dopa.p_pump_mw) << "\n";
  out << "phi_rad = " << format_double(cfg.dopa.phi) << "\n";
  out << "mu_gid = " << format_double(cfg.dopa.mu_gid) << "\n";
  out << "\n[detection]\n";
  out << "eta_t = " << format_double(cfg.detection.eta_t) << "\n";
  out << "eta_h = " << format_double(cfg.detection.eta_h) << "\n";
  out << "eta_d = " << format_double(cfg.detection.eta_d) << "\n";
  out << "v_elec_snu = " << format_double(cfg.detection.v_elec_snu) << "\n";
  out << "n_lo_photons = " << format_double(cfg.detection.n_lo) << "\n";
  out << "gain_raw = " << format_double(cfg.detection.gain_raw) << "\n";
  out << "\n[scan]\n";
  out << "n_pulses = " << cfg.scan.n_pulses << "\n";
  out << "block_size = " << cfg.scan.block_size << "\n";
  out << "phase_start_rad = " << format_double(cfg.scan.phase_start_rad) << "\n";
  out << "phase_end_rad = " << format_double(cfg.scan.phase_end_rad) << "\n";
  out << "rep_rate_hz = " << format_double(cfg.scan.rep_rate_hz) << "\n";
  out << "seed = " << cfg.scan.seed << "\n";
  out << "\n[meta]\n";
  out << "wavelength_nm = " << format_double(cfg.meta.wavelength_nm) << "\n";
  out << "pulse_fwhm_fs = " << format_double(cfg.meta.pulse_fwhm_fs) << "\n";
  out << "crystal_len_um = " << format_double(cfg.meta.crystal_len_um) << "\n";
  out << "crystal_temp_c = " << format_double(cfg.meta.crystal_temp_c) << "\n";
  out << "waist_um = " << format_double(cfg.meta.waist_um) << "\n";
  out << "\n[output]\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  return out.str();
}

}  // namespace sqz

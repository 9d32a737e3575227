#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqz/dopa.hpp"
#include "sqz/homodyne.hpp"

namespace sqz {

// Full run description. Every numeric key carries its unit in the name;
// unknown keys are rejected; missing keys take the documented defaults
// (the reference squeezing run the toolkit reproduces out of the box).
struct RunConfig {
  DopaModel dopa;
  DetectionChain detection;
  ScanConfig scan;
  MetaConfig meta;
  std::string out_dir = ".";

  bool operator==(const RunConfig&) const = default;
};

// Defaults: DOPA set to the reference operating point with measured gain
// pair (g_amp, g_deamp) = (2.51, 0.53), detection chain (0.92, 0.935,
// 0.945), electronic noise 0.0073 SNU, one-million-pulse 2*pi scan in
// blocks of 2500.
RunConfig default_config();

// Value equal to exp(2r) for the default DOPA model.
inline constexpr double kReferenceGainAmp = 2.51;
// Deamplification gain of the default DOPA model (sets mu_gid).
inline constexpr double kReferenceGainDeamp = 0.53;

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// Minimal strict INI reader: [section] headers, key = value lines,
// '#' comments, blank lines. Throws ConfigError with a line number on
// malformed input or duplicate keys.
std::vector<IniEntry> parse_ini(std::string_view text);

// Builds a RunConfig from parsed entries. Unknown sections or keys raise
// ConfigError naming the offender; sections listed in `skip_sections` are
// ignored (the stream-file reader uses this for its own header section).
RunConfig config_from_entries(std::span<const IniEntry> entries,
                              std::span<const std::string_view> skip_sections = {});

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

// Canonical text form: fixed section and key order, doubles as
// round-trippable 17-significant-digit decimals. parse_config of the echo
// reproduces the RunConfig exactly; every output header embeds this echo.
std::string echo_config(const RunConfig& config);

// 17-significant-digit decimal, the formatting used everywhere a double
// crosses a text boundary.
std::string format_double(double value);

}  // namespace sqz

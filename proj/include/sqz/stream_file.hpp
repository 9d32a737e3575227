#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqz/config.hpp"
#include "sqz/homodyne.hpp"

namespace sqz {

// Pulse-stream file, binary layout (all little-endian):
//   bytes 0..3   magic "SQZP"
//   bytes 4..5   format version, u16 (currently 1)
//   bytes 6..9   header length in bytes, u32
//   header       UTF-8 structured text: the canonical RunConfig echo plus a
//                [stream] section carrying the RNG identifier and, when
//                calibrated, snl_raw
//   records      n_pulses x (phase f64, value f64); index is positional
// The format carries no timestamps, so a fixed config yields a
// byte-identical file.
inline constexpr char kStreamMagic[4] = {'S', 'Q', 'Z', 'P'};
inline constexpr std::uint16_t kStreamVersion = 1;

struct StreamHeader {
  RunConfig config;
  std::string rng_algorithm;
  std::optional<double> snl_raw;
};

struct StreamFile {
  StreamHeader header;
  std::vector<PulseRecord> records;
};

// Writes atomically (temp file then rename). The record count must equal
// config.scan.n_pulses.
void write_stream(const std::filesystem::path& path, const StreamHeader& header,
                  std::span<const PulseRecord> records);

// Throws FormatError on bad magic, unsupported version, or truncation
// (reporting the byte offset where the file ended short).
StreamFile read_stream(const std::filesystem::path& path);

// Text twin of the stream: "index,phase,value" CSV with
// 17-significant-digit numbers. Carries no header metadata.
void write_stream_csv(const std::filesystem::path& path,
                      std::span<const PulseRecord> records);
std::vector<PulseRecord> read_stream_csv(const std::filesystem::path& path);

// True when the file starts with the stream magic bytes.
bool is_stream_file(const std::filesystem::path& path);

}  // namespace sqz

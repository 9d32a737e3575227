#include "sqz/stream_file.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sqz/errors.hpp"
#include "sqz/rng.hpp"

namespace sqz {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8)
    out.push_back(static_cast<char>((v >> shift) & 0xff));
}

void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int shift = 0; shift < 64; shift += 8)
    out.push_back(static_cast<char>((bits >> shift) & 0xff));
}

std::uint64_t get_uint(const std::string& data, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[offset + i]))
         << (8 * i);
  return v;
}

double get_f64(const std::string& data, std::size_t offset) {
  return std::bit_cast<double>(get_uint(data, offset, 8));
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_atomic(const std::filesystem::path& path, const std::string& data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + tmp.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw FormatError("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

double parse_strict_double(const std::string& token, const std::string& context) {
  double out = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end)
    throw FormatError(context + ": expected a number, got '" + token + "'");
  return out;
}

}  // namespace

void write_stream(const std::filesystem::path& path, const StreamHeader& header,
                  std::span<const PulseRecord> records) {
  if (records.size() != header.config.scan.n_pulses)
    throw FormatError("record count " + std::to_string(records.size()) +
                      " does not match configured n_pulses " +
                      std::to_string(header.config.scan.n_pulses));

  std::string header_text = echo_config(header.config);
  header_text += "\n[stream]\nrng_algorithm = ";
  header_text += header.rng_algorithm;
  header_text += "\n";
  if (header.snl_raw) {
    header_text += "snl_raw = ";
    header_text += format_double(*header.snl_raw);
    header_text += "\n";
  }

  std::string data;
  data.reserve(10 + header_text.size() + records.size() * 16);
  data.append(kStreamMagic, 4);
  put_u16(data, kStreamVersion);
  put_u32(data, static_cast<std::uint32_t>(header_text.size()));
  data += header_text;
  for (const auto& rec : records) {
    put_f64(data, rec.lo_phase);
    put_f64(data, rec.value);
  }
  write_atomic(path, data);
}

StreamFile read_stream(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  if (data.size() < 10)
    throw FormatError("'" + path.string() + "': truncated at byte " +
                      std::to_string(data.size()) + " (need 10 for the preamble)");
  if (std::memcmp(data.data(), kStreamMagic, 4) != 0)
    throw FormatError("'" + path.string() + "': bad magic bytes '" +
                      data.substr(0, 4) + "', expected 'SQZP'");
  const auto version = static_cast<std::uint16_t>(get_uint(data, 4, 2));
  if (version != kStreamVersion)
    throw FormatError("'" + path.string() + "': unsupported format version " +
                      std::to_string(version));
  const auto header_len = static_cast<std::uint32_t>(get_uint(data, 6, 4));
  if (data.size() < 10 + static_cast<std::size_t>(header_len))
    throw FormatError("'" + path.string() + "': truncated at byte " +
                      std::to_string(data.size()) + " (header runs to byte " +
                      std::to_string(10 + header_len) + ")");

  StreamFile file;
  const std::string header_text = data.substr(10, header_len);
  const auto entries = parse_ini(header_text);
  for (const auto& e : entries) {
    if (e.section != "stream") continue;
    if (e.key == "rng_algorithm") file.header.rng_algorithm = e.value;
    else if (e.key == "snl_raw")
      file.header.snl_raw = parse_strict_double(e.value, "header snl_raw");
    else
      throw FormatError("'" + path.string() + "': unknown header key stream." +
                        e.key);
  }
  static constexpr std::string_view kSkip[] = {"stream"};
  file.header.config = config_from_entries(entries, kSkip);

  const std::uint64_t n = file.header.config.scan.n_pulses;
  const std::size_t records_at = 10 + header_len;
  const std::size_t expected = records_at + n * 16;
  if (data.size() < expected)
    throw FormatError("'" + path.string() + "': truncated at byte " +
                      std::to_string(data.size()) + " (expected " +
                      std::to_string(expected) + " bytes for " +
                      std::to_string(n) + " records)");
  if (data.size() > expected)
    throw FormatError("'" + path.string() + "': " +
                      std::to_string(data.size() - expected) +
                      " trailing bytes after the declared records");

  file.records.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::size_t at = records_at + i * 16;
    file.records[i] = PulseRecord{i, get_f64(data, at), get_f64(data, at + 8)};
  }
  return file;
}

void write_stream_csv(const std::filesystem::path& path,
                      std::span<const PulseRecord> records) {
  std::string data = "index,phase,value\n";
  for (const auto& rec : records) {
    data += std::to_string(rec.index);
    data += ',';
    data += format_double(rec.lo_phase);
    data += ',';
    data += format_double(rec.value);
    data += '\n';
  }
  write_atomic(path, data);
}

std::vector<PulseRecord> read_stream_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "index,phase,value")
    throw FormatError("'" + path.string() +
                      "': expected header 'index,phase,value'");
  std::vector<PulseRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = "'" + path.string() + "' line " + std::to_string(line_no);
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = (c1 == std::string::npos) ? std::string::npos
                                                     : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        line.find(',', c2 + 1) != std::string::npos)
      throw FormatError(where + ": expected 3 comma-separated fields");
    const std::string idx_tok = line.substr(0, c1);
    std::uint64_t index = 0;
    {
      const char* begin = idx_tok.data();
      const char* end = begin + idx_tok.size();
      const auto [ptr, ec] = std::from_chars(begin, end, index);
      if (ec != std::errc{} || ptr != end)
        throw FormatError(where + ": bad index '" + idx_tok + "'");
    }
    const double phase =
        parse_strict_double(line.substr(c1 + 1, c2 - c1 - 1), where);
    const double value = parse_strict_double(line.substr(c2 + 1), where);
    if (!records.empty() && index <= records.back().index)
      throw FormatError(where + ": pulse index not strictly increasing");
    records.push_back(PulseRecord{index, phase, value});
  }
  return records;
}

bool is_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::memcmp(magic, kStreamMagic, 4) == 0;
}

}  // namespace sqz

#ifndef FLAGSWAP_IO_HPP
#define FLAGSWAP_IO_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "flagswap/error.hpp"
#include "flagswap/topology.hpp"

namespace flagswap {

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw RuntimeFailure("failed to format double");
  return std::string(buf, end);
}

inline double parse_double(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

inline long long parse_integer(std::string_view text) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return out;
}

inline std::string join_ids(const std::vector<ClientId>& ids, char sep = ';') {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(ids[i]);
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

// Pool files: header line, then one client per row.
inline constexpr std::string_view kPoolHeader = "client_id,memcap,mdatasize,pspeed";

inline std::string pool_to_csv(std::span<const ClientSpec> pool) {
  std::string out(kPoolHeader);
  out += '\n';
  for (const ClientSpec& c : pool) {
    out += std::to_string(c.client_id);
    out += ',';
    out += format_double(c.memcap);
    out += ',';
    out += format_double(c.mdatasize);
    out += ',';
    out += format_double(c.pspeed);
    out += '\n';
  }
  return out;
}

/// Parses a pool file. Rows may come in any order; the result is sorted by
/// id and must cover 0..n-1 exactly. Blank lines and '#' comments are skipped.
inline ClientPool pool_from_csv(std::string_view text) {
  ClientPool pool;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line == kPoolHeader) continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      fields.push_back(field);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 4) {
      throw ValidationError("pool line " + std::to_string(line_no) + ": expected 4 fields, got " +
                            std::to_string(fields.size()));
    }
    try {
      ClientSpec c;
      c.client_id = static_cast<ClientId>(parse_integer(fields[0]));
      c.memcap = parse_double(fields[1]);
      c.mdatasize = parse_double(fields[2]);
      c.pspeed = parse_double(fields[3]);
      pool.push_back(c);
    } catch (const ValidationError& e) {
      throw ValidationError("pool line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::sort(pool.begin(), pool.end(),
            [](const ClientSpec& a, const ClientSpec& b) { return a.client_id < b.client_id; });
  validate_pool(pool);
  return pool;
}

inline ClientPool load_pool(const std::filesystem::path& path) { return pool_from_csv(read_file(path)); }

inline void save_pool(const std::filesystem::path& path, std::span<const ClientSpec> pool) {
  write_file(path, pool_to_csv(pool));
}

/// Hash of the canonical pool serialization, used for trace provenance.
inline std::string pool_hash(std::span<const ClientSpec> pool) { return hex64(fnv1a64(pool_to_csv(pool))); }

}  // namespace flagswap

#endif  // FLAGSWAP_IO_HPP

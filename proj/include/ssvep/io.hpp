#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ssvep/common.hpp"
#include "ssvep/edf.hpp"
#include "ssvep/protocol.hpp"

namespace ssvep {

/// One analyzed segment: the maximal FFT amplitude of segment `segment` of
/// trial `trial`, recorded under one (subject, frequency, duty) condition.
struct AmplitudeRecord {
  int subject = 0;
  double frequency_hz = 0.0;
  double duty_pct = 0.0;
  int trial = 0;
  int segment = 0;
  double amplitude = 0.0;

  friend bool operator==(const AmplitudeRecord&, const AmplitudeRecord&) = default;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(
        start, (comma == std::string::npos ? line.size() : comma) - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_real_cell(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  require(res.ec == std::errc{} && res.ptr == cell.data() + cell.size() &&
              finite(v),
          "CSV line " + std::to_string(line_no) + ": not a number: " + cell);
  return v;
}

inline long long parse_int_cell(const std::string& cell, std::size_t line_no) {
  long long v = 0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  require(res.ec == std::errc{} && res.ptr == cell.data() + cell.size(),
          "CSV line " + std::to_string(line_no) + ": not an integer: " + cell);
  return v;
}

/// Iterates the data lines of a CSV text: skips blanks, checks the header,
/// splits each remaining line and hands (cells, line_no) to the callback.
template <typename Fn>
void for_each_csv_row(std::string_view text, const std::string& header,
                      std::size_t n_cols, Fn&& fn) {
  std::istringstream in{std::string(text)};
  std::string line;
  bool saw_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!saw_header) {
      require(t == header, "CSV: unexpected header: " + t);
      saw_header = true;
      continue;
    }
    const std::vector<std::string> cells = split_csv_line(t);
    require(cells.size() == n_cols,
            "CSV line " + std::to_string(line_no) + ": expected " +
                std::to_string(n_cols) + " fields, found " +
                std::to_string(cells.size()));
    fn(cells, line_no);
  }
  require(saw_header, "CSV: missing header");
}

inline void write_text_file(const std::filesystem::path& path,
                            std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  require(static_cast<bool>(out), "write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_file_bytes(path);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

}  // namespace detail

inline constexpr const char* kAmplitudeCsvHeader =
    "subject,frequency_hz,duty_pct,trial,segment,amplitude";

inline std::string render_amplitude_csv(const std::vector<AmplitudeRecord>& records) {
  std::string out = std::string(kAmplitudeCsvHeader) + "\n";
  for (const AmplitudeRecord& r : records) {
    out += std::to_string(r.subject) + ',' +
           detail::format_number(r.frequency_hz) + ',' +
           detail::format_number(r.duty_pct) + ',' + std::to_string(r.trial) +
           ',' + std::to_string(r.segment) + ',' +
           detail::format_number(r.amplitude) + '\n';
  }
  return out;
}

inline std::vector<AmplitudeRecord> parse_amplitude_csv(std::string_view text) {
  std::vector<AmplitudeRecord> records;
  detail::for_each_csv_row(
      text, kAmplitudeCsvHeader, 6,
      [&](const std::vector<std::string>& cells, std::size_t line_no) {
        AmplitudeRecord r;
        r.subject = static_cast<int>(detail::parse_int_cell(cells[0], line_no));
        r.frequency_hz = detail::parse_real_cell(cells[1], line_no);
        r.duty_pct = detail::parse_real_cell(cells[2], line_no);
        r.trial = static_cast<int>(detail::parse_int_cell(cells[3], line_no));
        r.segment = static_cast<int>(detail::parse_int_cell(cells[4], line_no));
        r.amplitude = detail::parse_real_cell(cells[5], line_no);
        records.push_back(r);
      });
  return records;
}

inline constexpr const char* kComfortCsvHeader = "subject,frequency_hz,duty_pct,rating";

inline std::string render_comfort_csv(const ComfortRatings& ratings) {
  std::string out = std::string(kComfortCsvHeader) + "\n";
  for (const ComfortEntry& e : ratings.entries()) {
    out += std::to_string(e.subject) + ',' +
           detail::format_number(e.frequency_hz) + ',' +
           detail::format_number(e.duty_pct) + ',' + std::to_string(e.rating) +
           '\n';
  }
  return out;
}

/// Parses human-entered comfort ratings; range and duplicate violations are
/// rejected here, at ingestion.
inline ComfortRatings parse_comfort_csv(std::string_view text) {
  ComfortRatings ratings;
  detail::for_each_csv_row(
      text, kComfortCsvHeader, 4,
      [&](const std::vector<std::string>& cells, std::size_t line_no) {
        ComfortEntry e;
        e.subject = static_cast<int>(detail::parse_int_cell(cells[0], line_no));
        e.frequency_hz = detail::parse_real_cell(cells[1], line_no);
        e.duty_pct = detail::parse_real_cell(cells[2], line_no);
        e.rating = static_cast<int>(detail::parse_int_cell(cells[3], line_no));
        ratings.add(e);
      });
  return ratings;
}

/// Everything a run needs: the session grid plus simulator/orchestration
/// settings. Loaded from a flat key-value config file.
struct RunConfig {
  SessionConfig session;
  std::uint64_t seed = 42;
  double noise_sd = 8.0;
  std::string model_path;  // empty: use the built-in response model

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::vector<double> parse_real_list(const std::string& text,
                                           const std::string& key) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string cell = trim(text.substr(
        start, (comma == std::string::npos ? text.size() : comma) - start));
    require(!cell.empty(), "config key '" + key + "': empty list element");
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    require(res.ec == std::errc{} && res.ptr == cell.data() + cell.size(),
            "config key '" + key + "': not a number: " + cell);
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Flat key-value config: one `key = value` per line, `#` lines are
/// comments. Keys: frequencies, duties (comma-separated), trials, trial_s,
/// rest_s, seed, noise_sd, model_path. Missing keys keep their defaults;
/// unknown or repeated keys are errors.
inline RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::size_t eq = t.find('=');
    detail::require(eq != std::string::npos,
                    "config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    detail::require(!key.empty(), "config line " + std::to_string(line_no) +
                                      ": empty key");
    detail::require(std::find(seen.begin(), seen.end(), key) == seen.end(),
                    "config: repeated key '" + key + "'");
    seen.push_back(key);
    if (key == "frequencies") {
      config.session.frequencies = detail::parse_real_list(value, key);
    } else if (key == "duties") {
      config.session.duties = detail::parse_real_list(value, key);
    } else if (key == "trials") {
      config.session.trials_per_condition =
          static_cast<int>(detail::parse_int_cell(value, line_no));
    } else if (key == "trial_s") {
      config.session.trial_s = detail::parse_real_cell(value, line_no);
    } else if (key == "rest_s") {
      config.session.rest_s = detail::parse_real_cell(value, line_no);
    } else if (key == "seed") {
      std::uint64_t v = 0;
      const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
      detail::require(res.ec == std::errc{} &&
                          res.ptr == value.data() + value.size(),
                      "config key 'seed': not an unsigned integer: " + value);
      config.seed = v;
    } else if (key == "noise_sd") {
      config.noise_sd = detail::parse_real_cell(value, line_no);
    } else if (key == "model_path") {
      config.model_path = value;
    } else {
      throw Error("config: unknown key '" + key + "'");
    }
  }
  config.session.validate();
  detail::require(detail::finite(config.noise_sd) && config.noise_sd >= 0.0,
                  "config key 'noise_sd': must be non-negative");
  return config;
}

inline RunConfig read_config_file(const std::filesystem::path& path) {
  return parse_config(detail::read_text_file(path));
}

/// Canonical rendering of a config: fixed key order, shortest number
/// notation. parse_config(canonical_config_text(c)) == c, and the report's
/// provenance hash is computed over exactly this text.
inline std::string canonical_config_text(const RunConfig& config) {
  const auto list = [](const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      out += detail::format_number(v[i]);
    }
    return out;
  };
  std::string out;
  out += "frequencies = " + list(config.session.frequencies) + "\n";
  out += "duties = " + list(config.session.duties) + "\n";
  out += "trials = " + std::to_string(config.session.trials_per_condition) + "\n";
  out += "trial_s = " + detail::format_number(config.session.trial_s) + "\n";
  out += "rest_s = " + detail::format_number(config.session.rest_s) + "\n";
  out += "seed = " + std::to_string(config.seed) + "\n";
  out += "noise_sd = " + detail::format_number(config.noise_sd) + "\n";
  out += "model_path = " + config.model_path + "\n";
  return out;
}

/// 64-bit FNV-1a over a byte string; the report provenance hash.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& config) {
  const std::uint64_t h = fnv1a64(canonical_config_text(config));
  std::string hex(16, '0');
  for (int i = 0; i < 16; ++i)
    hex[15 - static_cast<std::size_t>(i)] = "0123456789abcdef"[(h >> (4 * i)) & 0xf];
  return hex;
}

}  // namespace ssvep

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ssvep/common.hpp"

// European Data Format, bit-exact: a 256-byte main header plus 256 bytes per
// signal, all ASCII fixed-width fields, followed by data records of 16-bit
// little-endian two's-complement samples (record-major, then signal-major).
// Plain EDF only; EDF+ annotation channels are not interpreted.

namespace ssvep {

struct EdfFileHeader {
  std::string version = "0";
  std::string patient_id;
  std::string recording_id;
  std::string start_date = "01.01.00";  // dd.mm.yy
  std::string start_time = "00.00.00";  // hh.mm.ss
  std::string reserved;
  int header_bytes = 0;
  int n_records = 0;  // -1 permitted on read ("unknown"), resolved from file size
  double record_duration_s = 1.0;
  int n_signals = 0;
};

struct SignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  int digital_min = 0;
  int digital_max = 0;
  std::string prefiltering;
  int samples_per_record = 0;
  std::string reserved;

  void validate() const {
    detail::require(digital_min < digital_max,
                    "SignalHeader: digital_min must be below digital_max");
    detail::require(physical_min != physical_max,
                    "SignalHeader: physical range must be non-degenerate");
    detail::require(samples_per_record >= 1,
                    "SignalHeader: samples_per_record must be at least 1");
  }

  /// Physical units per digital step.
  double gain() const {
    return (physical_max - physical_min) /
           (static_cast<double>(digital_max) - static_cast<double>(digital_min));
  }
};

/// A parsed recording. Samples are stored per signal, in record order
/// (the on-disk record interleaving flattened signal by signal).
struct EdfRecording {
  EdfFileHeader file_header;
  std::vector<SignalHeader> signal_headers;
  std::vector<std::vector<std::int16_t>> samples;

  void validate() const {
    detail::require(file_header.n_signals >= 1, "EdfRecording: need at least one signal");
    detail::require(file_header.n_records >= 0,
                    "EdfRecording: n_records must be resolved (non-negative)");
    detail::require(file_header.record_duration_s > 0.0,
                    "EdfRecording: record duration must be positive");
    detail::require(file_header.header_bytes == 256 * (1 + file_header.n_signals),
                    "EdfRecording: header_bytes must equal 256 x (1 + n_signals)");
    detail::require(signal_headers.size() == static_cast<std::size_t>(file_header.n_signals),
                    "EdfRecording: signal header count mismatch");
    detail::require(samples.size() == signal_headers.size(),
                    "EdfRecording: sample vector count mismatch");
    for (std::size_t s = 0; s < signal_headers.size(); ++s) {
      signal_headers[s].validate();
      const auto expect = static_cast<std::size_t>(file_header.n_records) *
                          static_cast<std::size_t>(signal_headers[s].samples_per_record);
      detail::require(samples[s].size() == expect,
                      "EdfRecording: sample count does not match n_records x samples_per_record");
    }
  }
};

/// One physically scaled channel.
struct SampleSeries {
  std::vector<double> values;
  double sample_rate_hz = 0.0;
  std::string label;
};

namespace detail {

inline std::string rtrim_spaces(std::string_view s) {
  auto e = s.find_last_not_of(' ');
  if (e == std::string_view::npos) return {};
  return std::string(s.substr(0, e + 1));
}

inline void check_printable(std::string_view field, const char* what) {
  for (unsigned char c : field)
    require(c >= 32 && c <= 126, std::string("parse_edf: non-ASCII byte in ") + what);
}

inline std::string read_field(std::span<const unsigned char> bytes, std::size_t& off,
                              std::size_t width, const char* what) {
  std::string_view v(reinterpret_cast<const char*>(bytes.data()) + off, width);
  check_printable(v, what);
  off += width;
  return rtrim_spaces(v);
}

inline int parse_int_field(const std::string& field, const char* what) {
  const std::string t = trim(field);
  int value = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  require(ec == std::errc() && p == t.data() + t.size() && !t.empty(),
          std::string("parse_edf: non-numeric ") + what + " field: '" + field + "'");
  return value;
}

inline double parse_real_field(const std::string& field, const char* what) {
  const std::string t = trim(field);
  double value = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  require(ec == std::errc() && p == t.data() + t.size() && !t.empty(),
          std::string("parse_edf: non-numeric ") + what + " field: '" + field + "'");
  return value;
}

inline void write_text_field(std::vector<unsigned char>& out, const std::string& text,
                             std::size_t width, const char* what) {
  require(text.size() <= width,
          std::string("write_edf: field overflow in ") + what + ": '" + text + "'");
  check_printable(text, what);
  for (char c : text) out.push_back(static_cast<unsigned char>(c));
  for (std::size_t i = text.size(); i < width; ++i) out.push_back(' ');
}

inline void write_int_field(std::vector<unsigned char>& out, long long value,
                            std::size_t width, const char* what) {
  write_text_field(out, std::to_string(value), width, what);
}

/// Canonical real rendering: the shortest fixed-notation string that parses
/// back to exactly the same double. Falls back to general notation if fixed
/// does not fit the field width.
inline void write_real_field(std::vector<unsigned char>& out, double value,
                             std::size_t width, const char* what) {
  require(finite(value), std::string("write_edf: non-finite value in ") + what);
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  require(ec == std::errc(), std::string("write_edf: cannot format ") + what);
  std::string text(buf, p);
  if (text.size() > width) {
    auto [p2, ec2] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general);
    require(ec2 == std::errc(), std::string("write_edf: cannot format ") + what);
    text.assign(buf, p2);
  }
  write_text_field(out, text, width, what);
}

}  // namespace detail

/// Decodes an EDF byte image. Rejects truncated input, header/payload size
/// mismatches and non-numeric numeric fields. An unknown record count (-1)
/// is resolved from the file length; a trailing partial record is treated as
/// corruption, not silently dropped.
inline EdfRecording parse_edf(std::span<const unsigned char> bytes) {
  detail::require(bytes.size() >= 256, "parse_edf: truncated file (no main header)");

  EdfRecording rec;
  auto& h = rec.file_header;
  std::size_t off = 0;
  h.version = detail::read_field(bytes, off, 8, "version");
  h.patient_id = detail::read_field(bytes, off, 80, "patient id");
  h.recording_id = detail::read_field(bytes, off, 80, "recording id");
  h.start_date = detail::read_field(bytes, off, 8, "start date");
  h.start_time = detail::read_field(bytes, off, 8, "start time");
  h.header_bytes = detail::parse_int_field(
      detail::read_field(bytes, off, 8, "header bytes"), "header bytes");
  h.reserved = detail::read_field(bytes, off, 44, "reserved");
  h.n_records = detail::parse_int_field(
      detail::read_field(bytes, off, 8, "record count"), "record count");
  h.record_duration_s = detail::parse_real_field(
      detail::read_field(bytes, off, 8, "record duration"), "record duration");
  h.n_signals = detail::parse_int_field(
      detail::read_field(bytes, off, 4, "signal count"), "signal count");

  detail::require(h.n_signals >= 1, "parse_edf: signal count must be at least 1");
  detail::require(h.n_records >= -1, "parse_edf: record count must be >= -1");
  detail::require(h.record_duration_s > 0.0, "parse_edf: record duration must be positive");
  detail::require(h.header_bytes == 256 * (1 + h.n_signals),
                  "parse_edf: header_bytes does not match 256 x (1 + n_signals)");
  detail::require(bytes.size() >= static_cast<std::size_t>(h.header_bytes),
                  "parse_edf: truncated file (incomplete signal headers)");

  const auto ns = static_cast<std::size_t>(h.n_signals);
  rec.signal_headers.resize(ns);
  // Signal header fields are stored field-major: all labels, then all
  // transducers, and so on.
  for (auto& s : rec.signal_headers) s.label = detail::read_field(bytes, off, 16, "label");
  for (auto& s : rec.signal_headers)
    s.transducer = detail::read_field(bytes, off, 80, "transducer");
  for (auto& s : rec.signal_headers)
    s.physical_dimension = detail::read_field(bytes, off, 8, "physical dimension");
  for (auto& s : rec.signal_headers)
    s.physical_min =
        detail::parse_real_field(detail::read_field(bytes, off, 8, "physical min"), "physical min");
  for (auto& s : rec.signal_headers)
    s.physical_max =
        detail::parse_real_field(detail::read_field(bytes, off, 8, "physical max"), "physical max");
  for (auto& s : rec.signal_headers)
    s.digital_min =
        detail::parse_int_field(detail::read_field(bytes, off, 8, "digital min"), "digital min");
  for (auto& s : rec.signal_headers)
    s.digital_max =
        detail::parse_int_field(detail::read_field(bytes, off, 8, "digital max"), "digital max");
  for (auto& s : rec.signal_headers)
    s.prefiltering = detail::read_field(bytes, off, 80, "prefiltering");
  for (auto& s : rec.signal_headers)
    s.samples_per_record = detail::parse_int_field(
        detail::read_field(bytes, off, 8, "samples per record"), "samples per record");
  for (auto& s : rec.signal_headers)
    s.reserved = detail::read_field(bytes, off, 32, "signal reserved");
  for (auto& s : rec.signal_headers) s.validate();

  std::size_t record_samples = 0;
  for (const auto& s : rec.signal_headers)
    record_samples += static_cast<std::size_t>(s.samples_per_record);
  const std::size_t record_bytes = record_samples * 2;
  const std::size_t payload = bytes.size() - static_cast<std::size_t>(h.header_bytes);

  if (h.n_records == -1) {
    detail::require(payload % record_bytes == 0,
                    "parse_edf: payload is not a whole number of records");
    h.n_records = static_cast<int>(payload / record_bytes);
  } else {
    detail::require(payload == static_cast<std::size_t>(h.n_records) * record_bytes,
                    "parse_edf: payload length does not match the declared record count");
  }

  rec.samples.resize(ns);
  for (std::size_t s = 0; s < ns; ++s)
    rec.samples[s].reserve(static_cast<std::size_t>(h.n_records) *
                           static_cast<std::size_t>(rec.signal_headers[s].samples_per_record));

  for (int r = 0; r < h.n_records; ++r) {
    for (std::size_t s = 0; s < ns; ++s) {
      const auto n = static_cast<std::size_t>(rec.signal_headers[s].samples_per_record);
      for (std::size_t i = 0; i < n; ++i) {
        const auto lo = static_cast<std::uint16_t>(bytes[off]);
        const auto hi = static_cast<std::uint16_t>(bytes[off + 1]);
        rec.samples[s].push_back(static_cast<std::int16_t>(
            static_cast<std::uint16_t>(lo | (hi << 8))));
        off += 2;
      }
    }
  }

  rec.validate();
  return rec;
}

/// Encodes a recording into a canonical EDF byte image;
/// parse_edf(write_edf(r)) reproduces r exactly, and re-writing a parsed
/// canonical image is byte-identical.
inline std::vector<unsigned char> write_edf(const EdfRecording& rec) {
  rec.validate();
  const auto& h = rec.file_header;

  std::vector<unsigned char> out;
  std::size_t record_samples = 0;
  for (const auto& s : rec.signal_headers)
    record_samples += static_cast<std::size_t>(s.samples_per_record);
  out.reserve(static_cast<std::size_t>(h.header_bytes) +
              static_cast<std::size_t>(h.n_records) * record_samples * 2);

  detail::write_text_field(out, h.version, 8, "version");
  detail::write_text_field(out, h.patient_id, 80, "patient id");
  detail::write_text_field(out, h.recording_id, 80, "recording id");
  detail::write_text_field(out, h.start_date, 8, "start date");
  detail::write_text_field(out, h.start_time, 8, "start time");
  detail::write_int_field(out, h.header_bytes, 8, "header bytes");
  detail::write_text_field(out, h.reserved, 44, "reserved");
  detail::write_int_field(out, h.n_records, 8, "record count");
  detail::write_real_field(out, h.record_duration_s, 8, "record duration");
  detail::write_int_field(out, h.n_signals, 4, "signal count");

  for (const auto& s : rec.signal_headers) detail::write_text_field(out, s.label, 16, "label");
  for (const auto& s : rec.signal_headers)
    detail::write_text_field(out, s.transducer, 80, "transducer");
  for (const auto& s : rec.signal_headers)
    detail::write_text_field(out, s.physical_dimension, 8, "physical dimension");
  for (const auto& s : rec.signal_headers)
    detail::write_real_field(out, s.physical_min, 8, "physical min");
  for (const auto& s : rec.signal_headers)
    detail::write_real_field(out, s.physical_max, 8, "physical max");
  for (const auto& s : rec.signal_headers)
    detail::write_int_field(out, s.digital_min, 8, "digital min");
  for (const auto& s : rec.signal_headers)
    detail::write_int_field(out, s.digital_max, 8, "digital max");
  for (const auto& s : rec.signal_headers)
    detail::write_text_field(out, s.prefiltering, 80, "prefiltering");
  for (const auto& s : rec.signal_headers)
    detail::write_int_field(out, s.samples_per_record, 8, "samples per record");
  for (const auto& s : rec.signal_headers)
    detail::write_text_field(out, s.reserved, 32, "signal reserved");

  for (int r = 0; r < h.n_records; ++r) {
    for (std::size_t s = 0; s < rec.samples.size(); ++s) {
      const auto n = static_cast<std::size_t>(rec.signal_headers[s].samples_per_record);
      const std::size_t base = static_cast<std::size_t>(r) * n;
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::uint16_t>(rec.samples[s][base + i]);
        out.push_back(static_cast<unsigned char>(v & 0xff));
        out.push_back(static_cast<unsigned char>(v >> 8));
      }
    }
  }
  return out;
}

/// Extracts one channel by label (whitespace-trimmed, case-sensitive match)
/// and applies the digital-to-physical affine scaling.
inline SampleSeries extract_channel(const EdfRecording& rec, const std::string& label) {
  rec.validate();
  const std::string want = detail::trim(label);
  std::size_t found = rec.signal_headers.size();
  for (std::size_t s = 0; s < rec.signal_headers.size(); ++s) {
    if (detail::trim(rec.signal_headers[s].label) == want) {
      detail::require(found == rec.signal_headers.size(),
                      "extract_channel: duplicate label '" + want + "'");
      found = s;
    }
  }
  detail::require(found < rec.signal_headers.size(),
                  "extract_channel: no channel labelled '" + want + "'");

  const auto& sh = rec.signal_headers[found];
  SampleSeries series;
  series.label = want;
  series.sample_rate_hz =
      static_cast<double>(sh.samples_per_record) / rec.file_header.record_duration_s;
  const double gain = sh.gain();
  series.values.reserve(rec.samples[found].size());
  for (std::int16_t dig : rec.samples[found])
    series.values.push_back((static_cast<double>(dig) - sh.digital_min) * gain +
                            sh.physical_min);
  return series;
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(in.good(), "cannot open file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

inline EdfRecording read_edf_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_edf(bytes);
}

inline void write_edf_file(const std::filesystem::path& path, const EdfRecording& rec) {
  const auto bytes = write_edf(rec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  detail::require(out.good(), "cannot open file for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  detail::require(out.good(), "write failed: " + path.string());
}

}  // namespace ssvep

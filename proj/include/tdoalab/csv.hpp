#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdoalab/config.hpp"
#include "tdoalab/sim.hpp"

namespace tdoalab {

inline constexpr std::string_view kMcCsvHeader =
    "filter,k,scenario,mean_raw_error_m,mean_filtered_error_m,normalized_error,stderr,"
    "nonconverged";

inline std::string mc_rows_to_csv(const std::vector<McRow>& rows) {
  std::string out(kMcCsvHeader);
  out += '\n';
  for (const McRow& r : rows) {
    out += r.filter;
    out += ',';
    out += std::to_string(r.k);
    out += ',';
    out += r.scenario;
    out += ',';
    out += format_double(r.mean_raw_error_m);
    out += ',';
    out += format_double(r.mean_filtered_error_m);
    out += ',';
    out += format_double(r.normalized_error);
    out += ',';
    out += format_double(r.stderr_norm);
    out += ',';
    out += std::to_string(r.nonconverged);
    out += '\n';
  }
  return out;
}

inline std::vector<McRow> mc_rows_from_csv(std::string_view text) {
  std::vector<McRow> rows;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line =
        eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kMcCsvHeader) throw std::runtime_error("unexpected CSV header");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(comma == std::string_view::npos ? line.substr(start)
                                                       : line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 8) throw std::runtime_error("malformed CSV row");
    McRow r;
    r.filter = std::string(fields[0]);
    r.k = static_cast<int>(parse_long(fields[1], "csv k"));
    r.scenario = std::string(fields[2]);
    r.mean_raw_error_m = parse_double(fields[3], "csv mean_raw_error_m");
    r.mean_filtered_error_m = parse_double(fields[4], "csv mean_filtered_error_m");
    r.normalized_error = parse_double(fields[5], "csv normalized_error");
    r.stderr_norm = parse_double(fields[6], "csv stderr");
    r.nonconverged = parse_long(fields[7], "csv nonconverged");
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw std::runtime_error("empty CSV");
  return rows;
}

// Write-temp-then-rename so readers never observe a partial file.
inline void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

// Per-sample dump of one measurement window (documented in the README).
inline std::string window_to_csv(const MeasurementWindow& w, long run_id) {
  std::string out = "run_id,k,n,d_true,d_obs,snr_db,r_quality\n";
  for (int k = 0; k < w.frames(); ++k)
    for (int n = 0; n < w.stations(); ++n) {
      out += std::to_string(run_id);
      out += ',';
      out += std::to_string(k + 1);
      out += ',';
      out += std::to_string(n + 1);
      out += ',';
      out += format_double(w.d_true(k, n));
      out += ',';
      out += format_double(w.d_obs(k, n));
      out += ',';
      out += format_double(w.snr_report_db(k, n));
      out += ',';
      out += format_double(w.r_quality(k, n));
      out += '\n';
    }
  return out;
}

}  // namespace tdoalab

#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slv/errors.hpp"
#include "slv/velocimetry.hpp"

namespace slv {

namespace detail {

/// %.12g keeps full double fidelity for the quantities we emit while
/// staying byte-stable run to run, which the determinism checks rely on.
inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace detail

/// Numeric CSV with one leading comment line. Readers below re-ingest
/// exactly what the writers produce.
struct CsvTable {
  std::string header;                     ///< comment line without the '#'
  std::vector<std::vector<double>> rows;  ///< ragged rows are rejected
};

inline CsvTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (table.header.empty()) {
        std::size_t start = line.find_first_not_of("# ");
        table.header = start == std::string::npos ? "" : line.substr(start);
      }
      continue;
    }
    std::vector<double> row;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      double v = std::strtod(p, &end);
      if (end == p)
        throw FormatError(path + ": row " + std::to_string(line_no) +
                          ": expected numeric cells");
      row.push_back(v);
      p = end;
      while (*p == ' ') ++p;
      if (*p == ',') {
        ++p;
        continue;
      }
      if (*p == '\0' || *p == '\r') break;
      throw FormatError(path + ": row " + std::to_string(line_no) +
                        ": expected numeric cells");
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw FormatError(path + ": row " + std::to_string(line_no) + ": has " +
                        std::to_string(row.size()) + " cells, expected " +
                        std::to_string(width));
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Translation phase against set velocity at one storage time.
inline void write_velocity_sweep_csv(const std::string& path,
                                     const VelocitySweepResult& sweep) {
  std::string out =
      "# velocity_mps,dphi_tr_rad,dphi_tr_stderr_rad\n";
  for (const auto& p : sweep.points) {
    out += detail::fmt_num(p.velocity_set_mps) + "," +
           detail::fmt_num(p.dphi_tr_rad) + "," +
           detail::fmt_num(p.dphi_tr_stderr_rad) + "\n";
  }
  detail::write_text_file(path, out);
}

/// Phase-velocity slope against storage time.
inline void write_alpha_vs_tau_csv(const std::string& path,
                                   const std::vector<AlphaPoint>& points) {
  std::string out =
      "# storage_time_s,alpha_rad_per_mps,alpha_stderr_rad_per_mps\n";
  for (const auto& p : points) {
    out += detail::fmt_num(p.tau_s) + "," +
           detail::fmt_num(p.alpha_rad_per_mps) + "," +
           detail::fmt_num(p.alpha_stderr_rad_per_mps) + "\n";
  }
  detail::write_text_file(path, out);
}

/// Velocity sensitivity against storage time. Exactly two columns.
inline void write_sensitivity_csv(const std::string& path,
                                  const std::vector<SensitivityReport>& rows) {
  std::string out = "# storage_time_s,sensitivity_mps_per_sqrthz\n";
  for (const auto& r : rows) {
    out += detail::fmt_num(r.tau_s) + "," +
           detail::fmt_num(r.sensitivity_mps_rthz) + "\n";
  }
  detail::write_text_file(path, out);
}

/// Phase scatter against on-scope average count. Exactly two columns.
inline void write_averaging_csv(const std::string& path,
                                const std::vector<AveragingPoint>& rows) {
  std::string out = "# scope_averages,sigma_phi_rad\n";
  for (const auto& r : rows) {
    out += detail::fmt_num(static_cast<double>(r.averages)) + "," +
           detail::fmt_num(r.sigma_phi_rad) + "\n";
  }
  detail::write_text_file(path, out);
}

/// Human-readable sensitivity summary. Reports both conversion variants:
/// the ideal slope k_P*tau and, when provided, the bench-measured alpha.
inline std::string sensitivity_summary_text(
    const std::vector<SensitivityReport>& rows) {
  std::ostringstream out;
  out << "Velocity sensitivity summary\n";
  out << "----------------------------\n";
  for (const auto& r : rows) {
    out << "storage time " << detail::fmt_num(r.tau_s * 1e6) << " us:\n";
    out << "  phase scatter (std error of run means): "
        << detail::fmt_num(r.sigma_phi_rad * 1e3) << " mrad over "
        << detail::fmt_num(r.beta) << " records, T = "
        << detail::fmt_num(r.integration_time_s * 1e3) << " ms\n";
    out << "  ideal slope k_P*tau:\n";
    out << "    velocity resolution: "
        << detail::fmt_num(r.velocity_resolution_mps * 1e6) << " um/s\n";
    out << "    sensitivity: "
        << detail::fmt_num(r.sensitivity_mps_rthz * 1e6)
        << " um/s/sqrt(Hz)\n";
    if (r.alpha_rad_per_mps > 0.0) {
      out << "  measured alpha " << detail::fmt_num(r.alpha_rad_per_mps)
          << " rad/(m/s):\n";
      out << "    velocity resolution: "
          << detail::fmt_num(r.velocity_resolution_alpha_mps * 1e6)
          << " um/s\n";
      out << "    sensitivity: "
          << detail::fmt_num(r.sensitivity_alpha_mps_rthz * 1e6)
          << " um/s/sqrt(Hz)\n";
    }
  }
  return out.str();
}

}  // namespace slv

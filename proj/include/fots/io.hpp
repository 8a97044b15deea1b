#pragma once

// CSV formats. Reals are written in scientific notation with 17 significant
// digits, which round-trips doubles and keeps outputs byte-stable.
//
//   rounds    t_s,T1_s,T2_s,offset_est_s,true_offset_s,residual_s
//   node      t_s,T1_s,T3_s,offset_est_s,true_offset_s,residual_s,position_km
//   tdev      tau_s,tdev_s,n_samples
//   series    index,x_seconds

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fots/access.hpp"
#include "fots/errors.hpp"
#include "fots/protocol.hpp"
#include "fots/stability.hpp"
#include "fots/timebase.hpp"

namespace fots::io {

inline std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_rounds_csv(const std::filesystem::path& path,
                             const std::vector<SyncRoundResult>& rounds) {
  auto out = open_for_write(path);
  out << "t_s,T1_s,T2_s,offset_est_s,true_offset_s,residual_s\n";
  for (const auto& r : rounds) {
    out << sci(r.t_round) << ',' << sci(r.T1) << ',' << sci(r.T2) << ',' << sci(r.offset_estimate)
        << ',' << sci(r.true_offset) << ',' << sci(r.residual) << '\n';
  }
  finish(out, path);
}

inline void write_node_csv(const std::filesystem::path& path,
                           const std::vector<NodeRoundResult>& rounds) {
  auto out = open_for_write(path);
  out << "t_s,T1_s,T3_s,offset_est_s,true_offset_s,residual_s,position_km\n";
  for (const auto& r : rounds) {
    out << sci(r.t_round) << ',' << sci(r.T1) << ',' << sci(r.T3) << ',' << sci(r.offset_estimate)
        << ',' << sci(r.true_offset) << ',' << sci(r.residual) << ',' << sci(r.position_km)
        << '\n';
  }
  finish(out, path);
}

inline void write_tdev_csv(const std::filesystem::path& path, const StabilityCurve& curve) {
  auto out = open_for_write(path);
  out << "tau_s,tdev_s,n_samples\n";
  for (const auto& p : curve.points) {
    out << sci(p.tau) << ',' << sci(p.value) << ',' << p.n_samples << '\n';
  }
  finish(out, path);
}

inline void write_series_csv(const std::filesystem::path& path, const TimeErrorSeries& series) {
  auto out = open_for_write(path);
  out << "index,x_seconds\n";
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    out << i << ',' << sci(series.values[i]) << '\n';
  }
  finish(out, path);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::ptrdiff_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  }
};

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    cells.push_back(cell);
  }
  return cells;
}

inline Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Loads a time-error series from a rounds/node CSV (residual_s column, tau0
/// from the t_s spacing) or a series CSV (x_seconds column, tau0 given).
inline TimeErrorSeries read_series(const std::filesystem::path& path, double tau0_for_series = 1.0) {
  const Table t = read_table(path);
  TimeErrorSeries s;
  s.description = path.filename().string();
  if (auto col = t.column("residual_s"); col >= 0) {
    const auto tcol = t.column("t_s");
    if (tcol < 0) throw ParseError(path.string() + ": residual CSV without t_s column");
    if (t.rows.size() >= 2) s.tau0 = t.rows[1][tcol] - t.rows[0][tcol];
    for (const auto& r : t.rows) s.values.push_back(r[col]);
  } else if (auto xcol = t.column("x_seconds"); xcol >= 0) {
    s.tau0 = tau0_for_series;
    for (const auto& r : t.rows) s.values.push_back(r[xcol]);
  } else {
    throw ParseError(path.string() + ": no residual_s or x_seconds column");
  }
  s.validate();
  return s;
}

inline StabilityCurve read_tdev_csv(const std::filesystem::path& path) {
  const Table t = read_table(path);
  const auto tau = t.column("tau_s");
  const auto val = t.column("tdev_s");
  const auto n = t.column("n_samples");
  if (tau < 0 || val < 0 || n < 0) throw ParseError(path.string() + ": not a TDEV CSV");
  StabilityCurve c;
  for (const auto& r : t.rows) {
    c.points.push_back({r[tau], r[val], static_cast<std::size_t>(r[n])});
  }
  return c;
}

}  // namespace fots::io

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrband/bands.hpp"
#include "mrband/sample.hpp"
#include "mrband/simulate.hpp"

namespace mrband {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! 17 significant digits: enough for exact double round-trips.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

//! Compact form for labels (column names, file suffixes), not for data.
inline std::string format_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  // tolerate surrounding spaces
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r'))
    s.remove_suffix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::string_view trimmed(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

//! Reads a dataset in the `x,y,delta` layout. y may be empty only on rows
//! with delta=0; row numbers in error messages count data rows from 1.
inline Sample read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("dataset: empty file, expected header x,y,delta");
  {
    const auto cols = detail::split_csv(line);
    if (cols.size() != 3 || detail::trimmed(cols[0]) != "x" ||
        detail::trimmed(cols[1]) != "y" || detail::trimmed(cols[2]) != "delta")
      throw ParseError("dataset: header must be exactly 'x,y,delta'");
  }

  Sample sample;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trimmed(line).empty()) continue;
    const auto cols = detail::split_csv(line);
    const std::string at = "row " + std::to_string(row);
    if (cols.size() != 3)
      throw ParseError("dataset: " + at + ": expected 3 fields, got " +
                       std::to_string(cols.size()));
    Record r;
    if (!detail::parse_double(cols[0], r.x) || !std::isfinite(r.x))
      throw ParseError("dataset: " + at + ": bad x value");
    const auto dv = detail::trimmed(cols[2]);
    if (dv == "0")
      r.delta = false;
    else if (dv == "1")
      r.delta = true;
    else
      throw ParseError("dataset: " + at + ": delta must be 0 or 1");
    const auto yv = detail::trimmed(cols[1]);
    if (yv.empty()) {
      if (r.delta)
        throw ParseError("dataset: " + at + ": missing y with delta=1");
      r.y = std::numeric_limits<double>::quiet_NaN();
    } else {
      if (!detail::parse_double(cols[1], r.y))
        throw ParseError("dataset: " + at + ": bad y value");
      if (r.delta && !std::isfinite(r.y))
        throw ParseError("dataset: " + at + ": missing y with delta=1");
    }
    sample.records.push_back(r);
  }
  if (sample.records.empty())
    throw ParseError("dataset: no data rows");
  if (sample.complete_cases() == 0)
    throw ParseError("dataset: need at least one row with delta=1");
  return sample;
}

inline Sample load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("dataset: cannot open '" + path + "'");
  return read_dataset_csv(in);
}

inline void write_dataset_csv(std::ostream& out, const Sample& sample) {
  out << "x,y,delta\n";
  for (const Record& r : sample.records) {
    out << format_double(r.x) << ',';
    if (r.delta || std::isfinite(r.y)) out << format_double(r.y);
    out << ',' << (r.delta ? '1' : '0') << '\n';
  }
}

inline void write_band_csv(std::ostream& out, const BandResult& band) {
  out << "x,mhat,fhat,sigma2,lower,upper,flags\n";
  for (std::size_t j = 0; j < band.grid.size(); ++j) {
    out << format_double(band.grid[j]) << ',' << format_double(band.mhat[j])
        << ',' << format_double(band.fhat[j]) << ','
        << format_double(band.sigma2[j]) << ',' << format_double(band.lower[j])
        << ',' << format_double(band.upper[j]) << ',' << band.flags[j] << '\n';
  }
}

//! Columns of a serialized band, as read back from disk.
struct BandTable {
  std::vector<double> grid, mhat, fhat, sigma2, lower, upper;
  std::vector<unsigned> flags;
};

inline BandTable parse_band_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      detail::trimmed(line) != "x,mhat,fhat,sigma2,lower,upper,flags")
    throw ParseError("band csv: bad header");
  BandTable t;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trimmed(line).empty()) continue;
    const auto cols = detail::split_csv(line);
    if (cols.size() != 7)
      throw ParseError("band csv: row " + std::to_string(row) +
                       ": expected 7 fields");
    double v[6];
    for (int c = 0; c < 6; ++c)
      if (!detail::parse_double(cols[c], v[c]))
        throw ParseError("band csv: row " + std::to_string(row) +
                         ": bad number");
    double fl;
    if (!detail::parse_double(cols[6], fl))
      throw ParseError("band csv: row " + std::to_string(row) + ": bad flags");
    t.grid.push_back(v[0]);
    t.mhat.push_back(v[1]);
    t.fhat.push_back(v[2]);
    t.sigma2.push_back(v[3]);
    t.lower.push_back(v[4]);
    t.upper.push_back(v[5]);
    t.flags.push_back(static_cast<unsigned>(fl));
  }
  return t;
}

inline nlohmann::json band_header_json(const BandResult& band) {
  return nlohmann::json{{"n", band.n},
                        {"alpha", band.alpha},
                        {"delta", band.delta},
                        {"beta", band.beta},
                        {"kernel", to_string(band.kernel)},
                        {"c_K", band.c_k},
                        {"C1", band.c1},
                        {"C2", band.c2},
                        {"d_n", band.d_n},
                        {"x_alpha", band.x_alpha}};
}

//! Static band plot: shaded band polygon, center line, frame.
inline void write_band_svg(std::ostream& out, const BandResult& band) {
  const double w = 720.0, h = 480.0, ml = 60.0, mr = 20.0, mt = 20.0,
               mb = 40.0;
  double ylo = band.lower[0], yhi = band.upper[0];
  for (std::size_t j = 0; j < band.grid.size(); ++j) {
    ylo = std::min(ylo, band.lower[j]);
    yhi = std::max(yhi, band.upper[j]);
  }
  if (!(yhi > ylo)) { yhi = ylo + 1.0; }
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;
  const double xlo = band.grid.front(), xhi = band.grid.back();
  auto px = [&](double x) {
    return ml + (x - xlo) / (xhi - xlo) * (w - ml - mr);
  };
  auto py = [&](double y) {
    return mt + (yhi - y) / (yhi - ylo) * (h - mt - mb);
  };
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
      << "\">\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr
      << "\" height=\"" << h - mt - mb
      << "\" fill=\"white\" stroke=\"black\"/>\n";
  out << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.6\" stroke=\"none\" "
         "points=\"";
  for (std::size_t j = 0; j < band.grid.size(); ++j)
    out << num(px(band.grid[j])) << ',' << num(py(band.upper[j])) << ' ';
  for (std::size_t j = band.grid.size(); j-- > 0;)
    out << num(px(band.grid[j])) << ',' << num(py(band.lower[j])) << ' ';
  out << "\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" "
         "points=\"";
  for (std::size_t j = 0; j < band.grid.size(); ++j)
    out << num(px(band.grid[j])) << ',' << num(py(band.mhat[j])) << ' ';
  out << "\"/>\n";
  out << "<text x=\"" << px(xlo) << "\" y=\"" << h - 10 << "\">" << num(xlo)
      << "</text>\n";
  out << "<text x=\"" << px(xhi) - 30 << "\" y=\"" << h - 10 << "\">"
      << num(xhi) << "</text>\n";
  out << "<text x=\"5\" y=\"" << py(ylo) << "\">" << num(ylo) << "</text>\n";
  out << "<text x=\"5\" y=\"" << py(yhi) + 10 << "\">" << num(yhi)
      << "</text>\n";
  out << "</svg>\n";
}

inline nlohmann::json sim_report_json(const SimReport& report) {
  const SimConfig& c = report.config;
  nlohmann::json method_p{{"coverage", report.proposed.coverage},
                          {"mean_area", report.proposed.mean_area},
                          {"ks_distance", report.proposed.ks_distance}};
  nlohmann::json method_c{{"coverage", report.complete_case.coverage},
                          {"mean_area", report.complete_case.mean_area},
                          {"ks_distance", report.complete_case.ks_distance}};
  nlohmann::json bw;
  if (c.fixed_bw)
    bw = {{"mode", "fixed"}, {"delta", c.fixed_bw->delta},
          {"beta", c.fixed_bw->beta}};
  else
    bw = {{"mode", "cv"}};
  return nlohmann::json{
      {"n", c.n},
      {"model", to_string(c.model)},
      {"reps", c.reps},
      {"seed", c.seed},
      {"kernel", to_string(c.kernel)},
      {"eps", c.eps.kind == EpsKind::zero ? "zero" : "uniform"},
      {"kappa", c.eps.kappa},
      {"alphas", c.alphas},
      {"grid", {{"lo", c.grid.lo}, {"hi", c.grid.hi}, {"count", c.grid.count}}},
      {"bandwidth", bw},
      {"failures", report.failures},
      {"proposed", method_p},
      {"complete_case", method_c},
      {"u_values", report.u_values},
      {"v_values", report.v_values}};
}

//! Coverage/area table: one row per method, coverage and area columns per
//! alpha level.
inline void write_sim_table_csv(std::ostream& out, const SimReport& report) {
  const SimConfig& c = report.config;
  out << "method,eps,n,model";
  for (double a : report.config.alphas)
    out << ",coverage_a" << format_label(a) << ",area_a" << format_label(a);
  out << ",ks_distance,failures\n";
  const std::string eps =
      c.eps.kind == EpsKind::zero ? "zero" : "uniform";
  auto row = [&](const std::string& name, const MethodSummary& m) {
    out << name << ',' << eps << ',' << c.n << ',' << to_string(c.model);
    for (std::size_t a = 0; a < c.alphas.size(); ++a)
      out << ',' << format_double(m.coverage[a]) << ','
          << format_double(m.mean_area[a]);
    out << ',' << format_double(m.ks_distance) << ',' << report.failures
        << '\n';
  };
  row("proposed", report.proposed);
  row("complete_case", report.complete_case);
}

inline void write_ecdf_csv(std::ostream& out, const UniformityDiagnostic& d) {
  out << "t,ecdf\n";
  for (std::size_t j = 0; j < d.ecdf_at.size(); ++j)
    out << format_double(d.ecdf_at[j]) << ',' << format_double(d.ecdf_value[j])
        << '\n';
}

}  // namespace mrband

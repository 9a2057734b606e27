#pragma once

// File surfaces: series CSV, binary draw archives, summary tables, the JSON
// scalar summary, and minimal SVG polyline plots. Decimal serialization uses
// 17 significant digits so every double round-trips exactly.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bnspec/numeric.hpp"
#include "bnspec/sampler.hpp"
#include "bnspec/summary.hpp"

namespace bnspec {

namespace detail {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  fields.push_back(cell);
  return fields;
}

inline double parse_double(const std::string& cell, long row, std::size_t col) {
  if (cell.empty())
    throw contract_error("csv: missing value at data row " + std::to_string(row) +
                         ", column " + std::to_string(col + 1));
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw contract_error("csv: cannot parse '" + cell + "' at data row " +
                         std::to_string(row) + ", column " + std::to_string(col + 1));
  return value;
}

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw io_error(std::string("draws archive truncated while reading ") + what);
  return value;
}

}  // namespace detail

struct CsvTable {
  std::vector<std::string> header;
  RMatrix values;
};

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw contract_error("csv: " + path + " has no header row");
  CsvTable table;
  table.header = detail::split_csv_line(line);
  std::vector<std::vector<double>> rows;
  long rownum = 0;
  while (std::getline(in, line)) {
    ++rownum;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != table.header.size())
      throw contract_error("csv: data row " + std::to_string(rownum) + " has " +
                           std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(table.header.size()));
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row[c] = detail::parse_double(fields[c], rownum, c);
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
  return table;
}

inline void write_csv_table(const std::string& path,
                            const std::vector<std::string>& header,
                            const RMatrix& values) {
  if (header.size() != static_cast<std::size_t>(values.cols()))
    throw contract_error("write_csv_table: header width differs from data");
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  for (std::size_t c = 0; c < header.size(); ++c)
    out << (c ? "," : "") << header[c];
  out << "\n";
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      out << (c ? "," : "") << detail::fmt17(values(r, c));
    out << "\n";
  }
  if (!out) throw io_error("short write to " + path);
}

inline void write_series_csv(const std::string& path, const RMatrix& z,
                             std::vector<std::string> names = {}) {
  if (names.empty())
    for (Eigen::Index c = 0; c < z.cols(); ++c)
      names.push_back("s" + std::to_string(c + 1));
  write_csv_table(path, names, z);
}

// Reads a series CSV; `columns` selects 0-based columns (empty keeps all).
inline RMatrix read_series_csv(const std::string& path,
                               const std::vector<int>& columns = {}) {
  const CsvTable table = read_csv_table(path);
  if (columns.empty()) return table.values;
  RMatrix out(table.values.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] < 0 || columns[c] >= table.values.cols())
      throw contract_error("read_series_csv: column " + std::to_string(columns[c] + 1) +
                           " out of range (file has " +
                           std::to_string(table.values.cols()) + ")");
    out.col(static_cast<Eigen::Index>(c)) = table.values.col(columns[c]);
  }
  return out;
}

// Realified matrix components in row-major order; for d = 2 this is exactly
// f11, re_f12, im_f12, f22.
struct ComponentLabel {
  std::string name;
  int i = 0, j = 0;
};

inline std::vector<ComponentLabel> component_labels(int d) {
  std::vector<ComponentLabel> labels;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      ComponentLabel label;
      label.i = i;
      label.j = j;
      if (i == j)
        label.name = "f" + std::to_string(i + 1) + std::to_string(i + 1);
      else if (i < j)
        label.name = "re_f" + std::to_string(i + 1) + std::to_string(j + 1);
      else
        label.name = "im_f" + std::to_string(j + 1) + std::to_string(i + 1);
      labels.push_back(std::move(label));
    }
  return labels;
}

inline constexpr char kDrawsMagic[8] = {'B', 'N', 'S', 'P', 'D', 'R', 'W', '1'};

inline void write_draws_bin(const std::string& path, const PosteriorDraws& draws) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out.write(kDrawsMagic, sizeof(kDrawsMagic));
  const std::int64_t has_spectra = draws.spectra.empty() ? 0 : 1;
  for (std::int64_t v :
       {static_cast<std::int64_t>(draws.procedure), static_cast<std::int64_t>(draws.n),
        static_cast<std::int64_t>(draws.d), static_cast<std::int64_t>(draws.order),
        static_cast<std::int64_t>(draws.M), static_cast<std::int64_t>(draws.half()),
        has_spectra, static_cast<std::int64_t>(draws.radial_draws.cols()),
        static_cast<std::int64_t>(draws.beta_draws.cols())})
    detail::write_raw(out, v);
  for (double w : draws.omegas) detail::write_raw(out, w);
  if (has_spectra)
    for (const CMatrix& f : draws.spectra)
      for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j) {
          detail::write_raw(out, f(i, j).real());
          detail::write_raw(out, f(i, j).imag());
        }
  for (int k : draws.k_draws) detail::write_raw(out, static_cast<std::int64_t>(k));
  for (double lp : draws.log_posterior) detail::write_raw(out, lp);
  for (Eigen::Index m = 0; m < draws.beta_draws.rows(); ++m)
    for (Eigen::Index c = 0; c < draws.beta_draws.cols(); ++c)
      detail::write_raw(out, draws.beta_draws(m, c));
  for (Eigen::Index m = 0; m < draws.radial_draws.rows(); ++m)
    for (Eigen::Index c = 0; c < draws.radial_draws.cols(); ++c) {
      detail::write_raw(out, draws.radial_draws(m, c));
      detail::write_raw(out, draws.location_draws(m, c));
    }
  if (!out) throw io_error("short write to " + path);
}

inline PosteriorDraws read_draws_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(kDrawsMagic, 8))
    throw io_error(path + " is not a draws archive");
  auto next = [&](const char* what) { return detail::read_raw<std::int64_t>(in, what); };
  PosteriorDraws draws;
  draws.procedure = static_cast<Procedure>(next("procedure"));
  draws.n = static_cast<int>(next("n"));
  draws.d = static_cast<int>(next("d"));
  draws.order = static_cast<int>(next("order"));
  draws.M = static_cast<int>(next("draw count"));
  const auto G = next("grid size");
  const auto has_spectra = next("spectra flag");
  const auto L = next("atom count");
  const auto beta_cols = next("beta width");
  draws.omegas.resize(static_cast<std::size_t>(G));
  for (double& w : draws.omegas) w = detail::read_raw<double>(in, "omegas");
  if (has_spectra) {
    draws.spectra.assign(static_cast<std::size_t>(draws.M) * G,
                         CMatrix(draws.d, draws.d));
    for (CMatrix& f : draws.spectra)
      for (int i = 0; i < draws.d; ++i)
        for (int j = 0; j < draws.d; ++j) {
          const double re = detail::read_raw<double>(in, "spectra");
          const double im = detail::read_raw<double>(in, "spectra");
          f(i, j) = Complex(re, im);
        }
  }
  draws.k_draws.resize(static_cast<std::size_t>(draws.M));
  for (int& k : draws.k_draws)
    k = static_cast<int>(detail::read_raw<std::int64_t>(in, "k draws"));
  draws.log_posterior.resize(static_cast<std::size_t>(draws.M));
  for (double& lp : draws.log_posterior) lp = detail::read_raw<double>(in, "log posterior");
  draws.beta_draws.resize(draws.M, beta_cols);
  for (Eigen::Index m = 0; m < draws.M; ++m)
    for (Eigen::Index c = 0; c < beta_cols; ++c)
      draws.beta_draws(m, c) = detail::read_raw<double>(in, "beta draws");
  draws.radial_draws.resize(draws.M, L);
  draws.location_draws.resize(draws.M, L);
  for (Eigen::Index m = 0; m < draws.M; ++m)
    for (Eigen::Index c = 0; c < L; ++c) {
      draws.radial_draws(m, c) = detail::read_raw<double>(in, "radial draws");
      draws.location_draws(m, c) = detail::read_raw<double>(in, "location draws");
    }
  return draws;
}

inline void write_trace_csv(const std::string& path, const PosteriorDraws& draws) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  out << "draw,k,log_posterior\n";
  for (int m = 0; m < draws.M; ++m)
    out << m << "," << draws.k_draws[m] << ","
        << detail::fmt17(draws.log_posterior[m]) << "\n";
  if (!out) throw io_error("short write to " + path);
}

inline std::string band_suffix(double level) {
  return std::to_string(static_cast<int>(std::lround(level * 100.0)));
}

// One CSV per realified matrix component with the pointwise and uniform bands.
inline void write_summary_csvs(const std::string& dir, const SummaryBundle& bundle) {
  const auto d = bundle.uniform.center.empty()
                     ? 0
                     : static_cast<int>(bundle.uniform.center.front().rows());
  const std::string lv = band_suffix(bundle.level);
  const std::size_t G = bundle.omegas.size();
  for (const ComponentLabel& label : component_labels(d)) {
    RMatrix values(static_cast<Eigen::Index>(G), 6);
    for (std::size_t g = 0; g < G; ++g) {
      values(g, 0) = bundle.omegas[g];
      values(g, 1) = realify(bundle.median[g])(label.i, label.j);
      values(g, 2) = bundle.pointwise.lower[g](label.i, label.j);
      values(g, 3) = bundle.pointwise.upper[g](label.i, label.j);
      values(g, 4) = bundle.uniform.lower[g](label.i, label.j);
      values(g, 5) = bundle.uniform.upper[g](label.i, label.j);
    }
    write_csv_table(dir + "/summary_" + label.name + ".csv",
                    {"omega", "median", "lo" + lv + "_pointwise", "hi" + lv + "_pointwise",
                     "lo" + lv + "_uniform", "hi" + lv + "_uniform"},
                    values);
  }
}

inline void write_coherency_csvs(const std::string& dir, const SummaryBundle& bundle) {
  const std::string lv = band_suffix(bundle.level);
  for (const CoherencyBand& band : bundle.coherency) {
    RMatrix values(static_cast<Eigen::Index>(bundle.omegas.size()), 4);
    for (std::size_t g = 0; g < bundle.omegas.size(); ++g) {
      values(g, 0) = bundle.omegas[g];
      values(g, 1) = band.median[g];
      values(g, 2) = band.lower[g];
      values(g, 3) = band.upper[g];
    }
    write_csv_table(dir + "/coherency_" + std::to_string(band.i + 1) + "_" +
                        std::to_string(band.j + 1) + ".csv",
                    {"omega", "median", "lo" + lv, "hi" + lv}, values);
  }
}

// Scalar summary: configuration echo, chain health, and the band scalars.
// Callers append run-specific fields (wall time, errors against a known truth).
inline nlohmann::json summary_json(const McmcConfig& cfg, const PosteriorDraws& draws,
                                   const SummaryBundle& bundle) {
  nlohmann::json j;
  j["procedure"] = procedure_name(draws.procedure);
  j["n"] = draws.n;
  j["d"] = draws.d;
  j["order"] = draws.order;
  j["draws"] = draws.M;
  j["config"] = {{"iterations", cfg.iterations}, {"burn_in", cfg.burn_in},
                 {"thin", cfg.thin},             {"L", cfg.L},
                 {"k_max", cfg.k_max},           {"seed", cfg.seed}};
  j["level"] = bundle.level;
  j["xi"] = bundle.uniform.xi;
  const RMatrix widths = region_widths(bundle.uniform);
  nlohmann::json w;
  for (const ComponentLabel& label : component_labels(draws.d))
    w[label.name] = widths(label.i, label.j);
  j["widths"] = w;
  j["acceptance"] = {{"k", draws.acceptance.k},
                     {"radial", draws.acceptance.radial},
                     {"location", draws.acceptance.location},
                     {"angle", draws.acceptance.angle},
                     {"beta", draws.acceptance.beta}};
  j["diagnostics"] = {{"max_cache_drift", draws.diagnostics.max_cache_drift},
                      {"numeric_rejections", draws.diagnostics.numeric_rejections}};
  return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw io_error("short write to " + path);
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw io_error(path + ": " + e.what());
  }
  return j;
}

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out.push_back(c);
  }
  return out;
}

}  // namespace detail

// Minimal self-contained polyline plot; convenience output only, the numbers
// of record live in the CSV/JSON files.
inline void write_polyline_svg(
    const std::string& path, const std::string& title, const std::string& x_label,
    const std::vector<double>& x,
    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  for (const auto& s : series)
    if (s.second.size() != x.size())
      throw contract_error("write_polyline_svg: series length differs from x");
  if (x.size() < 2) throw contract_error("write_polyline_svg: need at least two points");

  const double W = 760, H = 420, ml = 70, mr = 20, mt = 42, mb = 48;
  double xmin = x.front(), xmax = x.front();
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  double ymin = 0.0, ymax = 0.0;
  bool first = true;
  for (const auto& s : series)
    for (double v : s.second) {
      if (!std::isfinite(v)) continue;
      ymin = first ? v : std::min(ymin, v);
      ymax = first ? v : std::max(ymax, v);
      first = false;
    }
  if (first) throw contract_error("write_polyline_svg: no finite values");
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr); };
  const auto sy = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#ff7f0e", "#9467bd", "#8c564b"};
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  char buf[160];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << detail::svg_escape(title) << "</text>\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
      << "\" height=\"" << H - mt - mb << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + t * (xmax - xmin) / 4.0;
    const double yv = ymin + t * (ymax - ymin) / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
                  "font-family=\"sans-serif\" font-size=\"11\">%.4g</text>\n",
                  sx(xv), H - mb + 16.0, xv);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" "
                  "font-family=\"sans-serif\" font-size=\"11\">%.4g</text>\n",
                  ml - 6.0, sy(yv) + 4.0, yv);
    out << buf;
  }
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << detail::svg_escape(x_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << palette[s % 6]
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(series[s].second[i])) continue;
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(x[i]), sy(series[s].second[i]));
      out << buf;
    }
    out << "\"/>\n";
    const double ly = mt + 16.0 + 16.0 * static_cast<double>(s);
    out << "<line x1=\"" << W - mr - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - mr - 126
        << "\" y2=\"" << ly << "\" stroke=\"" << palette[s % 6]
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << W - mr - 120 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::svg_escape(series[s].first) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw io_error("short write to " + path);
}

}  // namespace bnspec

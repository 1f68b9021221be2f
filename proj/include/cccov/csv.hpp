#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cccov/dataset.hpp"
#include "cccov/estimator.hpp"

namespace cccov {
namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

inline double parse_double(const std::string& field, int row,
                           const std::string& column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw SchemaError("row " + std::to_string(row) + ", column " + column +
                      ": cannot parse '" + field + "' as a number");
  return v;
}

inline std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Reads the dataset CSV schema: required columns y, w, delta, then z1..zp
// (consecutive, starting at z1), optional x_true, c, eps, in any column
// order. An empty w field marks a missing censored value and is legal only
// where delta = 0. Errors name the offending row and column.
inline Dataset read_dataset_csv(std::istream& in,
                                const std::string& source = "input") {
  std::string line;
  if (!std::getline(in, line))
    throw SchemaError(source + ": missing header line");
  auto header = detail::split_csv_line(line);

  std::map<std::string, int> col;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].empty())
      throw SchemaError(source + ": empty header name in column " +
                        std::to_string(j + 1));
    if (!col.emplace(header[j], static_cast<int>(j)).second)
      throw SchemaError(source + ": duplicate column '" + header[j] + "'");
  }

  for (const char* req : {"y", "w", "delta"})
    if (!col.count(req))
      throw SchemaError(source + ": missing required column '" +
                        std::string(req) + "'");

  int p = 0;
  while (col.count("z" + std::to_string(p + 1))) ++p;
  for (const auto& [name, j] : col) {
    (void)j;
    static const std::set<std::string> known_extra = {"x_true", "c", "eps"};
    if (name == "y" || name == "w" || name == "delta") continue;
    if (known_extra.count(name)) continue;
    if (name.size() > 1 && name[0] == 'z') {
      char* end = nullptr;
      long idx = std::strtol(name.c_str() + 1, &end, 10);
      if (*end == '\0' && idx >= 1 && idx <= p &&
          name == "z" + std::to_string(idx))
        continue;
      throw SchemaError(source + ": z columns must be z1..z" +
                        std::to_string(p) + " with no gaps; found '" + name +
                        "'");
    }
    throw SchemaError(source + ": unknown column '" + name + "'");
  }

  bool has_x = col.count("x_true"), has_c = col.count("c"),
       has_eps = col.count("eps");

  std::vector<double> y, w, xs, cs, es;
  std::vector<int> delta;
  std::vector<std::vector<double>> zrows;
  int row = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw SchemaError(source + ": row " + std::to_string(row) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(header.size()));
    auto field = [&](const std::string& name) -> const std::string& {
      return fields[col.at(name)];
    };

    double dv = detail::parse_double(field("delta"), row, "delta");
    if (dv != 0.0 && dv != 1.0)
      throw SchemaError("row " + std::to_string(row) +
                        ", column delta: must be 0 or 1, got '" +
                        field("delta") + "'");
    int d = static_cast<int>(dv);

    const std::string& wf = field("w");
    double wv;
    if (wf.empty()) {
      if (d == 1)
        throw SchemaError("row " + std::to_string(row) +
                          ", column w: missing value but delta = 1");
      wv = nan;
    } else {
      wv = detail::parse_double(wf, row, "w");
    }

    y.push_back(detail::parse_double(field("y"), row, "y"));
    w.push_back(wv);
    delta.push_back(d);
    std::vector<double> zr(p);
    for (int j = 0; j < p; ++j)
      zr[j] = detail::parse_double(field("z" + std::to_string(j + 1)), row,
                                   "z" + std::to_string(j + 1));
    zrows.push_back(std::move(zr));
    if (has_x) xs.push_back(detail::parse_double(field("x_true"), row, "x_true"));
    if (has_c) cs.push_back(detail::parse_double(field("c"), row, "c"));
    if (has_eps) es.push_back(detail::parse_double(field("eps"), row, "eps"));
  }
  if (row == 0) throw SchemaError(source + ": no data rows");

  Dataset d;
  d.y = Eigen::Map<Eigen::VectorXd>(y.data(), row);
  d.w = Eigen::Map<Eigen::VectorXd>(w.data(), row);
  d.delta = Eigen::Map<Eigen::VectorXi>(delta.data(), row);
  d.z.resize(row, p);
  for (int i = 0; i < row; ++i)
    for (int j = 0; j < p; ++j) d.z(i, j) = zrows[i][j];
  if (has_x) d.x_true = Eigen::Map<Eigen::VectorXd>(xs.data(), row);
  if (has_c) d.c = Eigen::Map<Eigen::VectorXd>(cs.data(), row);
  if (has_eps) d.eps = Eigen::Map<Eigen::VectorXd>(es.data(), row);

  try {
    d.validate();
  } catch (const ArgumentError& e) {
    throw SchemaError(source + ": " + e.what());
  }
  return d;
}

inline Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  return read_dataset_csv(in, path);
}

// Writes the same schema back; numbers keep full precision so a round trip
// reproduces the dataset exactly. Missing w prints as an empty field.
inline void write_dataset_csv(std::ostream& out, const Dataset& d) {
  out << "y,w,delta";
  for (int j = 0; j < d.p(); ++j) out << ",z" << (j + 1);
  if (d.x_true) out << ",x_true";
  if (d.c) out << ",c";
  if (d.eps) out << ",eps";
  out << "\n";
  for (int i = 0; i < d.n(); ++i) {
    out << detail::fmt_full(d.y[i]) << ",";
    if (std::isfinite(d.w[i])) out << detail::fmt_full(d.w[i]);
    out << "," << d.delta[i];
    for (int j = 0; j < d.p(); ++j) out << "," << detail::fmt_full(d.z(i, j));
    if (d.x_true) out << "," << detail::fmt_full((*d.x_true)[i]);
    if (d.c) out << "," << detail::fmt_full((*d.c)[i]);
    if (d.eps) out << "," << detail::fmt_full((*d.eps)[i]);
    out << "\n";
  }
}

namespace detail {

inline std::string fmt_or_na(double v, const char* fmt = "%.9g") {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace detail

// Fit output as CSV rows: param, estimate, se, ci_lower, ci_upper.
inline void write_fit_csv(std::ostream& out, const FitResult& fit,
                          const std::vector<std::string>& names) {
  out << "param,estimate,se,ci_lower,ci_upper\n";
  for (int j = 0; j < fit.beta_hat.size(); ++j) {
    out << names[j] << "," << detail::fmt_or_na(fit.beta_hat[j]) << ","
        << detail::fmt_or_na(fit.se[j]) << "," << detail::fmt_or_na(fit.ci(j, 0))
        << "," << detail::fmt_or_na(fit.ci(j, 1)) << "\n";
  }
}

// Human-readable fit report.
inline std::string format_fit_report(const FitResult& fit,
                                     const std::vector<std::string>& names,
                                     double level = 0.95) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "complete cases used: %d of %d rows\n"
                "converged: %s (%d iterations)\n",
                fit.n_used, fit.n_total, fit.converged ? "yes" : "no",
                fit.iterations);
  out << buf << "Wald interval level: "
      << detail::fmt_or_na(level * 100.0, "%.6g") << "%\n";
  std::snprintf(buf, sizeof(buf), "%-10s %12s %12s %12s %12s\n", "param",
                "estimate", "se", "ci_lower", "ci_upper");
  out << buf;
  for (int j = 0; j < fit.beta_hat.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%-10s %12s %12s %12s %12s\n",
                  names[j].c_str(),
                  detail::fmt_or_na(fit.beta_hat[j], "%.4f").c_str(),
                  detail::fmt_or_na(fit.se[j], "%.4f").c_str(),
                  detail::fmt_or_na(fit.ci(j, 0), "%.4f").c_str(),
                  detail::fmt_or_na(fit.ci(j, 1), "%.4f").c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace cccov

/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_DATASET_HPP_
#define KPLS_DATASET_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kpls/errors.hpp"

namespace kpls {

/// What to do when centered responses leave [-1, 1].
enum class ClipPolicy { rescale, clip, reject };

inline const char* to_string(ClipPolicy p) {
  switch (p) {
    case ClipPolicy::rescale:
      return "rescale";
    case ClipPolicy::clip:
      return "clip";
    case ClipPolicy::reject:
      return "reject";
  }
  return "unknown";
}

/*!
 * \brief Regression sample after preprocessing.
 *
 * y is centered (sum zero up to roundoff) and bounded by one in absolute
 * value; y_mean and y_scale record the affine map needed to undo the
 * preprocessing, so raw responses are recovered as y * y_scale + y_mean.
 */
struct Dataset {
  Eigen::MatrixXd x;       ///< n x d design, rows are observations
  Eigen::VectorXd y;       ///< centered responses
  double y_mean = 0.0;     ///< subtracted location
  double y_scale = 1.0;    ///< divisor applied after centering
  bool bounded = false;    ///< max_i |y_i| <= 1 holds

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
};

/*!
 * \brief Centers the responses and enforces the |y| <= 1 contract.
 *
 * rescale divides the centered vector by max(1, max |y_i|), which keeps the
 * zero mean. clip clamps into [-1, 1]; since clamping moves the mean, the
 * center and clamp steps alternate until the mean settles below 1e-13 (the
 * shifts contract geometrically) and every shift is folded into y_mean.
 * reject throws a BoundsError instead of altering any value.
 */
inline Dataset preprocess(const Eigen::MatrixXd& raw_x,
                          const Eigen::VectorXd& raw_y,
                          ClipPolicy policy = ClipPolicy::rescale) {
  const Eigen::Index n = raw_x.rows();
  if (n != raw_y.size()) {
    throw DimensionError("preprocess: x has " + std::to_string(n) +
                         " rows but y has " + std::to_string(raw_y.size()));
  }
  if (n < 2) {
    throw DimensionError("preprocess needs at least two observations");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(raw_y[i])) {
      throw BoundsError("preprocess: response " + std::to_string(i) +
                        " is not finite");
    }
  }

  Dataset out;
  out.x = raw_x;
  out.y_mean = raw_y.mean();
  out.y = raw_y.array() - out.y_mean;

  const double cmax = out.y.cwiseAbs().maxCoeff();
  switch (policy) {
    case ClipPolicy::rescale: {
      out.y_scale = std::max(1.0, cmax);
      out.y /= out.y_scale;
      break;
    }
    case ClipPolicy::clip: {
      for (int pass = 0; pass < 1000; ++pass) {
        out.y = out.y.cwiseMax(-1.0).cwiseMin(1.0);
        const double drift = out.y.mean();
        if (std::abs(drift) <= 1e-13) break;
        out.y.array() -= drift;
        out.y_mean += drift;
      }
      break;
    }
    case ClipPolicy::reject: {
      if (cmax > 1.0) {
        throw BoundsError("centered responses reach " + std::to_string(cmax) +
                          " under the reject policy");
      }
      break;
    }
  }
  out.bounded = true;
  return out;
}

/// Raw file contents of a regression CSV: features plus one target column.
struct RawData {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  std::string target_name;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_double(const std::string& s, const std::string& path,
                           std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() &&
           std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    }
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path + ":" + std::to_string(line_no) +
                  ": cannot parse '" + s + "' as a number");
  }
}

}  // namespace detail

/*!
 * \brief Reads a comma-separated table with a header row.
 *
 * The last column is the target, the preceding ones are features. Every data
 * row must have the header's width and parse as numbers; violations raise an
 * IoError naming the file and line.
 */
inline RawData read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() < 2) {
    throw IoError(path + ": need at least one feature column and a target");
  }

  RawData raw;
  raw.feature_names.assign(header.begin(), header.end() - 1);
  raw.target_name = header.back();

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields, found " +
                    std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      row[j] = detail::parse_double(fields[j], path, line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - 1;
  raw.x.resize(n, d);
  raw.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) raw.x(i, j) = rows[i][j];
    raw.y[i] = rows[i][d];
  }
  return raw;
}

}  // namespace kpls

#endif  // KPLS_DATASET_HPP_

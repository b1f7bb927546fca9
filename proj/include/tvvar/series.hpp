#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tvvar/algebra.hpp"
#include "tvvar/error.hpp"

namespace tvvar {

/// T x d panel of observations, rows ordered in time.
struct SeriesMatrix {
  Mat values;
  std::vector<std::string> names;
  std::vector<std::string> labels; ///< optional row labels (dates); empty when absent

  SeriesMatrix() = default;
  explicit SeriesMatrix(Mat v, std::vector<std::string> n = {}, std::vector<std::string> l = {})
      : values(std::move(v)), names(std::move(n)), labels(std::move(l)) {
    if (names.empty()) {
      for (Eigen::Index j = 0; j < values.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
    }
    validate();
  }

  int T() const { return static_cast<int>(values.rows()); }
  int d() const { return static_cast<int>(values.cols()); }

  /// Observation x_t with the 1-based time index used throughout (tau_t = t/T).
  auto obs(int t) const { return values.row(t - 1).transpose(); }

  void validate() const {
    if (values.rows() == 0 || values.cols() == 0) throw DataError("series is empty");
    if (static_cast<Eigen::Index>(names.size()) != values.cols()) {
      throw DataError("series has " + std::to_string(values.cols()) + " columns but " +
                      std::to_string(names.size()) + " names");
    }
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != values.rows()) {
      throw DataError("row label count does not match sample size");
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      for (Eigen::Index j = 0; j < values.cols(); ++j) {
        if (!std::isfinite(values(i, j))) {
          throw DataError("non-finite value at row " + std::to_string(i + 1) + ", column " +
                          std::to_string(j + 1));
        }
      }
    }
  }

  /// First `n` observations, names and labels carried over.
  SeriesMatrix head(int n) const {
    SeriesMatrix s;
    s.values = values.topRows(n);
    s.names = names;
    if (!labels.empty()) s.labels.assign(labels.begin(), labels.begin() + n);
    return s;
  }
};

/// tau_t = t/T on t = first..T.
inline std::vector<double> time_grid(int T, int first = 1) {
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(T - first + 1));
  for (int t = first; t <= T; ++t) g.push_back(static_cast<double>(t) / T);
  return g;
}

} // namespace tvvar

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "btlab/core.hpp"
#include "btlab/features.hpp"

namespace btlab {

/// Dense row-major matrix of feature values.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  /// Builds a matrix from row vectors; throws on ragged input.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols_) throw Error("ragged feature rows");
      std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
  }

  [[nodiscard]] Matrix select_rows(std::span<const std::size_t> idx) const {
    Matrix m(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = row(idx[i]);
      std::copy(src.begin(), src.end(), m.row(i).begin());
    }
    return m;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// One feature row per sample.
inline Matrix feature_matrix(const Dataset& ds, FeatureSchema schema) {
  Matrix m(ds.size(), schema_size(schema));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto v = extract(ds.samples[i], schema);
    std::copy(v.values.begin(), v.values.end(), m.row(i).begin());
  }
  return m;
}

inline std::vector<std::string> labels_for(const Dataset& ds, std::string_view key) {
  std::vector<std::string> y;
  y.reserve(ds.size());
  for (const auto& s : ds.samples) y.push_back(s.label(key));
  return y;
}

}  // namespace btlab

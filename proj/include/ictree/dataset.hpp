#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ictree/errors.hpp"

namespace ictree {

enum class ColumnKind { Numeric, Symbolic };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  /// Symbolic only. Order is frozen at load time and is part of the model
  /// contract; cells store indices into this list.
  std::vector<std::string> categories;
};

/// Immutable column-typed table. Numeric cells hold the value, symbolic cells
/// hold the category code as a double. Row-major storage.
class Dataset {
 public:
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Dataset(std::vector<ColumnSpec> columns, Storage cells);

  Eigen::Index n() const { return cells_.rows(); }
  Eigen::Index m() const { return cells_.cols(); }

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const ColumnSpec& column(Eigen::Index j) const { return columns_[static_cast<std::size_t>(j)]; }
  const Storage& cells() const { return cells_; }

  double cell(Eigen::Index i, Eigen::Index j) const { return cells_(i, j); }
  int code(Eigen::Index i, Eigen::Index j) const { return static_cast<int>(cells_(i, j)); }

  Eigen::VectorXd row(Eigen::Index i) const { return cells_.row(i).transpose(); }

  /// Dataset column indices of numeric / symbolic columns, ascending.
  const std::vector<Eigen::Index>& numeric_columns() const { return numeric_cols_; }
  const std::vector<Eigen::Index>& symbolic_columns() const { return symbolic_cols_; }
  Eigen::Index num_numeric() const { return static_cast<Eigen::Index>(numeric_cols_.size()); }
  Eigen::Index num_symbolic() const { return static_cast<Eigen::Index>(symbolic_cols_.size()); }

  /// Value of the k-th numeric column (numeric order) in row i.
  double numeric_value(Eigen::Index i, Eigen::Index k) const {
    return cells_(i, numeric_cols_[static_cast<std::size_t>(k)]);
  }

  /// Row i restricted to numeric columns, in numeric order.
  Eigen::VectorXd numeric_row(Eigen::Index i) const;

  /// Block of the given rows over the given numeric-order column indices.
  Eigen::MatrixXd numeric_block(const std::vector<Eigen::Index>& rows,
                                const std::vector<Eigen::Index>& numeric_order_cols) const;

  Eigen::Index find_column(const std::string& name) const;  // -1 when absent

 private:
  std::vector<ColumnSpec> columns_;
  Storage cells_;
  std::vector<Eigen::Index> numeric_cols_;
  std::vector<Eigen::Index> symbolic_cols_;
};

/// Reads a comma-delimited file with a header row. Without a spec, a column is
/// numeric iff every cell parses as a finite real; otherwise it is symbolic
/// with categories equal to the sorted distinct strings observed. Missing
/// (empty) cells are rejected.
Dataset load_csv(const std::string& path,
                 const std::optional<std::vector<ColumnSpec>>& spec = std::nullopt);

/// Writes the dataset back as CSV; numeric cells use a round-trip decimal form.
void save_csv(const Dataset& data, const std::string& path);
void save_csv(const Dataset& data, std::ostream& out);

/// Sidecar schema file (JSON) with per-column kind and category order.
std::vector<ColumnSpec> load_schema(const std::string& path);
void save_schema(const Dataset& data, const std::string& path);

/// Disjoint (train, test) row partition. Test size is round(n * test_fraction)
/// clamped to [1, n - 1]; deterministic in the seed.
std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace ictree

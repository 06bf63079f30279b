#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "ictree/dataset.hpp"
#include "ictree/ica.hpp"
#include "ictree/multinomial.hpp"
#include "ictree/qpd.hpp"

namespace ictree {

/// Oblique split over the numeric columns (dataset numeric order), stored with
/// the node mean absorbed into the right-hand side. The strictly-less side is
/// the left child; boundary points route right.
struct LinearSplit {
  Eigen::VectorXd coefficients;
  double threshold = 0.0;

  bool goes_left(const Eigen::VectorXd& numeric_row) const {
    return coefficients.dot(numeric_row) < threshold;
  }
};

/// One-vs-rest split on a symbolic column; rows equal to the value go left.
struct SymbolicSplit {
  Eigen::Index column = 0;  // dataset column index
  int value = 0;
};

/// Terminal node: prior weight, the leaf's own coordinate transform over its
/// non-degenerate numeric columns, one quantile distribution per transformed
/// component and one multinomial per symbolic column. Numeric columns that
/// are constant on the leaf's rows are dropped from the transform and kept as
/// (numeric-order index, constant) pairs.
struct Leaf {
  double weight = 0.0;
  IcaTransform<double> transform;
  std::vector<Eigen::Index> kept;  // numeric-order indices covered by the transform
  std::vector<Qpd<double>> component_dists;
  std::vector<Multinomial> symbolic_dists;  // symbolic-column order
  std::vector<std::pair<Eigen::Index, double>> dropped;
  bool ica_converged = true;
  Eigen::Index n_rows = 0;
};

struct InnerNode {
  std::variant<LinearSplit, SymbolicSplit> split;
  int left = -1;
  int right = -1;
};

using Node = std::variant<InnerNode, Leaf>;

struct Hyperparams {
  double min_samples_leaf_fraction = 0.2;  // in (0, 1), relative to the training size
  int max_depth = -1;                      // -1: unbounded
  int qpd_resolution = 16;
  int ica_max_iter = 1000;
  double ica_tol = 1e-4;
  double min_improvement = 1e-4;
  bool baseline_mode = false;  // identity transform everywhere (plain JPT)
};

/// Deterministic binary probability tree in per-node independent-component
/// coordinates. Immutable once built; queries are safe to run concurrently.
class IcTreeModel {
 public:
  IcTreeModel(std::vector<ColumnSpec> columns, std::vector<Node> nodes, Hyperparams hp,
              std::uint64_t seed, Eigen::Index n_train, int ica_nonconverged);

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const std::vector<Eigen::Index>& numeric_columns() const { return numeric_cols_; }
  const std::vector<Eigen::Index>& symbolic_columns() const { return symbolic_cols_; }
  Eigen::Index num_numeric() const { return static_cast<Eigen::Index>(numeric_cols_.size()); }
  Eigen::Index num_symbolic() const { return static_cast<Eigen::Index>(symbolic_cols_.size()); }

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return 0; }

  Eigen::Index leaf_count() const { return static_cast<Eigen::Index>(leaf_nodes_.size()); }
  const Leaf& leaf(Eigen::Index id) const {
    return std::get<Leaf>(nodes_[static_cast<std::size_t>(leaf_nodes_[static_cast<std::size_t>(id)])]);
  }
  int leaf_node_index(Eigen::Index id) const { return leaf_nodes_[static_cast<std::size_t>(id)]; }

  /// Deterministic descent to the unique leaf whose region contains the row.
  /// Throws UnknownCategory on out-of-range symbolic codes.
  Eigen::Index route(const Eigen::VectorXd& full_row) const;

  /// Row restricted to numeric columns, in numeric order.
  Eigen::VectorXd gather_numeric(const Eigen::VectorXd& full_row) const;

  std::int64_t param_count() const;

  const Hyperparams& hyperparams() const { return hp_; }
  std::uint64_t seed() const { return seed_; }
  Eigen::Index n_train() const { return n_train_; }
  int ica_nonconverged() const { return ica_nonconverged_; }

  void check_symbolic_codes(const Eigen::VectorXd& full_row) const;

 private:
  std::vector<ColumnSpec> columns_;
  std::vector<Node> nodes_;  // preorder; root at 0
  std::vector<int> leaf_nodes_;
  std::vector<Eigen::Index> numeric_cols_;
  std::vector<Eigen::Index> symbolic_cols_;
  Hyperparams hp_;
  std::uint64_t seed_ = 0;
  Eigen::Index n_train_ = 0;
  int ica_nonconverged_ = 0;
};

/// Learns an IC-Tree by recursive induction: at every node the numeric block
/// is re-expressed by ICA (identity in baseline mode), candidate splits are
/// scored on the transformed axes and the symbolic columns, and the best
/// admissible one is taken until a stopping rule fires.
IcTreeModel fit(const Dataset& data, const Hyperparams& hp, std::uint64_t seed);

struct SplitChoice {
  std::variant<LinearSplit, SymbolicSplit> split;
  double improvement = 0.0;
  double gap = 0.0;  // empty-gap width around a numeric threshold; 0 for symbolic
};

/// Scores every candidate split of the given rows. Numeric candidates are
/// midpoints between consecutive distinct values on each transformed axis,
/// scored by the relative variance reduction of that axis averaged with the
/// relative entropy reduction of every symbolic column; symbolic candidates
/// are one-vs-rest per category, scored by the entropy terms alone. Ties go
/// to the widest empty gap, then the lowest axis. Absent when no candidate
/// leaves both children at or above min_rows.
std::optional<SplitChoice> best_split(const Dataset& data, const std::vector<Eigen::Index>& rows,
                                      const IcaTransform<double>& node_transform,
                                      const std::vector<Eigen::Index>& kept, double min_rows);

}  // namespace ictree

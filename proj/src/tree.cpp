#include "ictree/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ictree {

namespace {

constexpr std::uint64_t kNodeIcaStream = 0;
constexpr std::uint64_t kLeftStream = 1;
constexpr std::uint64_t kRightStream = 2;
constexpr std::uint64_t kLeafIcaStream = 3;

/// Splits numeric columns (numeric order) into those that vary on the rows
/// and those constant there, the latter with their value.
void scan_constant_columns(const Dataset& data, const std::vector<Eigen::Index>& rows,
                           std::vector<Eigen::Index>& kept,
                           std::vector<std::pair<Eigen::Index, double>>& dropped) {
  kept.clear();
  dropped.clear();
  for (Eigen::Index k = 0; k < data.num_numeric(); ++k) {
    const double first = data.numeric_value(rows[0], k);
    bool constant = true;
    for (const Eigen::Index i : rows) {
      if (data.numeric_value(i, k) != first) {
        constant = false;
        break;
      }
    }
    if (constant)
      dropped.emplace_back(k, first);
    else
      kept.push_back(k);
  }
}

/// ICA over a block with the fallback chain: baseline mode or too few rows
/// use the identity, and a rank-deficient covariance falls back to the
/// identity as well (the block is centered either way).
IcaTransform<double> block_transform(const Eigen::MatrixXd& block, const Hyperparams& hp,
                                     std::uint64_t seed) {
  if (hp.baseline_mode || block.rows() <= block.cols())
    return IcaTransform<double>::identity(block.colwise().mean().transpose());
  try {
    return fast_ica(block, block.cols(), hp.ica_max_iter, hp.ica_tol, seed);
  } catch (const SingularCovariance&) {
    return IcaTransform<double>::identity(block.colwise().mean().transpose());
  }
}

double entropy(const Eigen::VectorXd& counts) {
  const double n = counts.sum();
  double h = 0.0;
  for (Eigen::Index c = 0; c < counts.size(); ++c) {
    if (counts(c) > 0.0) {
      const double p = counts(c) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

struct Candidate {
  double score = 0.0;
  double gap = 0.0;
  int order = 0;  // transformed axis index, or m_eff + symbolic slot
  bool numeric = false;
  Eigen::Index axis = 0;       // numeric: transformed axis
  double threshold = 0.0;      // numeric: transformed-space midpoint
  Eigen::Index sym_slot = 0;   // symbolic: slot in symbolic order
  int value = 0;               // symbolic: category code
};

bool better(const Candidate& a, const Candidate& b) {
  const double score_eps = 1e-12 * std::max({1.0, std::abs(a.score), std::abs(b.score)});
  if (std::abs(a.score - b.score) > score_eps) return a.score > b.score;
  const double gap_eps = 1e-12 * std::max({1.0, std::abs(a.gap), std::abs(b.gap)});
  if (std::abs(a.gap - b.gap) > gap_eps) return a.gap > b.gap;
  if (a.order != b.order) return a.order < b.order;
  if (a.numeric) return a.threshold < b.threshold;
  return a.value < b.value;
}

}  // namespace

std::optional<SplitChoice> best_split(const Dataset& data, const std::vector<Eigen::Index>& rows,
                                      const IcaTransform<double>& node_transform,
                                      const std::vector<Eigen::Index>& kept, double min_rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 2) return std::nullopt;

  const auto& sym_cols = data.symbolic_columns();
  const auto n_sym = static_cast<Eigen::Index>(sym_cols.size());
  const auto m_eff = static_cast<Eigen::Index>(kept.size());

  std::vector<Eigen::VectorXd> parent_counts(static_cast<std::size_t>(n_sym));
  std::vector<double> parent_entropy(static_cast<std::size_t>(n_sym));
  for (Eigen::Index s = 0; s < n_sym; ++s) {
    const auto n_cats =
        static_cast<Eigen::Index>(data.column(sym_cols[static_cast<std::size_t>(s)]).categories.size());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_cats);
    for (const Eigen::Index i : rows) counts(data.code(i, sym_cols[static_cast<std::size_t>(s)])) += 1.0;
    parent_counts[static_cast<std::size_t>(s)] = counts;
    parent_entropy[static_cast<std::size_t>(s)] = entropy(counts);
  }

  // Relative entropy reduction of symbolic column s under a partition given
  // by its left category counts; 0 when the parent is already pure.
  const auto entropy_reduction = [&](Eigen::Index s, const Eigen::VectorXd& left_counts) {
    const double h_parent = parent_entropy[static_cast<std::size_t>(s)];
    if (!(h_parent > 0.0)) return 0.0;
    const Eigen::VectorXd right_counts = parent_counts[static_cast<std::size_t>(s)] - left_counts;
    const double n_left = left_counts.sum();
    const double n_right = right_counts.sum();
    const double h_children =
        (n_left * entropy(left_counts) + n_right * entropy(right_counts)) / static_cast<double>(n);
    return (h_parent - h_children) / h_parent;
  };

  std::optional<Candidate> best;
  const auto consider = [&](const Candidate& c) {
    if (!best || better(c, *best)) best = c;
  };

  if (m_eff > 0) {
    const Eigen::MatrixXd block = data.numeric_block(rows, kept);
    const Eigen::MatrixXd e = transform_block(node_transform, block);

    std::vector<Eigen::Index> sorted(static_cast<std::size_t>(n));
    for (Eigen::Index axis = 0; axis < m_eff; ++axis) {
      const Eigen::VectorXd vals = e.col(axis);
      std::iota(sorted.begin(), sorted.end(), Eigen::Index(0));
      std::sort(sorted.begin(), sorted.end(),
                [&](Eigen::Index a, Eigen::Index b) { return vals(a) < vals(b); });

      const double total_sum = vals.sum();
      const double total_sumsq = vals.array().square().sum();
      const double mean = total_sum / static_cast<double>(n);
      const double var_parent = std::max(0.0, total_sumsq / static_cast<double>(n) - mean * mean);
      if (!(var_parent > 0.0)) continue;

      std::vector<Eigen::VectorXd> left_counts(static_cast<std::size_t>(n_sym));
      for (Eigen::Index s = 0; s < n_sym; ++s)
        left_counts[static_cast<std::size_t>(s)] =
            Eigen::VectorXd::Zero(parent_counts[static_cast<std::size_t>(s)].size());

      double sum_left = 0.0, sumsq_left = 0.0;
      for (Eigen::Index p = 1; p < n; ++p) {
        const Eigen::Index prev = sorted[static_cast<std::size_t>(p - 1)];
        const double v_prev = vals(prev);
        sum_left += v_prev;
        sumsq_left += v_prev * v_prev;
        for (Eigen::Index s = 0; s < n_sym; ++s)
          left_counts[static_cast<std::size_t>(s)](
              data.code(rows[static_cast<std::size_t>(prev)], sym_cols[static_cast<std::size_t>(s)])) += 1.0;

        const double v_next = vals(sorted[static_cast<std::size_t>(p)]);
        if (!(v_next > v_prev)) continue;

        const auto n_left = static_cast<double>(p);
        const auto n_right = static_cast<double>(n - p);
        if (n_left < min_rows || n_right < min_rows) continue;

        const double mean_left = sum_left / n_left;
        const double var_left = std::max(0.0, sumsq_left / n_left - mean_left * mean_left);
        const double mean_right = (total_sum - sum_left) / n_right;
        const double var_right =
            std::max(0.0, (total_sumsq - sumsq_left) / n_right - mean_right * mean_right);
        const double var_children = (n_left * var_left + n_right * var_right) / static_cast<double>(n);
        const double var_reduction = (var_parent - var_children) / var_parent;

        double score = var_reduction;
        for (Eigen::Index s = 0; s < n_sym; ++s)
          score += entropy_reduction(s, left_counts[static_cast<std::size_t>(s)]);
        score /= static_cast<double>(1 + n_sym);

        Candidate c;
        c.score = score;
        c.gap = v_next - v_prev;
        c.order = static_cast<int>(axis);
        c.numeric = true;
        c.axis = axis;
        c.threshold = 0.5 * (v_prev + v_next);
        consider(c);
      }
    }
  }

  for (Eigen::Index s = 0; s < n_sym && n_sym > 0; ++s) {
    const Eigen::Index col = sym_cols[static_cast<std::size_t>(s)];
    const Eigen::VectorXd& counts = parent_counts[static_cast<std::size_t>(s)];
    for (Eigen::Index v = 0; v < counts.size(); ++v) {
      const double n_left = counts(v);
      if (!(n_left > 0.0) || !(n_left < static_cast<double>(n))) continue;
      if (n_left < min_rows || static_cast<double>(n) - n_left < min_rows) continue;

      std::vector<Eigen::VectorXd> left_counts(static_cast<std::size_t>(n_sym));
      for (Eigen::Index s2 = 0; s2 < n_sym; ++s2)
        left_counts[static_cast<std::size_t>(s2)] =
            Eigen::VectorXd::Zero(parent_counts[static_cast<std::size_t>(s2)].size());
      for (const Eigen::Index i : rows) {
        if (data.code(i, col) != static_cast<int>(v)) continue;
        for (Eigen::Index s2 = 0; s2 < n_sym; ++s2)
          left_counts[static_cast<std::size_t>(s2)](data.code(i, sym_cols[static_cast<std::size_t>(s2)])) +=
              1.0;
      }

      double score = 0.0;
      for (Eigen::Index s2 = 0; s2 < n_sym; ++s2)
        score += entropy_reduction(s2, left_counts[static_cast<std::size_t>(s2)]);
      score /= static_cast<double>(n_sym);

      Candidate c;
      c.score = score;
      c.gap = 0.0;
      c.order = static_cast<int>(m_eff + s);
      c.numeric = false;
      c.sym_slot = s;
      c.value = static_cast<int>(v);
      consider(c);
    }
  }

  if (!best) return std::nullopt;

  SplitChoice choice;
  choice.improvement = best->score;
  choice.gap = best->gap;
  if (best->numeric) {
    LinearSplit split;
    split.coefficients = Eigen::VectorXd::Zero(data.num_numeric());
    for (Eigen::Index k = 0; k < m_eff; ++k)
      split.coefficients(kept[static_cast<std::size_t>(k)]) = node_transform.unmixing(best->axis, k);
    split.threshold = best->threshold + node_transform.unmixing.row(best->axis).dot(node_transform.mean);
    choice.split = std::move(split);
  } else {
    choice.split = SymbolicSplit{sym_cols[static_cast<std::size_t>(best->sym_slot)], best->value};
  }
  return choice;
}

namespace {

struct Learner {
  const Dataset& data;
  const Hyperparams& hp;
  double min_rows;
  Eigen::Index n_total;
  std::vector<Node> nodes;
  int nonconverged = 0;

  Leaf fit_leaf(const std::vector<Eigen::Index>& rows, std::uint64_t seed) {
    Leaf leaf;
    leaf.weight = static_cast<double>(rows.size()) / static_cast<double>(n_total);
    leaf.n_rows = static_cast<Eigen::Index>(rows.size());
    scan_constant_columns(data, rows, leaf.kept, leaf.dropped);

    bool identity_only = leaf.kept.empty();
    for (;;) {
      leaf.component_dists.clear();
      if (leaf.kept.empty()) {
        leaf.transform = IcaTransform<double>::identity(Eigen::VectorXd(0));
        break;
      }
      const Eigen::MatrixXd block = data.numeric_block(rows, leaf.kept);
      leaf.transform =
          identity_only ? IcaTransform<double>::identity(block.colwise().mean().transpose())
                        : block_transform(block, hp, seed);
      const Eigen::MatrixXd e = transform_block(leaf.transform, block);
      try {
        for (Eigen::Index j = 0; j < e.cols(); ++j)
          leaf.component_dists.push_back(Qpd<double>::fit(e.col(j), hp.qpd_resolution));
        break;
      } catch (const DegenerateSupport&) {
        // Cannot happen after whitening or on varying centered columns, but a
        // near-tie in floating point is handled by retrying untransformed.
        if (identity_only) throw;
        identity_only = true;
      }
    }
    if (!leaf.transform.converged) ++nonconverged;
    leaf.ica_converged = leaf.transform.converged;

    for (const Eigen::Index col : data.symbolic_columns()) {
      Eigen::VectorXd counts =
          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.column(col).categories.size()));
      for (const Eigen::Index i : rows) counts(data.code(i, col)) += 1.0;
      leaf.symbolic_dists.push_back(Multinomial::from_counts(counts));
    }
    return leaf;
  }

  int build(const std::vector<Eigen::Index>& rows, int depth, std::uint64_t node_seed) {
    const bool depth_stop = hp.max_depth >= 0 && depth >= hp.max_depth;
    std::optional<SplitChoice> choice;
    if (!depth_stop && rows.size() >= 2) {
      std::vector<Eigen::Index> kept;
      std::vector<std::pair<Eigen::Index, double>> dropped;
      scan_constant_columns(data, rows, kept, dropped);
      IcaTransform<double> t = IcaTransform<double>::identity(Eigen::VectorXd(0));
      if (!kept.empty()) {
        t = block_transform(data.numeric_block(rows, kept), hp, derive_seed(node_seed, kNodeIcaStream));
        if (!t.converged) ++nonconverged;
      }
      choice = best_split(data, rows, t, kept, min_rows);
    }

    if (choice && choice->improvement >= hp.min_improvement) {
      std::vector<Eigen::Index> left, right;
      std::visit(
          [&](const auto& split) {
            using T = std::decay_t<decltype(split)>;
            for (const Eigen::Index i : rows) {
              bool goes_left;
              if constexpr (std::is_same_v<T, LinearSplit>)
                goes_left = split.goes_left(data.numeric_row(i));
              else
                goes_left = data.code(i, split.column) == split.value;
              (goes_left ? left : right).push_back(i);
            }
          },
          choice->split);
      if (!left.empty() && !right.empty()) {
        const auto self = static_cast<int>(nodes.size());
        nodes.emplace_back(InnerNode{choice->split, -1, -1});
        const int l = build(left, depth + 1, derive_seed(node_seed, kLeftStream));
        const int r = build(right, depth + 1, derive_seed(node_seed, kRightStream));
        auto& inner = std::get<InnerNode>(nodes[static_cast<std::size_t>(self)]);
        inner.left = l;
        inner.right = r;
        return self;
      }
    }

    const auto self = static_cast<int>(nodes.size());
    nodes.emplace_back(fit_leaf(rows, derive_seed(node_seed, kLeafIcaStream)));
    return self;
  }
};

}  // namespace

IcTreeModel fit(const Dataset& data, const Hyperparams& hp, std::uint64_t seed) {
  if (!(hp.min_samples_leaf_fraction > 0.0 && hp.min_samples_leaf_fraction < 1.0))
    throw std::invalid_argument("fit: min_samples_leaf_fraction must be in (0, 1)");
  if (hp.qpd_resolution < 1) throw std::invalid_argument("fit: qpd_resolution must be >= 1");

  Learner learner{data, hp, hp.min_samples_leaf_fraction * static_cast<double>(data.n()),
                  data.n(), {}, 0};
  std::vector<Eigen::Index> all(static_cast<std::size_t>(data.n()));
  std::iota(all.begin(), all.end(), Eigen::Index(0));
  learner.build(all, 0, seed);
  return IcTreeModel(data.columns(), std::move(learner.nodes), hp, seed, data.n(),
                     learner.nonconverged);
}

IcTreeModel::IcTreeModel(std::vector<ColumnSpec> columns, std::vector<Node> nodes, Hyperparams hp,
                         std::uint64_t seed, Eigen::Index n_train, int ica_nonconverged)
    : columns_(std::move(columns)),
      nodes_(std::move(nodes)),
      hp_(hp),
      seed_(seed),
      n_train_(n_train),
      ica_nonconverged_(ica_nonconverged) {
  if (nodes_.empty()) throw std::invalid_argument("IcTreeModel: no nodes");
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].kind == ColumnKind::Numeric)
      numeric_cols_.push_back(static_cast<Eigen::Index>(j));
    else
      symbolic_cols_.push_back(static_cast<Eigen::Index>(j));
  }
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (const auto* leaf = std::get_if<Leaf>(&nodes_[i])) {
      leaf_nodes_.push_back(static_cast<int>(i));
      weight_sum += leaf->weight;
      if (static_cast<Eigen::Index>(leaf->kept.size() + leaf->dropped.size()) != num_numeric() ||
          leaf->component_dists.size() != leaf->kept.size() ||
          static_cast<Eigen::Index>(leaf->symbolic_dists.size()) != num_symbolic())
        throw std::invalid_argument("IcTreeModel: leaf shape does not match the schema");
    } else {
      const auto& inner = std::get<InnerNode>(nodes_[i]);
      if (inner.left < 0 || inner.right < 0 ||
          inner.left >= static_cast<int>(nodes_.size()) ||
          inner.right >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("IcTreeModel: dangling child index");
      if (const auto* linear = std::get_if<LinearSplit>(&inner.split)) {
        if (linear->coefficients.size() != num_numeric() || linear->coefficients.isZero(0.0))
          throw std::invalid_argument("IcTreeModel: degenerate linear split");
      }
    }
  }
  if (std::abs(weight_sum - 1.0) > 1e-9)
    throw std::invalid_argument("IcTreeModel: leaf weights must sum to 1");
}

void IcTreeModel::check_symbolic_codes(const Eigen::VectorXd& full_row) const {
  for (const Eigen::Index col : symbolic_cols_) {
    const int code = static_cast<int>(full_row(col));
    const auto n_cats = static_cast<int>(columns_[static_cast<std::size_t>(col)].categories.size());
    if (code < 0 || code >= n_cats ||
        static_cast<double>(code) != full_row(col))
      throw UnknownCategory("route: invalid category code in column '" +
                            columns_[static_cast<std::size_t>(col)].name + "'");
  }
}

Eigen::VectorXd IcTreeModel::gather_numeric(const Eigen::VectorXd& full_row) const {
  Eigen::VectorXd out(num_numeric());
  for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = full_row(numeric_cols_[static_cast<std::size_t>(k)]);
  return out;
}

Eigen::Index IcTreeModel::route(const Eigen::VectorXd& full_row) const {
  if (full_row.size() != static_cast<Eigen::Index>(columns_.size()))
    throw std::invalid_argument("route: row width does not match schema");
  check_symbolic_codes(full_row);
  const Eigen::VectorXd x_num = gather_numeric(full_row);

  int idx = 0;
  while (const auto* inner = std::get_if<InnerNode>(&nodes_[static_cast<std::size_t>(idx)])) {
    const bool left = std::visit(
        [&](const auto& split) {
          using T = std::decay_t<decltype(split)>;
          if constexpr (std::is_same_v<T, LinearSplit>)
            return split.goes_left(x_num);
          else
            return static_cast<int>(full_row(split.column)) == split.value;
        },
        inner->split);
    idx = left ? inner->left : inner->right;
  }
  // leaf_nodes_ ascends in node order
  const auto it = std::lower_bound(leaf_nodes_.begin(), leaf_nodes_.end(), idx);
  return static_cast<Eigen::Index>(it - leaf_nodes_.begin());
}

std::int64_t IcTreeModel::param_count() const {
  std::int64_t total = 0;
  for (const Node& node : nodes_) {
    if (const auto* inner = std::get_if<InnerNode>(&node)) {
      if (std::holds_alternative<LinearSplit>(inner->split))
        total += static_cast<std::int64_t>(num_numeric()) + 1;
      else
        total += 1;
    } else {
      const auto& leaf = std::get<Leaf>(node);
      const auto m_eff = static_cast<std::int64_t>(leaf.kept.size());
      total += m_eff * m_eff + m_eff + 1;  // matrix, mean, weight
      for (const auto& qpd : leaf.component_dists) total += qpd.param_count();
      for (const auto& dist : leaf.symbolic_dists) total += dist.size() - 1;
    }
  }
  return total;
}

}  // namespace ictree

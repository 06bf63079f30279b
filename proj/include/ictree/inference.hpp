#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ictree/rng.hpp"
#include "ictree/tree.hpp"

namespace ictree {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Hyperrectangle query: an optional closed interval per numeric column
/// (numeric order) and an optional allowed-category mask per symbolic column
/// (symbolic order).
struct Evidence {
  std::vector<std::optional<Interval>> numeric;
  std::vector<std::optional<std::vector<bool>>> symbolic;

  static Evidence none(const IcTreeModel& model) {
    Evidence ev;
    ev.numeric.resize(static_cast<std::size_t>(model.num_numeric()));
    ev.symbolic.resize(static_cast<std::size_t>(model.num_symbolic()));
    return ev;
  }

  bool empty() const;
  /// True when the full row satisfies every stated bound.
  bool consistent(const IcTreeModel& model, const Eigen::VectorXd& full_row) const;
  void validate() const;  // lo <= hi for every stated bound
};

/// log of the tree density: sum over all leaves of
/// weight * |det W| * prod qpd_pdf(components) * prod multinomial_pmf.
/// -inf when no leaf gives the row positive density.
double log_density(const IcTreeModel& model, const Eigen::VectorXd& full_row);

struct LogLikelihoodReport {
  std::optional<double> avg;  // mean over rows with positive density; absent when none
  double zero_fraction = 0.0;
  Eigen::Index n = 0;
};

LogLikelihoodReport avg_log_likelihood(const IcTreeModel& model, const Dataset& data);

struct SampleResult {
  Dataset::Storage rows;      // one row per accepted draw, full schema
  Eigen::VectorXi leaves;     // generating leaf id per accepted row
  Eigen::Index discarded = 0;
};

/// Three-stage sampling: leaf from the prior, then components and symbolic
/// values inside it, mapped back to the original space. Draws whose route
/// disagrees with the generating leaf are redrawn within the leaf up to
/// max_retries times, then discarded. Every returned row routes to its
/// generating leaf.
SampleResult sample(const IcTreeModel& model, Eigen::Index n, Rng& rng, int max_retries = 16);

/// Evidence applied approximately: per leaf, the evidence box (unbounded
/// dimensions widened to the leaf's own back-mapped support) is pushed
/// through the leaf transform, each component distribution is restricted to
/// the bounding box of the resulting parallelepiped, and leaf weights are
/// reweighted by the retained mass. An approximation of the true conditional.
class RestrictedModel {
 public:
  const IcTreeModel& base() const { return *base_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<Qpd<double>>& component_dists(Eigen::Index leaf) const {
    return comps_[static_cast<std::size_t>(leaf)];
  }
  const std::vector<Multinomial>& symbolic_dists(Eigen::Index leaf) const {
    return syms_[static_cast<std::size_t>(leaf)];
  }

  friend RestrictedModel apply_evidence(const IcTreeModel&, const Evidence&);

 private:
  const IcTreeModel* base_ = nullptr;
  Eigen::VectorXd weights_;  // renormalized; 0 for excluded leaves
  std::vector<std::vector<Qpd<double>>> comps_;
  std::vector<std::vector<Multinomial>> syms_;
};

/// Throws InconsistentEvidence when every leaf loses all mass.
RestrictedModel apply_evidence(const IcTreeModel& model, const Evidence& ev);

SampleResult sample(const RestrictedModel& view, Eigen::Index n, Rng& rng, int max_retries = 16);

struct MarginalEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  Eigen::Index n_samples = 0;
  Eigen::Index consistent = 0;
};

/// Fraction of unrestricted model samples consistent with the evidence, with
/// the binomial standard error.
MarginalEstimate marginal_probability(const IcTreeModel& model, const Evidence& ev,
                                      Eigen::Index n_samples, Rng& rng);

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct MomentsReport {
  std::vector<int> orders;
  /// moments[k][o]: numeric column k (numeric order), order orders[o].
  /// Order 1 is the mean; higher orders are central moments.
  std::vector<std::vector<MomentEstimate>> moments;
  Eigen::Index accepted = 0;
  Eigen::Index drawn = 0;
};

/// Samples the evidence-restricted view, rejects residual inconsistent draws,
/// and returns empirical moments of the accepted original-space samples.
/// Throws InsufficientAcceptance when fewer than 2 draws survive.
MomentsReport conditional_moments(const IcTreeModel& model, const Evidence& ev,
                                  const std::vector<int>& orders, Eigen::Index n_samples,
                                  Rng& rng);

struct MpeResult {
  Eigen::Index leaf = 0;
  double density = 0.0;  // maximal joint density value
  /// 2^k original-space vertices of the maximizing parallelepiped over the
  /// numeric columns (k = transformed components of the winning leaf).
  Eigen::MatrixXd region_vertices;
  /// Full row (numeric coordinates from the region centroid, symbolic values
  /// at their mode) routing to the reported leaf.
  Eigen::VectorXd representative;
};

/// Maximum of the (optionally evidence-restricted) density. For
/// piecewise-uniform leaves the maximizer is a region: the Cartesian product
/// of per-component max-density intervals mapped back to the original space.
MpeResult mpe(const IcTreeModel& model, const std::optional<Evidence>& ev = std::nullopt);

/// Densities on an r x r lattice over the bounding box of two numeric columns
/// (numeric-order indices), remaining numeric dimensions marginalized by
/// Monte Carlo over their bounding box, symbolic dimensions marginalized
/// exactly. Returns rows (x, y, density).
Eigen::MatrixXd grid_density(const IcTreeModel& model, Eigen::Index col_x, Eigen::Index col_y,
                             int resolution, const std::optional<Evidence>& ev,
                             Eigen::Index mc_samples, Rng& rng);

}  // namespace ictree

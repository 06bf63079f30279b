#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ictree/rng.hpp"

namespace ictree {

/// Frequency distribution over the category codes of one symbolic column.
class Multinomial {
 public:
  explicit Multinomial(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    if (probs_.size() < 1) throw std::invalid_argument("Multinomial: need at least one category");
    if ((probs_.array() < 0.0).any() || std::abs(probs_.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("Multinomial: probabilities must be nonnegative and sum to 1");
  }

  static Multinomial from_counts(const Eigen::VectorXd& counts) {
    const double total = counts.sum();
    if (!(total > 0.0)) throw std::invalid_argument("Multinomial: empty counts");
    return Multinomial(counts / total);
  }

  static Multinomial fit(const std::vector<int>& codes, Eigen::Index n_categories) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_categories);
    for (int c : codes) counts(c) += 1.0;
    return from_counts(counts);
  }

  Eigen::Index size() const { return probs_.size(); }
  const Eigen::VectorXd& probs() const { return probs_; }
  double pmf(Eigen::Index category) const { return probs_(category); }

  int sample(Rng& rng) const {
    double u = rng.uniform();
    for (Eigen::Index c = 0; c < probs_.size(); ++c) {
      u -= probs_(c);
      if (u < 0.0) return static_cast<int>(c);
    }
    return static_cast<int>(probs_.size() - 1);
  }

  /// Zeroes disallowed categories and renormalizes; absent when nothing is
  /// left.
  std::optional<Multinomial> restrict(const std::vector<bool>& allowed) const {
    Eigen::VectorXd masked = probs_;
    for (Eigen::Index c = 0; c < masked.size(); ++c)
      if (!allowed[static_cast<std::size_t>(c)]) masked(c) = 0.0;
    const double total = masked.sum();
    if (!(total > 0.0)) return std::nullopt;
    return Multinomial(masked / total);
  }

  double retained_mass(const std::vector<bool>& allowed) const {
    double total = 0.0;
    for (Eigen::Index c = 0; c < probs_.size(); ++c)
      if (allowed[static_cast<std::size_t>(c)]) total += probs_(c);
    return total;
  }

  /// All argmax categories.
  std::vector<int> mode() const {
    const double best = probs_.maxCoeff();
    const double tol = best * 1e-12;
    std::vector<int> out;
    for (Eigen::Index c = 0; c < probs_.size(); ++c)
      if (probs_(c) >= best - tol) out.push_back(static_cast<int>(c));
    return out;
  }

  double max_pmf() const { return probs_.maxCoeff(); }

 private:
  Eigen::VectorXd probs_;
};

}  // namespace ictree

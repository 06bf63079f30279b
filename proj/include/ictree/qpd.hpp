#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ictree/errors.hpp"
#include "ictree/rng.hpp"

namespace ictree {

/// Piecewise-uniform quantile-parameterized distribution: strictly increasing
/// breakpoints b_0 < ... < b_K and positive interval masses summing to 1.
/// Intervals are right-open except the last, which is closed; density is zero
/// outside [b_0, b_K].
template <typename Scalar = double>
class Qpd {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct DensityInterval {
    Scalar lo, hi, density;
  };

  Qpd(Vector breakpoints, Vector masses)
      : breakpoints_(std::move(breakpoints)), masses_(std::move(masses)) {
    const Eigen::Index k = masses_.size();
    if (k < 1 || breakpoints_.size() != k + 1)
      throw std::invalid_argument("Qpd: need K >= 1 intervals and K+1 breakpoints");
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!(breakpoints_(i) < breakpoints_(i + 1)))
        throw std::invalid_argument("Qpd: breakpoints must be strictly increasing");
      if (!(masses_(i) > Scalar(0))) throw std::invalid_argument("Qpd: masses must be positive");
    }
    if (std::abs(masses_.sum() - Scalar(1)) > Scalar(1e-12))
      throw std::invalid_argument("Qpd: masses must sum to 1");
    cum_.resize(k + 1);
    cum_(0) = Scalar(0);
    for (Eigen::Index i = 0; i < k; ++i) cum_(i + 1) = cum_(i) + masses_(i);
    cum_(k) = Scalar(1);
  }

  /// Fits breakpoints at the empirical quantiles of levels 0, 1/resolution,
  /// ..., 1 (linear interpolation between order statistics). Runs of
  /// coincident quantiles collapse; their levels pool into the next interval
  /// that has width, so masses equal the fraction of quantile levels spanned.
  /// Throws DegenerateSupport when all samples coincide.
  static Qpd fit(Vector samples, int resolution) {
    const Eigen::Index n = samples.size();
    if (n < 2) throw std::invalid_argument("Qpd::fit: need at least 2 samples");
    if (resolution < 1) throw std::invalid_argument("Qpd::fit: resolution must be >= 1");
    std::sort(samples.data(), samples.data() + n);
    if (!(samples(0) < samples(n - 1)))
      throw DegenerateSupport("Qpd::fit: all samples are equal");

    const auto quantile = [&](Scalar level) {
      const Scalar pos = level * Scalar(n - 1);
      const auto lo = static_cast<Eigen::Index>(std::floor(pos));
      if (lo >= n - 1) return samples(n - 1);
      const Scalar frac = pos - Scalar(lo);
      return samples(lo) + frac * (samples(lo + 1) - samples(lo));
    };

    std::vector<Scalar> bps{samples(0)};
    std::vector<Scalar> counts;
    int pending = 0;
    for (int k = 0; k < resolution; ++k) {
      ++pending;
      const Scalar q = quantile(Scalar(k + 1) / Scalar(resolution));
      if (q > bps.back()) {
        bps.push_back(q);
        counts.push_back(Scalar(pending));
        pending = 0;
      }
    }
    if (pending > 0) counts.back() += Scalar(pending);  // ties at the top

    Vector b = Eigen::Map<const Vector>(bps.data(), static_cast<Eigen::Index>(bps.size()));
    Vector m = Eigen::Map<const Vector>(counts.data(), static_cast<Eigen::Index>(counts.size()));
    m /= m.sum();
    return Qpd(std::move(b), std::move(m));
  }

  Eigen::Index intervals() const { return masses_.size(); }
  const Vector& breakpoints() const { return breakpoints_; }
  const Vector& masses() const { return masses_; }
  Scalar support_lo() const { return breakpoints_(0); }
  Scalar support_hi() const { return breakpoints_(breakpoints_.size() - 1); }

  Scalar pdf(Scalar x) const {
    const Eigen::Index k = interval_of(x);
    if (k < 0) return Scalar(0);
    return masses_(k) / width(k);
  }

  Scalar log_pdf(Scalar x) const {
    const Scalar d = pdf(x);
    return d > Scalar(0) ? std::log(d) : -std::numeric_limits<Scalar>::infinity();
  }

  Scalar cdf(Scalar x) const {
    if (x < support_lo()) return Scalar(0);
    if (x >= support_hi()) return Scalar(1);
    const Eigen::Index k = interval_of(x);
    return cum_(k) + masses_(k) * (x - breakpoints_(k)) / width(k);
  }

  /// Generalized inverse of cdf; clamps u to [0, 1].
  Scalar ppf(Scalar u) const {
    if (u <= Scalar(0)) return support_lo();
    if (u >= Scalar(1)) return support_hi();
    const Eigen::Index k = cum_interval(u);
    return breakpoints_(k) + (u - cum_(k)) / masses_(k) * width(k);
  }

  /// Two-stage draw: interval index from the masses, then uniform inside it.
  Scalar sample(Rng& rng) const {
    const Eigen::Index k = cum_interval(Scalar(rng.uniform()));
    return breakpoints_(k) + Scalar(rng.uniform()) * width(k);
  }

  Vector sample(Eigen::Index n, Rng& rng) const {
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = sample(rng);
    return out;
  }

  /// Keeps, in full, every interval that intersects [lo, hi] and renormalizes
  /// (the kept region subsumes the query range). Absent result when no
  /// interval intersects.
  std::optional<Qpd> restrict(Scalar lo, Scalar hi) const {
    if (!(lo <= hi)) throw std::invalid_argument("Qpd::restrict: lo must be <= hi");
    const Eigen::Index k = intervals();
    Eigen::Index first = -1, last = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      const bool right_ok = (i == k - 1) ? breakpoints_(i + 1) >= lo : breakpoints_(i + 1) > lo;
      if (breakpoints_(i) <= hi && right_ok) {
        if (first < 0) first = i;
        last = i;
      }
    }
    if (first < 0) return std::nullopt;
    Vector b = breakpoints_.segment(first, last - first + 2);
    Vector m = masses_.segment(first, last - first + 1);
    m /= m.sum();
    return Qpd(std::move(b), std::move(m));
  }

  /// Total original mass of the intervals restrict would keep (before
  /// renormalization); 0 when none intersect.
  Scalar retained_mass(Scalar lo, Scalar hi) const {
    const Eigen::Index k = intervals();
    Scalar total(0);
    for (Eigen::Index i = 0; i < k; ++i) {
      const bool right_ok = (i == k - 1) ? breakpoints_(i + 1) >= lo : breakpoints_(i + 1) > lo;
      if (breakpoints_(i) <= hi && right_ok) total += masses_(i);
    }
    return total;
  }

  /// Every interval attaining the maximal density, ties included.
  std::vector<DensityInterval> max_density_intervals() const {
    const Eigen::Index k = intervals();
    Scalar best(0);
    for (Eigen::Index i = 0; i < k; ++i) best = std::max(best, masses_(i) / width(i));
    const Scalar tol = best * Scalar(1e-12);
    std::vector<DensityInterval> out;
    for (Eigen::Index i = 0; i < k; ++i) {
      const Scalar d = masses_(i) / width(i);
      if (d >= best - tol) out.push_back({breakpoints_(i), breakpoints_(i + 1), d});
    }
    return out;
  }

  Scalar max_density() const { return max_density_intervals().front().density; }

  /// (K+1) breakpoints plus (K-1) free masses.
  int param_count() const { return 2 * static_cast<int>(intervals()); }

 private:
  Scalar width(Eigen::Index k) const { return breakpoints_(k + 1) - breakpoints_(k); }

  /// Interval containing x, right-open convention, last closed; -1 outside.
  Eigen::Index interval_of(Scalar x) const {
    if (x < support_lo() || x > support_hi()) return -1;
    if (x == support_hi()) return intervals() - 1;
    const Scalar* begin = breakpoints_.data();
    const Scalar* end = begin + breakpoints_.size();
    return std::upper_bound(begin, end, x) - begin - 1;
  }

  /// Largest k with cum_(k) <= u, clamped to a valid interval.
  Eigen::Index cum_interval(Scalar u) const {
    const Scalar* begin = cum_.data();
    const Scalar* end = begin + cum_.size();
    Eigen::Index k = std::upper_bound(begin, end, u) - begin - 1;
    return std::clamp<Eigen::Index>(k, 0, intervals() - 1);
  }

  Vector breakpoints_;
  Vector masses_;
  Vector cum_;  // cum_(k) = mass below b_k
};

}  // namespace ictree

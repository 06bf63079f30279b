#include <doctest.h>

#include <cmath>

#include "ictree/multinomial.hpp"
#include "ictree/qpd.hpp"
#include "oracles.hpp"

using namespace ictree;

namespace {

Qpd<double> unit_uniform() {
  return Qpd<double>(Eigen::Vector2d(0.0, 3.0), Eigen::VectorXd::Ones(1));
}

Eigen::VectorXd uniform_samples(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform();
  return v;
}

}  // namespace

TEST_CASE("qpd fit on a tiny sample with resolution 1") {
  Eigen::VectorXd samples(4);
  samples << 0, 1, 2, 3;
  const auto q = Qpd<double>::fit(samples, 1);
  REQUIRE(q.intervals() == 1);
  CHECK(q.support_lo() == 0.0);
  CHECK(q.support_hi() == 3.0);
  CHECK(q.masses()(0) == 1.0);
  CHECK(q.pdf(1.5) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("qpd fit matches the quantile oracle on uniform data") {
  const auto q = Qpd<double>::fit(uniform_samples(100000, 13), 10);
  REQUIRE(q.intervals() == 10);
  for (Eigen::Index k = 0; k < q.breakpoints().size(); ++k)
    CHECK(q.breakpoints()(k) == doctest::Approx(0.1 * static_cast<double>(k)).epsilon(1.0).scale(0.01));
  for (double x = 0.06; x < 0.95; x += 0.055) CHECK(q.pdf(x) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("qpd fit rejects a point mass") {
  Eigen::VectorXd constant = Eigen::VectorXd::Constant(10, 5.0);
  CHECK_THROWS_AS(Qpd<double>::fit(constant, 4), DegenerateSupport);
}

TEST_CASE("qpd fit pools masses of coincident quantiles") {
  Eigen::VectorXd tied(8);
  tied << 0, 0, 0, 0, 0, 0, 1, 2;
  const auto q = Qpd<double>::fit(tied, 8);
  CHECK(q.intervals() < 8);
  CHECK(q.masses().sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.support_lo() == 0.0);
  CHECK(q.support_hi() == 2.0);
}

TEST_CASE("qpd pdf convention: right-open intervals, closed top") {
  const auto q = unit_uniform();
  CHECK(q.pdf(3.0) == doctest::Approx(1.0 / 3.0));
  CHECK(q.pdf(3.0001) == 0.0);
  CHECK(q.pdf(-0.0001) == 0.0);
  CHECK(q.pdf(0.0) == doctest::Approx(1.0 / 3.0));
  CHECK(q.log_pdf(4.0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("qpd cdf and ppf") {
  const auto q = unit_uniform();
  CHECK(q.cdf(1.5) == 0.5);
  CHECK(q.ppf(0.5) == 1.5);
  CHECK(q.cdf(-1.0) == 0.0);
  CHECK(q.cdf(99.0) == 1.0);
  CHECK(q.ppf(0.0) == 0.0);
  CHECK(q.ppf(1.0) == 3.0);

  const auto fitted = Qpd<double>::fit(uniform_samples(5000, 3), 16);
  Rng rng(4);
  for (int rep = 0; rep < 1000; ++rep) {
    const double x = rng.uniform(fitted.support_lo() + 1e-6, fitted.support_hi() - 1e-6);
    CHECK(std::abs(fitted.ppf(fitted.cdf(x)) - x) <= 1e-9);
  }

  // cdf nondecreasing along a sorted probe sweep
  double prev = -1.0;
  for (double x = -0.2; x <= 1.2; x += 0.01) {
    const double c = fitted.cdf(x);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("qpd sampling matches its own cdf") {
  const auto q = Qpd<double>::fit(uniform_samples(2000, 19), 8);
  Rng rng(99);
  const Eigen::VectorXd draws = q.sample(100000, rng);
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  CHECK(oracle::ks_statistic(v, [&](double x) { return q.cdf(x); }) < 0.01);

  const auto u = unit_uniform();
  Rng rng2(1);
  const Eigen::VectorXd inside = u.sample(1000, rng2);
  CHECK(inside.minCoeff() >= 0.0);
  CHECK(inside.maxCoeff() <= 3.0);
  CHECK(u.sample(0, rng2).size() == 0);
}

TEST_CASE("qpd restrict keeps whole intervals and renormalizes") {
  const Qpd<double> q(Eigen::Vector3d(0.0, 1.0, 2.0), Eigen::Vector2d(0.5, 0.5));

  const auto narrow = q.restrict(1.2, 1.5);
  REQUIRE(narrow);
  CHECK(narrow->intervals() == 1);
  CHECK(narrow->support_lo() == 1.0);
  CHECK(narrow->support_hi() == 2.0);
  CHECK(narrow->masses()(0) == 1.0);

  const auto both = q.restrict(0.5, 1.5);
  REQUIRE(both);
  CHECK(both->intervals() == 2);
  CHECK(both->masses()(0) == doctest::Approx(0.5));
  CHECK(both->masses()(1) == doctest::Approx(0.5));

  CHECK(!q.restrict(5.0, 6.0));

  // restricted support contains the intersection with the original support
  const auto upper = q.restrict(1.9, 7.0);
  REQUIRE(upper);
  CHECK(upper->support_lo() <= 1.9);
  CHECK(upper->support_hi() >= 2.0);
  CHECK(upper->masses().sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("qpd max density intervals with ties") {
  const Qpd<double> skewed(Eigen::Vector3d(0.0, 1.0, 3.0), Eigen::Vector2d(0.5, 0.5));
  const auto best = skewed.max_density_intervals();
  REQUIRE(best.size() == 1);
  CHECK(best[0].lo == 0.0);
  CHECK(best[0].hi == 1.0);
  CHECK(best[0].density == doctest::Approx(0.5));

  const auto whole = unit_uniform().max_density_intervals();
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].lo == 0.0);
  CHECK(whole[0].hi == 3.0);

  const Qpd<double> tied(Eigen::Vector3d(0.0, 1.0, 2.0), Eigen::Vector2d(0.5, 0.5));
  CHECK(tied.max_density_intervals().size() == 2);
}

TEST_CASE("qpd parameter counting") {
  CHECK(unit_uniform().param_count() == 2);
  const auto q = Qpd<double>::fit(uniform_samples(4000, 8), 10);
  REQUIRE(q.intervals() == 10);
  CHECK(q.param_count() == 20);
}

TEST_CASE("qpd pdf integrates to one (midpoint rule)") {
  const auto q = Qpd<double>::fit(uniform_samples(3000, 23), 12);
  const double lo = q.support_lo();
  const double hi = q.support_hi();
  const int n = 10000;
  double integral = 0.0;
  for (int i = 0; i < n; ++i)
    integral += q.pdf(lo + (i + 0.5) * (hi - lo) / n) * (hi - lo) / n;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("multinomial estimation and queries") {
  const Multinomial m = Multinomial::from_counts(Eigen::Vector2d(3.0, 1.0));
  CHECK(m.pmf(0) == 0.75);
  CHECK(m.pmf(1) == 0.25);
  CHECK(m.probs().sum() == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("restrict") {
    const auto only_second = m.restrict({false, true});
    REQUIRE(only_second);
    CHECK(only_second->pmf(0) == 0.0);
    CHECK(only_second->pmf(1) == 1.0);
    CHECK(!m.restrict({false, false}));
  }

  SUBCASE("mode, invariant under count rescaling") {
    CHECK(m.mode() == std::vector<int>{0});
    const Multinomial scaled = Multinomial::from_counts(Eigen::Vector2d(300.0, 100.0));
    CHECK(scaled.mode() == m.mode());
    const Multinomial tie = Multinomial::from_counts(Eigen::Vector2d(2.0, 2.0));
    CHECK(tie.mode() == std::vector<int>{0, 1});
  }

  SUBCASE("sampling frequencies") {
    Rng rng(6);
    Eigen::Vector2d counts = Eigen::Vector2d::Zero();
    for (int i = 0; i < 20000; ++i) counts(m.sample(rng)) += 1.0;
    CHECK(counts(0) / 20000.0 == doctest::Approx(0.75).epsilon(0.02));
  }
}

#include <doctest.h>

#include <Eigen/Dense>

#include "ictree/ica.hpp"
#include "oracles.hpp"

using namespace ictree;

namespace {

Eigen::MatrixXd gaussian_block(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) x(i, j) = rng.gaussian();
  return x;
}

Eigen::MatrixXd uniform_sources(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd s(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) s(i, j) = rng.uniform(-1.0, 1.0);
  return s;
}

}  // namespace

TEST_CASE("center removes column means") {
  Eigen::MatrixXd block(2, 2);
  block << 1, 2, 3, 4;
  const auto [centered, mean] = center(block);
  CHECK(mean(0) == 2.0);
  CHECK(mean(1) == 3.0);
  CHECK(centered(0, 0) == -1.0);
  CHECK(centered(0, 1) == -1.0);
  CHECK(centered(1, 0) == 1.0);
  CHECK(centered(1, 1) == 1.0);

  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(4, 3);
  const auto [zc, zm] = center(zeros);
  CHECK(zc == zeros);
  CHECK(zm.isZero());

  Eigen::MatrixXd single(1, 2);
  single << 5, 7;
  const auto [sc, sm] = center(single);
  CHECK(sc.isZero());
  CHECK(sm(0) == 5.0);
  CHECK(sm(1) == 7.0);
}

TEST_CASE("whiten produces identity covariance and rejects rank deficiency") {
  SUBCASE("standard normal block") {
    const auto [centered, mean] = center(gaussian_block(10000, 2, 17));
    const auto [white, k] = whiten(centered);
    const Eigen::MatrixXd cov = oracle::covariance(white);
    CHECK((cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 0.05);
  }

  SUBCASE("correlation 0.9 is removed") {
    Rng rng(5);
    Eigen::MatrixXd x(10000, 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double a = rng.gaussian();
      const double b = rng.gaussian();
      x(i, 0) = a;
      x(i, 1) = 0.9 * a + std::sqrt(1.0 - 0.81) * b;
    }
    const auto [centered, mean] = center(x);
    const auto [white, k] = whiten(centered);
    CHECK(std::abs(oracle::correlation(white.col(0), white.col(1))) <= 0.05);
  }

  SUBCASE("constant column") {
    Eigen::MatrixXd x = gaussian_block(100, 2, 3);
    x.col(1).setConstant(4.0);
    const auto [centered, mean] = center(x);
    CHECK_THROWS_AS(whiten(centered), SingularCovariance);
  }
}

TEST_CASE("fast_ica recovers a known uniform mixing") {
  Eigen::Matrix2d a0;
  a0 << 2, 1, 1, 1;

  SUBCASE("single run under 0.1 Amari index") {
    const Eigen::MatrixXd s = uniform_sources(10000, 2, 100);
    const Eigen::MatrixXd x = s * a0.transpose();
    const auto t = fast_ica(x, 2, 1000, 1e-6, 100);
    CHECK(oracle::amari_index(t.unmixing * a0) < 0.1);
  }

  SUBCASE("seed-averaged over 5 seeds") {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Eigen::MatrixXd s = uniform_sources(10000, 2, 200 + seed);
      const Eigen::MatrixXd x = s * a0.transpose();
      const auto t = fast_ica(x, 2, 1000, 1e-6, seed);
      total += oracle::amari_index(t.unmixing * a0);
    }
    CHECK(total / 5.0 < 0.1);
  }
}

TEST_CASE("fast_ica on already independent axis-aligned uniforms") {
  Rng rng(77);
  Eigen::MatrixXd x(8000, 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = rng.uniform(0.0, 4.0);   // sd = 4/sqrt(12)
    x(i, 1) = rng.uniform(-1.0, 1.0);  // sd = 2/sqrt(12)
  }
  const auto t = fast_ica(x, 2, 1000, 1e-6, 7);

  // W scaled by the source standard deviations is a signed permutation, up
  // to the usual ICA indeterminacy.
  Eigen::MatrixXd scaled = t.unmixing;
  scaled.col(0) *= 4.0 / std::sqrt(12.0);
  scaled.col(1) *= 2.0 / std::sqrt(12.0);
  for (Eigen::Index i = 0; i < 2; ++i) {
    Eigen::Index arg = 0;
    const double big = scaled.row(i).cwiseAbs().maxCoeff(&arg);
    CHECK(big == doctest::Approx(1.0).epsilon(0.15));
    CHECK(scaled(i, 1 - arg) == doctest::Approx(0.0).epsilon(1.0).scale(0.15));
  }
}

TEST_CASE("fast_ica on gaussian sources stays invertible") {
  const Eigen::MatrixXd x = gaussian_block(5000, 2, 31);
  const auto t = fast_ica(x, 2, 200, 1e-9, 3);
  // Identifiability is lost for gaussians: no convergence claim, but the
  // transform must still be a valid bijection.
  CHECK((t.unmixing * t.mixing - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("IcaTransform invariants") {
  const Eigen::MatrixXd s = uniform_sources(5000, 3, 400);
  Eigen::Matrix3d a0;
  a0 << 1.0, 0.4, -0.2, 0.0, 1.5, 0.3, -0.7, 0.2, 0.9;
  const Eigen::MatrixXd x = s * a0.transpose();
  const auto t = fast_ica(x, 3, 1000, 1e-6, 11);

  CHECK((t.unmixing * t.mixing - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-6);

  const double recomputed = std::log(std::abs(t.unmixing.determinant()));
  CHECK(t.log_abs_det_unmixing == doctest::Approx(recomputed).epsilon(1e-9));

  // Rows of the unmixing matrix are orthonormal in whitened coordinates:
  // W C W^T = I with C the sample covariance of the input.
  const Eigen::MatrixXd cov = oracle::covariance(x);
  const Eigen::MatrixXd gram = t.unmixing * cov * t.unmixing.transpose();
  CHECK((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 0.05);

  Rng rng(8);
  for (int rep = 0; rep < 1000; ++rep) {
    Eigen::Vector3d v(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0),
                      rng.uniform(-10.0, 10.0));
    const Eigen::VectorXd round = inverse_transform(t, Eigen::VectorXd(transform(t, v)));
    CHECK((round - v).norm() <= 1e-9 * (1.0 + v.norm()));
  }
}

TEST_CASE("transform arithmetic") {
  IcaTransform<double> t;
  t.mean = Eigen::Vector2d(1.0, 1.0);
  Eigen::Matrix2d w;
  w << 2, 0, 0, 1;
  t.unmixing = w;
  t.mixing = w.inverse();
  t.log_abs_det_unmixing = std::log(2.0);

  const Eigen::VectorXd e = transform(t, Eigen::VectorXd(Eigen::Vector2d(2.0, 3.0)));
  CHECK(e(0) == 2.0);
  CHECK(e(1) == 2.0);

  const auto id = IcaTransform<double>::identity(Eigen::Vector2d::Zero());
  const Eigen::VectorXd same = transform(id, Eigen::VectorXd(Eigen::Vector2d(0.3, -0.7)));
  CHECK(same(0) == 0.3);
  CHECK(same(1) == -0.7);
}

#include "ictree/synthetic.hpp"

#include <stdexcept>

#include "ictree/rng.hpp"

namespace ictree {

namespace {

std::vector<ColumnSpec> numeric_columns(std::initializer_list<const char*> names) {
  std::vector<ColumnSpec> columns;
  for (const char* name : names) columns.push_back({name, ColumnKind::Numeric, {}});
  return columns;
}

}  // namespace

Dataset synth_robot_grab(Eigen::Index n, double object_range, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synth_robot_grab: n must be >= 1");
  if (!(object_range > 0.0)) throw std::invalid_argument("synth_robot_grab: range must be > 0");
  Rng rng(derive_seed(seed, 0x9ab));
  Dataset::Storage cells(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x_obj = rng.uniform(0.0, object_range);
    const double y_obj = rng.uniform(0.0, object_range);
    cells(i, 0) = x_obj;
    cells(i, 1) = y_obj;
    cells(i, 2) = x_obj + rng.uniform();
    cells(i, 3) = y_obj + rng.uniform();
  }
  return Dataset(numeric_columns({"x_obj", "y_obj", "x_rob", "y_rob"}), std::move(cells));
}

Dataset synth_two_uniforms(Eigen::Index n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("synth_two_uniforms: n must be >= 2");
  Rng rng(derive_seed(seed, 0x2f1));
  Dataset::Storage cells(n, 2);
  const Eigen::Index half = n / 2;
  // Lower-left square: independent axes. Upper-right band: y = 1.5 x + 1.5
  // plus U(0, 0.75) noise, so the bounding boxes stay separated by a margin.
  for (Eigen::Index i = 0; i < half; ++i) {
    cells(i, 0) = rng.uniform(0.0, 2.0);
    cells(i, 1) = rng.uniform(0.0, 2.0);
  }
  for (Eigen::Index i = half; i < n; ++i) {
    const double x = rng.uniform(4.0, 6.0);
    cells(i, 0) = x;
    cells(i, 1) = 1.5 * x + 1.5 + rng.uniform(0.0, 0.75);
  }
  return Dataset(numeric_columns({"x", "y"}), std::move(cells));
}

Dataset synth_three_gaussians(Eigen::Index n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("synth_three_gaussians: n must be >= 2");
  Rng rng(derive_seed(seed, 0x3a0));
  const double means[3][2] = {{0.0, 0.0}, {6.0, 1.0}, {3.0, 6.0}};
  // Cholesky factors of three full covariances.
  const double chol[3][3] = {{1.0, 0.6, 0.8},     // [[1, .6], [.6, 1]]
                             {1.1, -0.45, 0.78},  // [[1.21, -.5], [-.5, .81]]
                             {0.84, 0.36, 1.17}}; // [[.7, .3], [.3, 1.5]]
  Dataset::Storage cells(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t c = rng.index(3);
    const double g1 = rng.gaussian();
    const double g2 = rng.gaussian();
    cells(i, 0) = means[c][0] + chol[c][0] * g1;
    cells(i, 1) = means[c][1] + chol[c][1] * g1 + chol[c][2] * g2;
  }
  return Dataset(numeric_columns({"x", "y"}), std::move(cells));
}

}  // namespace ictree

#pragma once

#include <cstdint>

#include "ictree/dataset.hpp"

namespace ictree {

/// Four numeric columns (x_obj, y_obj, x_rob, y_rob). Object positions are
/// uniform on [0, object_range)^2; the robot stands at the object plus a
/// U(0,1) offset per axis.
Dataset synth_robot_grab(Eigen::Index n, double object_range, std::uint64_t seed);

/// Two 2D clusters with an empty margin between their bounding boxes: one
/// axis-aligned uniform square, one linearly dependent band (y is an affine
/// function of x plus uniform noise).
Dataset synth_two_uniforms(Eigen::Index n, std::uint64_t seed);

/// Equal-weight mixture of three full-covariance 2D Gaussians with distinct
/// means.
Dataset synth_three_gaussians(Eigen::Index n, std::uint64_t seed);

}  // namespace ictree

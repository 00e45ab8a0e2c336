/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "mgsim/signals.hpp"

#include <cmath>

#include "mgsim/errors.hpp"

namespace mgsim {

namespace {
constexpr double kThird = kTwoPi / 3.0;  // 120 degrees
}

double wrap_angle(double x) {
  double y = x - kTwoPi * std::floor(x / kTwoPi);
  // floor-based reduction can land exactly on 2*pi for tiny negative inputs
  if (y >= kTwoPi) y -= kTwoPi;
  if (y < 0.0) y = 0.0;
  return y;
}

double angle_distance(double a, double b) {
  double d = wrap_angle(a - b);
  if (d > kTwoPi / 2.0) d -= kTwoPi;
  return d;
}

std::array<double, 3> ThreePhaseSignal::sample() const {
  return make_symmetric(amplitude, angle.rad);
}

std::array<double, 3> make_symmetric(double amplitude, double delta) {
  if (!(amplitude >= 0.0)) throw InputError("make_symmetric: amplitude must be >= 0");
  return {amplitude * std::sin(delta), amplitude * std::sin(delta - kThird),
          amplitude * std::sin(delta + kThird)};
}

Eigen::Matrix3d park_matrix_dq0(double rho) {
  const double s = std::sqrt(2.0 / 3.0);
  Eigen::Matrix3d t;
  t << std::cos(rho), std::cos(rho - kThird), std::cos(rho + kThird),
      std::sin(rho), std::sin(rho - kThird), std::sin(rho + kThird),
      std::sqrt(0.5), std::sqrt(0.5), std::sqrt(0.5);
  return s * t;
}

Eigen::Matrix<double, 2, 3> park_matrix_dq(double rho) {
  return park_matrix_dq0(rho).topRows<2>();
}

Dq0Triple park_dq0(const std::array<double, 3>& x_abc, double rho) {
  const Eigen::Vector3d v =
      park_matrix_dq0(rho) * Eigen::Vector3d(x_abc[0], x_abc[1], x_abc[2]);
  return {v[0], v[1], v[2]};
}

DqPair park_dq(const std::array<double, 3>& x_abc, double rho) {
  const Eigen::Vector2d v =
      park_matrix_dq(rho) * Eigen::Vector3d(x_abc[0], x_abc[1], x_abc[2]);
  return {v[0], v[1]};
}

std::array<double, 3> inverse_park(const DqPair& x_dq, double rho) {
  const Eigen::Vector3d v =
      park_matrix_dq(rho).transpose() * Eigen::Vector2d(x_dq.d, x_dq.q);
  return {v[0], v[1], v[2]};
}

DqPair rotate_frame(const DqPair& x, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * x.d + s * x.q, -s * x.d + c * x.q};
}

PowerTriple instantaneous_power(const DqPair& v, const DqPair& i) {
  return {v.d * i.d + v.q * i.q, v.d * i.q - v.q * i.d};
}

double symmetric_amplitude(const DqPair& x) {
  return std::sqrt(2.0 / 3.0) * std::hypot(x.d, x.q);
}

}  // namespace mgsim

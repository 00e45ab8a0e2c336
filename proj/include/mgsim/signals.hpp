/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace mgsim {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Reduce an angle to [0, 2*pi). Angles live on the torus: values that differ
// by whole turns describe the same electrical state.
double wrap_angle(double x);

// Map an angle difference into (-pi, pi]; the right way to compare two
// wrapped angles without seam artifacts.
double angle_distance(double a, double b);

// Angle stored reduced to [0, 2*pi) on construction.
struct FrameAngle {
  double rad = 0.0;
  FrameAngle() = default;
  explicit FrameAngle(double r) : rad(wrap_angle(r)) {}
};

struct DqPair {
  double d = 0.0;
  double q = 0.0;
};

struct Dq0Triple {
  double d = 0.0;
  double q = 0.0;
  double zero = 0.0;
};

// Instantaneous three-phase power; generator convention, delivered P counted
// positive. s() is exactly p + j*q by construction.
struct PowerTriple {
  double p = 0.0;  // W
  double q = 0.0;  // var
  std::complex<double> s() const { return {p, q}; }
};

// Balanced three-phase signal: amplitude plus instantaneous electrical angle.
struct ThreePhaseSignal {
  double amplitude = 0.0;  // >= 0, unit of the physical quantity
  FrameAngle angle;
  std::array<double, 3> sample() const;
};

// A * [sin d, sin(d - 2pi/3), sin(d + 2pi/3)]. Rejects negative amplitude.
std::array<double, 3> make_symmetric(double amplitude, double delta);

// Power-invariant (unitary) dq0 transform matrix at frame angle rho.
// Rows: d (cosine row), q (sine row), zero (uniform sqrt(2)/2 row), all
// scaled by sqrt(2/3). Evaluated on demand, never cached.
Eigen::Matrix3d park_matrix_dq0(double rho);

// First two rows of park_matrix_dq0.
Eigen::Matrix<double, 2, 3> park_matrix_dq(double rho);

Dq0Triple park_dq0(const std::array<double, 3>& x_abc, double rho);
DqPair park_dq(const std::array<double, 3>& x_abc, double rho);

// T_dq(rho)^T * x_dq; the result has no zero-sequence component.
std::array<double, 3> inverse_park(const DqPair& x_dq, double rho);

// [[cos w, sin w], [-sin w, cos w]] * x: moves a dq vector between frames
// that differ by angle w. A local-frame voltage (0, V) at relative angle
// delta lands on V*(sin delta, cos delta) in the common frame.
DqPair rotate_frame(const DqPair& x, double angle);

// P = vd*id + vq*iq, Q = vd*iq - vq*id.
PowerTriple instantaneous_power(const DqPair& v, const DqPair& i);

// Amplitude of the symmetric abc signal whose dq image is x:
// |x|_2 = sqrt(3/2) * A.
double symmetric_amplitude(const DqPair& x);

// Complex phasor convention used throughout: x_q + j*x_d. With it the complex
// power is exactly v * conj(i) and series RL edges act as R + jX.
inline std::complex<double> to_phasor(const DqPair& x) { return {x.q, x.d}; }
inline DqPair from_phasor(const std::complex<double>& z) { return {z.imag(), z.real()}; }

}  // namespace mgsim

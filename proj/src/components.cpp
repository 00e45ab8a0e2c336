/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "mgsim/components.hpp"

#include <cmath>

#include "mgsim/errors.hpp"

namespace mgsim {

namespace {

// Rotating-frame coupling, same convention as the line equations:
// d-component picks up -omega*x_q, q-component +omega*x_d.
inline DqPair frame_cross(const DqPair& x, double omega) {
  return {-omega * x.q, omega * x.d};
}

inline DqPair sub(const DqPair& a, const DqPair& b) {
  return {a.d - b.d, a.q - b.q};
}

}  // namespace

DroopCommand droop_control(double p_m, double q_m,
                           const GridFormingConfig& cfg) {
  return {cfg.omega_set - cfg.droop_kp * (p_m - cfg.p_set),
          cfg.v_set - cfg.droop_kq * (q_m - cfg.q_set)};
}

ReducedInverterDeriv reduced_inverter_deriv(const InverterReducedState& s,
                                            double u_delta, double u_v,
                                            double p, double q,
                                            const GridFormingConfig& cfg,
                                            double omega_com) {
  ReducedInverterDeriv d;
  d.ddelta = (u_delta - omega_com) / cfg.gamma;
  d.dp_m = (-s.p_m + p) / (cfg.gamma * cfg.tau_p);
  d.dq_m = (-s.q_m + q) / (cfg.gamma * cfg.tau_p);
  d.v_out = u_v;
  return d;
}

int inner_loop_dim(const GridFormingConfig& cfg) {
  return cfg.inner == InnerLoopKind::FirstOrderLag ? 2 : 8;
}

void inner_loop_deriv(const GridFormingConfig& cfg, double delta,
                      double omega_com,
                      Eigen::Ref<const Eigen::VectorXd> x, const DqPair& v_ref,
                      const DqPair& i_out, Eigen::Ref<Eigen::VectorXd> dx,
                      DqPair* v_terminal) {
  if (!(cfg.nu > 0.0))
    throw ModelError(
        "inner_loop_deriv: nu = 0 is the ideal-source limit; use the reduced "
        "model instead of integrating the inner loop");
  const double ts = cfg.nu * cfg.gamma;

  if (cfg.inner == InnerLoopKind::FirstOrderLag) {
    // state = terminal voltage in the common frame
    dx[0] = (v_ref.d - x[0]) / ts;
    dx[1] = (v_ref.q - x[1]) / ts;
    if (v_terminal) *v_terminal = {x[0], x[1]};
    return;
  }

  const LcPiParams& lc = cfg.lc_pi;
  // local-frame quantities
  const DqPair vr = rotate_frame(v_ref, -delta);
  const DqPair io = rotate_frame(i_out, -delta);
  const DqPair i_f{x[0], x[1]};
  const DqPair v_c{x[2], x[3]};
  const DqPair xi_v{x[4], x[5]};
  const DqPair xi_i{x[6], x[7]};

  const DqPair e_v = sub(vr, v_c);
  const DqPair i_ref{lc.kp_v * e_v.d + lc.ki_v * xi_v.d,
                     lc.kp_v * e_v.q + lc.ki_v * xi_v.q};
  const DqPair e_i = sub(i_ref, i_f);
  const DqPair v_m{lc.kp_c * e_i.d + lc.ki_c * xi_i.d,
                   lc.kp_c * e_i.q + lc.ki_c * xi_i.q};

  const DqPair cross_i = frame_cross(i_f, omega_com);
  const DqPair cross_v = frame_cross(v_c, omega_com);
  dx[0] = (v_m.d - v_c.d - lc.r_f1 * i_f.d) / (ts * lc.l_f) + cross_i.d;
  dx[1] = (v_m.q - v_c.q - lc.r_f1 * i_f.q) / (ts * lc.l_f) + cross_i.q;
  dx[2] = (i_f.d - io.d) / (ts * lc.c_f) + cross_v.d;
  dx[3] = (i_f.q - io.q) / (ts * lc.c_f) + cross_v.q;
  dx[4] = e_v.d / ts;
  dx[5] = e_v.q / ts;
  dx[6] = e_i.d / ts;
  dx[7] = e_i.q / ts;

  if (v_terminal) {
    const DqPair vt{v_c.d + lc.r_f2 * (i_f.d - io.d),
                    v_c.q + lc.r_f2 * (i_f.q - io.q)};
    *v_terminal = rotate_frame(vt, delta);
  }
}

DqPair inner_loop_terminal(const GridFormingConfig& cfg, double delta,
                           Eigen::Ref<const Eigen::VectorXd> x,
                           const DqPair& i_out) {
  if (cfg.inner == InnerLoopKind::FirstOrderLag) return {x[0], x[1]};
  const LcPiParams& lc = cfg.lc_pi;
  const DqPair io = rotate_frame(i_out, -delta);
  const DqPair vt{x[2] + lc.r_f2 * (x[0] - io.d),
                  x[3] + lc.r_f2 * (x[1] - io.q)};
  return rotate_frame(vt, delta);
}

Eigen::VectorXd inner_loop_settled(const GridFormingConfig& cfg, double delta,
                                   const DqPair& v_ref, const DqPair& i_out,
                                   double omega_com) {
  Eigen::VectorXd x(inner_loop_dim(cfg));
  if (cfg.inner == InnerLoopKind::FirstOrderLag) {
    x[0] = v_ref.d;
    x[1] = v_ref.q;
    return x;
  }
  const LcPiParams& lc = cfg.lc_pi;
  if (!(lc.ki_v > 0.0) || !(lc.ki_c > 0.0))
    throw InputError("LC-PI inner loop needs strictly positive integral gains");
  const double ts = cfg.nu * cfg.gamma;
  const DqPair vr = rotate_frame(v_ref, -delta);
  const DqPair io = rotate_frame(i_out, -delta);
  // zero PI errors pin v_c to the reference; the capacitor equation then
  // fixes i_f, and the integrators absorb the remaining offsets.
  const DqPair v_c = vr;
  const DqPair cv = frame_cross(v_c, omega_com);
  const DqPair i_f{io.d - ts * lc.c_f * cv.d, io.q - ts * lc.c_f * cv.q};
  const DqPair ci = frame_cross(i_f, omega_com);
  const DqPair v_m{v_c.d + lc.r_f1 * i_f.d - ts * lc.l_f * ci.d,
                   v_c.q + lc.r_f1 * i_f.q - ts * lc.l_f * ci.q};
  x[0] = i_f.d;
  x[1] = i_f.q;
  x[2] = v_c.d;
  x[3] = v_c.q;
  x[4] = i_f.d / lc.ki_v;
  x[5] = i_f.q / lc.ki_v;
  x[6] = v_m.d / lc.ki_c;
  x[7] = v_m.q / lc.ki_c;
  return x;
}

PowerTriple zip_power(double v, const ZipConfig& cfg) {
  if (!(v >= 0.0)) throw InputError("zip_power: voltage magnitude must be >= 0");
  return {-(cfg.a_p * v * v + cfg.b_p * v + cfg.c_p),
          -(cfg.a_q * v * v + cfg.b_q * v + cfg.c_q)};
}

ZipCurrents zip_draw_currents(const DqPair& v, const ZipConfig& cfg) {
  ZipCurrents out;
  out.i_z = {cfg.a_p * v.d - cfg.a_q * v.q, cfg.a_p * v.q + cfg.a_q * v.d};

  const double mag = std::hypot(v.d, v.q);
  // keep the division bounded even when the caller configured no clamp
  const double floor_v = std::max(cfg.v_clamp, 1e-9);
  double mag_eff = mag;
  if (mag < floor_v) {
    mag_eff = floor_v;
    out.clamped = (cfg.b_p != 0.0 || cfg.c_p != 0.0 || cfg.b_q != 0.0 ||
                   cfg.c_q != 0.0);
  }
  const std::complex<double> u = to_phasor(v) / mag_eff;
  const std::complex<double> b{cfg.b_p, cfg.b_q};
  const std::complex<double> c{cfg.c_p, cfg.c_q};
  out.i_cmd = from_phasor(std::conj(b) * u + std::conj(c) * u / mag_eff);
  return out;
}

int load_state_dim(const ZipConfig& cfg) { return cfg.kappa > 0.0 ? 4 : 2; }

void dynamic_load_deriv(const ZipConfig& cfg,
                        Eigen::Ref<const Eigen::VectorXd> x,
                        const DqPair& i_in, Eigen::Ref<Eigen::VectorXd> dx,
                        DqPair* v_out, long* clamp_count) {
  if (!(cfg.c_snub > 0.0))
    throw InputError("dynamic_load_deriv: c_snub must be > 0");
  const DqPair v{x[0], x[1]};
  const ZipCurrents zc = zip_draw_currents(v, cfg);
  if (zc.clamped && clamp_count) ++*clamp_count;

  if (cfg.kappa > 0.0) {
    const DqPair xt{x[2], x[3]};
    dx[0] = (i_in.d - zc.i_z.d - xt.d) / cfg.c_snub;
    dx[1] = (i_in.q - zc.i_z.q - xt.q) / cfg.c_snub;
    dx[2] = (zc.i_cmd.d - xt.d) / cfg.kappa;
    dx[3] = (zc.i_cmd.q - xt.q) / cfg.kappa;
  } else {
    dx[0] = (i_in.d - zc.i_z.d - zc.i_cmd.d) / cfg.c_snub;
    dx[1] = (i_in.q - zc.i_z.q - zc.i_cmd.q) / cfg.c_snub;
  }
  if (v_out) *v_out = v;
}

Eigen::VectorXd dynamic_load_settled(const ZipConfig& cfg, const DqPair& v) {
  Eigen::VectorXd x(load_state_dim(cfg));
  x[0] = v.d;
  x[1] = v.q;
  if (cfg.kappa > 0.0) {
    const ZipCurrents zc = zip_draw_currents(v, cfg);
    x[2] = zc.i_cmd.d;
    x[3] = zc.i_cmd.q;
  }
  return x;
}

LineDeriv line_dq_deriv(const DqPair& x, const DqPair& v_source,
                        const DqPair& v_target, const LineParams& line,
                        double omega_com) {
  if (!(line.l_henry > 0.0))
    throw ModelError("line_dq_deriv: dynamic line needs L > 0");
  const DqPair vd = sub(v_source, v_target);
  const DqPair cross = frame_cross(x, omega_com);
  LineDeriv out;
  out.dx = {(-line.r_ohm * x.d + vd.d) / line.l_henry + cross.d,
            (-line.r_ohm * x.q + vd.q) / line.l_henry + cross.q};
  out.i_l = x;
  return out;
}

}  // namespace mgsim

/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <Eigen/Dense>

#include "mgsim/network.hpp"
#include "mgsim/signals.hpp"

namespace mgsim {

enum class InnerLoopKind { FirstOrderLag, LcPiCascade };

// Shape parameters of the LC-filter + cascaded-PI inner loop. The block is
// time-scaled by nu*gamma as a whole, so the reactive elements are given as
// characteristic impedances: the physical inductance is nu*gamma*l_f (H) and
// the physical capacitance nu*gamma*c_f (F). With the defaults and
// nu = 1/(2*pi*500) s the cascade has its resonance near 500 Hz and the
// current loop bandwidth in the same range, with the voltage loop a factor
// of a few below — the usual ordering for this controller family.
struct LcPiParams {
  double l_f = 2.0;    // ohm (characteristic impedance of the filter choke)
  double c_f = 0.5;    // siemens (characteristic admittance of the filter cap)
  double r_f1 = 0.1;   // ohm, series damping of the choke
  double r_f2 = 0.0;   // ohm, capacitor branch ESR
  double kp_v = 0.1;   // siemens, voltage-loop proportional gain
  double ki_v = 0.05;  // siemens, voltage-loop integral gain (per scaled time)
  double kp_c = 2.0;   // ohm, current-loop proportional gain
  double ki_c = 0.4;   // ohm, current-loop integral gain (per scaled time)
};

struct GridFormingConfig {
  double omega_set = kTwoPi * 50.0;  // rad/s
  double v_set = 400.0;              // V
  double p_set = 0.0;                // W
  double q_set = 0.0;                // var
  double droop_kp = 1e-4;            // rad/s per W, > 0
  double droop_kq = 1e-3;            // V per var, > 0
  double tau_p = 0.032;              // s, power measurement filter, > 0
  double gamma = 1.0;                // clock drift factor, > 0 (1 = ideal clock)
  double nu = 0.0;                   // s, inner-loop time scale; 0 = ideal source
  InnerLoopKind inner = InnerLoopKind::FirstOrderLag;
  LcPiParams lc_pi{};
};

// ZIP coefficients in draw convention: the load absorbs
// a_p V^2 + b_p V + c_p watts (idem vars). Negative c/b values make the node
// feed power into the grid.
struct ZipConfig {
  double a_p = 0.0;  // W / V^2
  double b_p = 0.0;  // W / V
  double c_p = 0.0;  // W
  double a_q = 0.0;  // var / V^2
  double b_q = 0.0;  // var / V
  double c_q = 0.0;  // var
  double kappa = 0.0;   // s, current-tracking lag; 0 = instantaneous
  double c_snub = 1e-6; // F, terminal capacitance of the dynamic realization
  double v_clamp = 0.0; // V; divisions use max(V, v_clamp) and count clamps
};

struct InverterReducedState {
  double delta = 0.0;  // rad, angle relative to the common frame
  double p_m = 0.0;    // W, filtered active power
  double q_m = 0.0;    // var, filtered reactive power
};

struct DroopCommand {
  double u_delta = 0.0;  // rad/s
  double u_v = 0.0;      // V
};

// u_delta = omega_set - kp (p_m - p_set); u_v = v_set - kq (q_m - q_set).
DroopCommand droop_control(double p_m, double q_m,
                           const GridFormingConfig& cfg);

struct ReducedInverterDeriv {
  double ddelta = 0.0;
  double dp_m = 0.0;
  double dq_m = 0.0;
  double v_out = 0.0;  // V_i = u_v, applied instantaneously
};

// gamma * ddelta = u_delta - omega_com; gamma tau_p dPm = -Pm + P (idem Q).
ReducedInverterDeriv reduced_inverter_deriv(const InverterReducedState& s,
                                            double u_delta, double u_v,
                                            double p, double q,
                                            const GridFormingConfig& cfg,
                                            double omega_com);

// --- inner voltage loop (full model) -------------------------------------
//
// State layout by kind:
//   FirstOrderLag, dim 2: terminal voltage (d, q) in the common frame;
//     nu*gamma*vdot = v_ref - v, terminal output = state.
//   LcPiCascade, dim 8, in the inverter's local dq frame: [0:2) choke
//     current i_f, [2:4) capacitor voltage v_c, [4:6) voltage-PI integrator,
//     [6:8) current-PI integrator. Terminal output = v_c + r_f2 (i_f - i_out),
//     rotated back to the common frame.
//
// v_ref and i_out are in the common frame; i_out is the current the inverter
// injects into its node.

int inner_loop_dim(const GridFormingConfig& cfg);

void inner_loop_deriv(const GridFormingConfig& cfg, double delta,
                      double omega_com,
                      Eigen::Ref<const Eigen::VectorXd> x, const DqPair& v_ref,
                      const DqPair& i_out, Eigen::Ref<Eigen::VectorXd> dx,
                      DqPair* v_terminal = nullptr);

DqPair inner_loop_terminal(const GridFormingConfig& cfg, double delta,
                           Eigen::Ref<const Eigen::VectorXd> x,
                           const DqPair& i_out);

// Steady state of the inner loop for constant reference and output current.
Eigen::VectorXd inner_loop_settled(const GridFormingConfig& cfg, double delta,
                                   const DqPair& v_ref, const DqPair& i_out,
                                   double omega_com);

// --- ZIP load -------------------------------------------------------------

// Injection convention (generator-positive): P* = -(a_p V^2 + b_p V + c_p).
PowerTriple zip_power(double v, const ZipConfig& cfg);

// Currents drawn by the ZIP law at terminal voltage v: the impedance branch
// i_z = (a_p - j a_q) v and the current/power command branch.
struct ZipCurrents {
  DqPair i_z;
  DqPair i_cmd;
  bool clamped = false;
};
ZipCurrents zip_draw_currents(const DqPair& v, const ZipConfig& cfg);

// Dynamic load realization. State layout: (v_d, v_q, x_d, x_q) when
// kappa > 0, (v_d, v_q) when kappa == 0 (tracking is then instantaneous):
//   c_snub * vdot = i_in - i_z(v) - x
//   kappa  * xdot = i_cmd(v) - x
// i_in is the current flowing INTO the load from the network; v_out = v.
int load_state_dim(const ZipConfig& cfg);

void dynamic_load_deriv(const ZipConfig& cfg,
                        Eigen::Ref<const Eigen::VectorXd> x,
                        const DqPair& i_in, Eigen::Ref<Eigen::VectorXd> dx,
                        DqPair* v_out = nullptr, long* clamp_count = nullptr);

// Steady state of the load for a given terminal voltage.
Eigen::VectorXd dynamic_load_settled(const ZipConfig& cfg, const DqPair& v);

// --- RL line in the common dq frame ---------------------------------------

struct LineDeriv {
  DqPair dx;
  DqPair i_l;  // the line current is the state itself
};

// L xdot = -R x + L omega_com [[0,-1],[1,0]] x + (v_source - v_target).
LineDeriv line_dq_deriv(const DqPair& x, const DqPair& v_source,
                        const DqPair& v_target, const LineParams& line,
                        double omega_com);

}  // namespace mgsim

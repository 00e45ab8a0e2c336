/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "mgsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "mgsim/errors.hpp"
#include "mgsim/log.hpp"

namespace mgsim {

namespace {

constexpr double kSqrtEps = 1.4901161193847656e-08;  // sqrt(DBL_EPSILON)

double mean_gf_voltage(const Scenario& sc) {
  double sum = 0.0;
  for (const auto& inv : sc.inverters) sum += inv.v_set;
  return sc.inverters.empty() ? 1.0 : sum / static_cast<double>(sc.inverters.size());
}

// Characteristic power magnitude of the scenario, used only for residual
// scaling (never for physics).
double power_scale(const Scenario& sc) {
  double s = 1.0;
  const double v = mean_gf_voltage(sc);
  for (const auto& ld : sc.loads) {
    s = std::max(s, std::abs(ld.a_p) * v * v + std::abs(ld.b_p) * v + std::abs(ld.c_p));
    s = std::max(s, std::abs(ld.a_q) * v * v + std::abs(ld.b_q) * v + std::abs(ld.c_q));
  }
  for (const auto& inv : sc.inverters)
    s = std::max({s, std::abs(inv.p_set), std::abs(inv.q_set)});
  return s;
}

double current_scale(const Scenario& sc) {
  double zmin = std::numeric_limits<double>::infinity();
  for (const auto& e : sc.net.edges())
    zmin = std::min(zmin, std::abs(e.line.impedance(sc.settings.omega_nominal)));
  const double v = mean_gf_voltage(sc);
  return std::max(1.0, v / std::max(zmin, 1e-9));
}

}  // namespace

Scenario validate_scenario(Scenario sc) {
  const auto gf = sc.net.grid_forming_nodes();
  const auto lo = sc.net.load_nodes();
  if (gf.empty()) throw InputError("scenario: needs at least one grid-forming node");
  if (sc.inverters.size() != gf.size())
    throw InputError("scenario: grid-forming config count does not match node kinds");
  if (sc.loads.size() != lo.size())
    throw InputError("scenario: load config count does not match node kinds");

  for (size_t g = 0; g < sc.inverters.size(); ++g) {
    const auto& inv = sc.inverters[g];
    const std::string who = "inverter at node '" + sc.net.nodes()[gf[g]].id + "'";
    if (!(inv.droop_kp > 0.0)) throw InputError(who + ": droop_kp must be > 0");
    if (!(inv.droop_kq > 0.0)) throw InputError(who + ": droop_kq must be > 0");
    if (!(inv.tau_p > 0.0)) throw InputError(who + ": tau_p must be > 0");
    if (!(inv.gamma > 0.0)) throw InputError(who + ": gamma must be > 0");
    if (!(inv.nu >= 0.0)) throw InputError(who + ": nu must be >= 0");
    if (!(inv.v_set > 0.0)) throw InputError(who + ": v_set must be > 0");
    if (!(inv.omega_set > 0.0)) throw InputError(who + ": omega_set must be > 0");
    if (inv.nu > 0.0 && inv.tau_p < 10.0 * inv.nu)
      LOG_WARN("%s: tau_p (%g s) is not well above nu (%g s); the reduced "
               "model may not be trustworthy here",
               who.c_str(), inv.tau_p, inv.nu);
  }

  const double v_nom = mean_gf_voltage(sc);
  for (size_t k = 0; k < sc.loads.size(); ++k) {
    auto& ld = sc.loads[k];
    const std::string who = "load at node '" + sc.net.nodes()[lo[k]].id + "'";
    if (!(ld.c_snub > 0.0)) throw InputError(who + ": c_snub must be > 0");
    if (!(ld.kappa >= 0.0)) throw InputError(who + ": kappa must be >= 0");
    if (ld.v_clamp <= 0.0) ld.v_clamp = 0.1 * v_nom;
  }

  if (!(sc.settings.dt > 0.0)) throw InputError("settings: dt must be > 0");
  if (!(sc.settings.horizon >= 0.0)) throw InputError("settings: horizon must be >= 0");
  if (!(sc.settings.omega_nominal > 0.0))
    throw InputError("settings: omega_nominal must be > 0");

  for (const auto& ev : sc.events) {
    if (!(ev.time >= 0.0)) throw InputError("event: time must be >= 0");
    if (ev.node < 0 || ev.node >= sc.net.node_count())
      throw InputError("event: node index out of range");
    if (sc.net.nodes()[ev.node].kind != NodeKind::Load)
      throw InputError("event: node '" + sc.net.nodes()[ev.node].id +
                       "' is not a load node");
  }
  std::stable_sort(sc.events.begin(), sc.events.end(),
                   [](const LoadStepEvent& a, const LoadStepEvent& b) {
                     return a.time < b.time;
                   });
  return sc;
}

// --- Newton -----------------------------------------------------------------

NewtonReport newton_solve(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& fn,
    Eigen::VectorXd& x, const NewtonOptions& opt) {
  NewtonReport rep;
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd r(n);
  fn(x, r);
  if (static_cast<int>(r.size()) != n)
    throw InputError("newton_solve: residual dimension mismatch");

  const Eigen::VectorXd xs = opt.x_scale.size() == n
                                 ? opt.x_scale
                                 : Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd fs = opt.f_scale.size() == n
                                 ? opt.f_scale
                                 : Eigen::VectorXd::Ones(n);

  auto scaled_norm = [&](const Eigen::VectorXd& v, int* worst) {
    double m = 0.0;
    int w = 0;
    for (int i = 0; i < n; ++i) {
      const double a = std::abs(v[i]) / fs[i];
      if (a > m) {
        m = a;
        w = i;
      }
    }
    if (worst) *worst = w;
    return m;
  };

  double norm = scaled_norm(r, &rep.worst_equation);
  rep.residual_history.push_back(norm);
  if (!r.allFinite()) {
    rep.failure = NewtonReport::Failure::NonFinite;
    rep.residual = norm;
    return rep;
  }

  Eigen::MatrixXd jac(n, n);
  Eigen::VectorXd rj(n), x_try(n), r_try(n);

  while (true) {
    if (norm <= opt.tol) {
      rep.converged = true;
      rep.residual = norm;
      return rep;
    }
    if (rep.iterations >= opt.max_iter) {
      rep.failure = NewtonReport::Failure::MaxIterations;
      rep.residual = norm;
      return rep;
    }

    // forward-difference Jacobian
    for (int j = 0; j < n; ++j) {
      const double h = kSqrtEps * (xs[j] + std::abs(x[j]));
      Eigen::VectorXd xp = x;
      xp[j] += h;
      fn(xp, rj);
      jac.col(j) = (rj - r) / h;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      rep.failure = NewtonReport::Failure::SingularJacobian;
      rep.residual = norm;
      return rep;
    }
    const Eigen::VectorXd dx = lu.solve(-r);

    // backtracking on the scaled residual norm
    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opt.max_backtrack; ++bt) {
      x_try = x + lambda * dx;
      fn(x_try, r_try);
      if (r_try.allFinite()) {
        const double norm_try = scaled_norm(r_try, nullptr);
        if (norm_try < norm || norm_try <= opt.tol) {
          x = x_try;
          r = r_try;
          norm = scaled_norm(r, &rep.worst_equation);
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      rep.failure = NewtonReport::Failure::MaxIterations;  // stagnated
      rep.residual = norm;
      return rep;
    }
    ++rep.iterations;
    rep.residual_history.push_back(norm);
  }
}

// --- full system ------------------------------------------------------------

FullSystem::FullSystem(const Scenario& sc, double omega_com)
    : sc_(validate_scenario(sc)), omega_com_(omega_com) {
  layout_.gf_nodes = sc_.net.grid_forming_nodes();
  layout_.load_nodes = sc_.net.load_nodes();
  int off = 0;
  for (size_t g = 0; g < layout_.gf_nodes.size(); ++g) {
    layout_.z_off.push_back(off);
    off += 3;
    const int idim = inner_loop_dim(sc_.inverters[g]);
    if (!(sc_.inverters[g].nu > 0.0))
      throw InputError("full model: inverter at node '" +
                       sc_.net.nodes()[layout_.gf_nodes[g]].id +
                       "' has nu = 0; use the reduced model for ideal sources");
    layout_.inner_off.push_back(off);
    layout_.inner_dim.push_back(idim);
    off += idim;
  }
  for (int l = 0; l < sc_.net.edge_count(); ++l) {
    layout_.edge_off.push_back(off);
    off += 2;
  }
  for (size_t k = 0; k < layout_.load_nodes.size(); ++k) {
    layout_.load_off.push_back(off);
    layout_.load_dim.push_back(load_state_dim(sc_.loads[k]));
    off += layout_.load_dim.back();
  }
  layout_.dim = off;
}

std::vector<DqPair> FullSystem::node_currents(
    Eigen::Ref<const Eigen::VectorXd> x) const {
  std::vector<DqPair> inj(sc_.net.node_count(), DqPair{});
  for (int l = 0; l < sc_.net.edge_count(); ++l) {
    const auto& e = sc_.net.edges()[l];
    const double xd = x[layout_.edge_off[l]];
    const double xq = x[layout_.edge_off[l] + 1];
    inj[e.source].d += xd;
    inj[e.source].q += xq;
    inj[e.target].d -= xd;
    inj[e.target].q -= xq;
  }
  return inj;
}

std::vector<DqPair> FullSystem::node_voltages(
    Eigen::Ref<const Eigen::VectorXd> x) const {
  const auto inj = node_currents(x);
  std::vector<DqPair> v(sc_.net.node_count(), DqPair{});
  for (size_t g = 0; g < layout_.gf_nodes.size(); ++g) {
    const int node = layout_.gf_nodes[g];
    v[node] = inner_loop_terminal(
        sc_.inverters[g], x[layout_.z_off[g]],
        x.segment(layout_.inner_off[g], layout_.inner_dim[g]), inj[node]);
  }
  for (size_t k = 0; k < layout_.load_nodes.size(); ++k) {
    const int node = layout_.load_nodes[k];
    v[node] = {x[layout_.load_off[k]], x[layout_.load_off[k] + 1]};
  }
  return v;
}

void FullSystem::rhs(double, Eigen::Ref<const Eigen::VectorXd> x,
                     Eigen::Ref<Eigen::VectorXd> dx, RunStats* stats) const {
  const auto inj = node_currents(x);
  const auto v = node_voltages(x);

  for (size_t g = 0; g < layout_.gf_nodes.size(); ++g) {
    const auto& cfg = sc_.inverters[g];
    const int node = layout_.gf_nodes[g];
    const int z = layout_.z_off[g];
    const InverterReducedState s{x[z], x[z + 1], x[z + 2]};
    const DroopCommand cmd = droop_control(s.p_m, s.q_m, cfg);
    const PowerTriple pw = instantaneous_power(v[node], inj[node]);
    const ReducedInverterDeriv d =
        reduced_inverter_deriv(s, cmd.u_delta, cmd.u_v, pw.p, pw.q, cfg,
                               omega_com_);
    dx[z] = d.ddelta;
    dx[z + 1] = d.dp_m;
    dx[z + 2] = d.dq_m;

    const DqPair v_ref{cmd.u_v * std::sin(s.delta),
                       cmd.u_v * std::cos(s.delta)};
    inner_loop_deriv(cfg, s.delta, omega_com_,
                     x.segment(layout_.inner_off[g], layout_.inner_dim[g]),
                     v_ref, inj[node],
                     dx.segment(layout_.inner_off[g], layout_.inner_dim[g]),
                     nullptr);
  }

  for (int l = 0; l < sc_.net.edge_count(); ++l) {
    const auto& e = sc_.net.edges()[l];
    const int off = layout_.edge_off[l];
    const LineDeriv d = line_dq_deriv({x[off], x[off + 1]}, v[e.source],
                                      v[e.target], e.line, omega_com_);
    dx[off] = d.dx.d;
    dx[off + 1] = d.dx.q;
  }

  for (size_t k = 0; k < layout_.load_nodes.size(); ++k) {
    const int node = layout_.load_nodes[k];
    const int off = layout_.load_off[k];
    const DqPair i_in{-inj[node].d, -inj[node].q};
    dynamic_load_deriv(sc_.loads[k],
                       x.segment(off, layout_.load_dim[k]), i_in,
                       dx.segment(off, layout_.load_dim[k]), nullptr,
                       stats ? &stats->clamp_events : nullptr);
  }
}

Eigen::VectorXd FullSystem::state_scales() const {
  const double vs = mean_gf_voltage(sc_);
  const double ss = power_scale(sc_);
  const double is = current_scale(sc_);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(layout_.dim);
  for (size_t g = 0; g < layout_.gf_nodes.size(); ++g) {
    s[layout_.z_off[g]] = 1.0;  // rad
    s[layout_.z_off[g] + 1] = ss;
    s[layout_.z_off[g] + 2] = ss;
    const auto& cfg = sc_.inverters[g];
    if (cfg.inner == InnerLoopKind::FirstOrderLag) {
      s.segment(layout_.inner_off[g], 2).setConstant(vs);
    } else {
      const int o = layout_.inner_off[g];
      s.segment(o, 2).setConstant(is);       // i_f
      s.segment(o + 2, 2).setConstant(vs);   // v_c
      s.segment(o + 4, 2).setConstant(is / std::max(cfg.lc_pi.ki_v, 1e-12));
      s.segment(o + 6, 2).setConstant(vs / std::max(cfg.lc_pi.ki_c, 1e-12));
    }
  }
  for (int l = 0; l < sc_.net.edge_count(); ++l)
    s.segment(layout_.edge_off[l], 2).setConstant(is);
  for (size_t k = 0; k < layout_.load_nodes.size(); ++k) {
    const int o = layout_.load_off[k];
    s.segment(o, 2).setConstant(vs);
    if (layout_.load_dim[k] == 4) s.segment(o + 2, 2).setConstant(is);
  }
  return s;
}

FullSystem assemble_full(const Scenario& sc) {
  return FullSystem(sc, sc.settings.omega_nominal);
}

// --- reduced system ----------------------------------------------------------

ReducedSystem::ReducedSystem(const Scenario& sc, double omega_com)
    : sc_(validate_scenario(sc)),
      omega_com_(omega_com),
      gf_nodes_(sc_.net.grid_forming_nodes()),
      load_nodes_(sc_.net.load_nodes()),
      y_(build_admittance(sc_.net, omega_com)) {}

void ReducedSystem::node_polar(Eigen::Ref<const Eigen::VectorXd> z,
                               Eigen::Ref<const Eigen::VectorXd> alg,
                               Eigen::VectorXd& delta,
                               Eigen::VectorXd& v) const {
  const int n = sc_.net.node_count();
  delta.resize(n);
  v.resize(n);
  for (int g = 0; g < n_gf(); ++g) {
    const DroopCommand cmd =
        droop_control(z[3 * g + 1], z[3 * g + 2], sc_.inverters[g]);
    delta[gf_nodes_[g]] = z[3 * g];
    v[gf_nodes_[g]] = cmd.u_v;
  }
  for (int k = 0; k < n_load(); ++k) {
    delta[load_nodes_[k]] = alg[2 * k];
    v[load_nodes_[k]] = alg[2 * k + 1];
  }
}

void ReducedSystem::rhs(double, Eigen::Ref<const Eigen::VectorXd> z,
                        Eigen::Ref<const Eigen::VectorXd> alg,
                        Eigen::Ref<Eigen::VectorXd> dz, RunStats*) const {
  Eigen::VectorXd delta, v;
  node_polar(z, alg, delta, v);
  const NodePowers pw = power_flow(delta, v, y_);
  for (int g = 0; g < n_gf(); ++g) {
    const auto& cfg = sc_.inverters[g];
    const InverterReducedState s{z[3 * g], z[3 * g + 1], z[3 * g + 2]};
    const DroopCommand cmd = droop_control(s.p_m, s.q_m, cfg);
    const ReducedInverterDeriv d = reduced_inverter_deriv(
        s, cmd.u_delta, cmd.u_v, pw.p[gf_nodes_[g]], pw.q[gf_nodes_[g]], cfg,
        omega_com_);
    dz[3 * g] = d.ddelta;
    dz[3 * g + 1] = d.dp_m;
    dz[3 * g + 2] = d.dq_m;
  }
}

void ReducedSystem::solve_algebraic(Eigen::Ref<const Eigen::VectorXd> z,
                                    Eigen::VectorXd& alg, RunStats*) const {
  Eigen::VectorXd delta_gf(n_gf()), v_gf(n_gf());
  for (int g = 0; g < n_gf(); ++g) {
    const DroopCommand cmd =
        droop_control(z[3 * g + 1], z[3 * g + 2], sc_.inverters[g]);
    delta_gf[g] = z[3 * g];
    v_gf[g] = cmd.u_v;
  }
  solve_algebraic_loads(sc_, y_, delta_gf, v_gf, alg);
}

Eigen::VectorXd ReducedSystem::algebraic_residual(
    Eigen::Ref<const Eigen::VectorXd> z,
    Eigen::Ref<const Eigen::VectorXd> alg) const {
  Eigen::VectorXd delta, v;
  node_polar(z, alg, delta, v);
  const NodePowers pw = power_flow(delta, v, y_);
  Eigen::VectorXd r(2 * n_load());
  for (int k = 0; k < n_load(); ++k) {
    const int node = load_nodes_[k];
    const PowerTriple target = zip_power(v[node], sc_.loads[k]);
    r[2 * k] = pw.p[node] - target.p;
    r[2 * k + 1] = pw.q[node] - target.q;
  }
  return r;
}

Eigen::VectorXd ReducedSystem::state_scales() const {
  const double ss = power_scale(sc_);
  Eigen::VectorXd s(ode_dim());
  for (int g = 0; g < n_gf(); ++g) {
    s[3 * g] = 1.0;
    s[3 * g + 1] = ss;
    s[3 * g + 2] = ss;
  }
  return s;
}

Eigen::VectorXd ReducedSystem::alg_guess_flat() const {
  Eigen::VectorXd alg(alg_dim());
  const double v = mean_gf_voltage(sc_);
  for (int k = 0; k < n_load(); ++k) {
    alg[2 * k] = 0.0;
    alg[2 * k + 1] = v;
  }
  return alg;
}

ReducedSystem assemble_reduced(const Scenario& sc) {
  return ReducedSystem(sc, sc.settings.omega_nominal);
}

AlgebraicSolveInfo solve_algebraic_loads(
    const Scenario& sc, const AdmittanceMatrix& y,
    Eigen::Ref<const Eigen::VectorXd> delta_gf,
    Eigen::Ref<const Eigen::VectorXd> v_gf, Eigen::VectorXd& alg, double tol) {
  const auto gf_nodes = sc.net.grid_forming_nodes();
  const auto load_nodes = sc.net.load_nodes();
  const int nl = static_cast<int>(load_nodes.size());
  if (nl == 0) return {};
  const int n = sc.net.node_count();
  const double ss = power_scale(sc);
  const double vs = mean_gf_voltage(sc);

  Eigen::VectorXd delta(n), v(n);
  auto unpack = [&](const Eigen::VectorXd& u) {
    for (size_t g = 0; g < gf_nodes.size(); ++g) {
      delta[gf_nodes[g]] = delta_gf[static_cast<Eigen::Index>(g)];
      v[gf_nodes[g]] = v_gf[static_cast<Eigen::Index>(g)];
    }
    for (int k = 0; k < nl; ++k) {
      delta[load_nodes[k]] = u[2 * k];
      v[load_nodes[k]] = std::max(u[2 * k + 1], 1e-6 * vs);
    }
  };

  auto residual = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    unpack(u);
    const NodePowers pw = power_flow(delta, v, y);
    for (int k = 0; k < nl; ++k) {
      const PowerTriple target = zip_power(v[load_nodes[k]], sc.loads[k]);
      r[2 * k] = pw.p[load_nodes[k]] - target.p;
      r[2 * k + 1] = pw.q[load_nodes[k]] - target.q;
    }
  };

  Eigen::VectorXd u = alg;
  Eigen::VectorXd r(2 * nl), r_try(2 * nl);
  residual(u, r);
  double norm = r.cwiseAbs().maxCoeff() / ss;

  AlgebraicSolveInfo info;
  const int max_iter = 50;
  Eigen::MatrixXd jac(2 * nl, 2 * nl);

  auto fail = [&](const std::string& why) -> void {
    int worst = 0;
    r.cwiseAbs().maxCoeff(&worst);
    const std::string id = sc.net.nodes()[load_nodes[worst / 2]].id;
    throw ModelError("load power balance infeasible at node '" + id + "' (" +
                     why + "; residual " + std::to_string(r[worst]) +
                     (worst % 2 ? " var" : " W") + " after " +
                     std::to_string(info.iterations) + " iterations)");
  };

  while (norm > tol) {
    if (info.iterations >= max_iter) fail("iteration limit");
    if (!r.allFinite()) fail("non-finite residual");

    // analytic Jacobian from the power-flow partials
    unpack(u);
    const PowerFlowJacobian pj = power_flow_jacobian(delta, v, y);
    for (int k = 0; k < nl; ++k) {
      const int nk = load_nodes[k];
      const auto& ld = sc.loads[k];
      for (int m = 0; m < nl; ++m) {
        const int nm = load_nodes[m];
        jac(2 * k, 2 * m) = pj.dp_ddelta(nk, nm);
        jac(2 * k, 2 * m + 1) = pj.dp_dv(nk, nm);
        jac(2 * k + 1, 2 * m) = pj.dq_ddelta(nk, nm);
        jac(2 * k + 1, 2 * m + 1) = pj.dq_dv(nk, nm);
      }
      // d/dV of the ZIP targets (draw convention => signs flip twice)
      jac(2 * k, 2 * k + 1) += 2.0 * ld.a_p * v[nk] + ld.b_p;
      jac(2 * k + 1, 2 * k + 1) += 2.0 * ld.a_q * v[nk] + ld.b_q;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) fail("singular Jacobian, likely at the transfer limit");
    const Eigen::VectorXd du = lu.solve(-r);

    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 10; ++bt) {
      Eigen::VectorXd u_try = u + lambda * du;
      residual(u_try, r_try);
      if (r_try.allFinite()) {
        const double norm_try = r_try.cwiseAbs().maxCoeff() / ss;
        if (norm_try < norm || norm_try <= tol) {
          u = u_try;
          r = r_try;
          norm = norm_try;
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    ++info.iterations;
    if (!accepted) fail("stagnation, likely beyond the maximum power transfer");
  }

  alg = u;
  info.residual = norm * ss;
  return info;
}

// --- integration --------------------------------------------------------------

namespace {

struct Stepper {
  const DaeView& sys;
  const IntegrateOptions& opt;
  RunStats& stats;
  Eigen::VectorXd scale;

  Stepper(const DaeView& s, const IntegrateOptions& o, RunStats& st)
      : sys(s), opt(o), stats(st) {
    scale = s.state_scale.size() == s.ode_dim ? s.state_scale
                                              : Eigen::VectorXd::Ones(s.ode_dim);
  }

  void refresh_alg(double t, const Eigen::VectorXd& x, Eigen::VectorXd& alg) {
    if (sys.alg_dim > 0) sys.solve_alg(t, x, alg);
  }

  void rk4_step(double t, double h, Eigen::VectorXd& x, Eigen::VectorXd& alg) {
    Eigen::VectorXd k1(sys.ode_dim), k2(sys.ode_dim), k3(sys.ode_dim),
        k4(sys.ode_dim);
    Eigen::VectorXd xs;
    Eigen::VectorXd a = alg;
    sys.rhs(t, x, a, k1);
    xs = x + 0.5 * h * k1;
    refresh_alg(t + 0.5 * h, xs, a);
    sys.rhs(t + 0.5 * h, xs, a, k2);
    xs = x + 0.5 * h * k2;
    refresh_alg(t + 0.5 * h, xs, a);
    sys.rhs(t + 0.5 * h, xs, a, k3);
    xs = x + h * k3;
    refresh_alg(t + h, xs, a);
    sys.rhs(t + h, xs, a, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    refresh_alg(t + h, x, alg);
  }

  // one trapezoidal step; returns false when the inner Newton failed
  bool trap_step_once(double t, double h, Eigen::VectorXd& x,
                      Eigen::VectorXd& alg) {
    Eigen::VectorXd f0(sys.ode_dim);
    sys.rhs(t, x, alg, f0);

    auto residual = [&](const Eigen::VectorXd& w, Eigen::VectorXd& g) {
      Eigen::VectorXd alg_local = alg;  // warm start from step begin
      if (sys.alg_dim > 0) sys.solve_alg(t + h, w, alg_local);
      Eigen::VectorXd fw(sys.ode_dim);
      sys.rhs(t + h, w, alg_local, fw);
      g = w - x - 0.5 * h * (f0 + fw);
    };

    NewtonOptions nopt;
    nopt.tol = opt.newton_tol;
    nopt.max_iter = opt.newton_max_iter;
    nopt.x_scale = scale;
    nopt.f_scale = scale;
    Eigen::VectorXd w = x;
    const NewtonReport rep = newton_solve(residual, w, nopt);
    if (!rep.converged) return false;
    x = w;
    refresh_alg(t + h, x, alg);
    return true;
  }

  // trapezoidal with recursive halving on Newton failure; grid points are
  // preserved, only interior substeps are added
  bool trap_step(double t, double h, Eigen::VectorXd& x, Eigen::VectorXd& alg,
                 int depth) {
    if (trap_step_once(t, h, x, alg)) return true;
    if (depth >= opt.max_halvings) return false;
    ++stats.step_halvings;
    if (depth == 0)
      stats.note(t, "implicit step rejected, halving to dt=" +
                        std::to_string(0.5 * h));
    return trap_step(t, 0.5 * h, x, alg, depth + 1) &&
           trap_step(t + 0.5 * h, 0.5 * h, x, alg, depth + 1);
  }
};

}  // namespace

Trajectory integrate(const DaeView& sys, const Eigen::VectorXd& x0,
                     const Eigen::VectorXd& alg0, double t0, double t1,
                     const IntegrateOptions& opt) {
  if (!(opt.dt > 0.0)) throw InputError("integrate: dt must be > 0");
  if (t1 < t0) throw InputError("integrate: t1 must be >= t0");
  const long n_steps = std::lround((t1 - t0) / opt.dt);
  if (std::abs(t0 + static_cast<double>(n_steps) * opt.dt - t1) >
      1e-9 * std::max(1.0, std::abs(t1)))
    throw InputError("integrate: horizon is not an integer number of steps");

  Trajectory traj;
  Stepper stepper(sys, opt, traj.stats);

  traj.t.resize(n_steps + 1);
  traj.x.resize(n_steps + 1, sys.ode_dim);
  traj.alg.resize(n_steps + 1, sys.alg_dim);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd alg = alg0.size() == sys.alg_dim
                            ? Eigen::VectorXd(alg0)
                            : Eigen::VectorXd::Zero(sys.alg_dim);
  traj.t[0] = t0;
  traj.x.row(0) = x;
  if (sys.alg_dim > 0) traj.alg.row(0) = alg;

  for (long k = 0; k < n_steps; ++k) {
    const double t = t0 + static_cast<double>(k) * opt.dt;
    bool ok = true;
    std::string why;
    try {
      if (opt.method == IntegrationMethod::Rk4) {
        stepper.rk4_step(t, opt.dt, x, alg);
      } else {
        ok = stepper.trap_step(t, opt.dt, x, alg, 0);
        if (!ok) why = "implicit step failed after retries";
      }
    } catch (const ModelError& err) {
      ok = false;
      why = err.what();
    }
    if (ok && (!x.allFinite() || (sys.alg_dim > 0 && !alg.allFinite()))) {
      ok = false;
      why = "non-finite state";
    }
    if (!ok) {
      traj.completed = false;
      traj.abort_reason =
          why + " at t=" + std::to_string(t + opt.dt);
      traj.stats.note(t, "aborted: " + traj.abort_reason);
      traj.t.conservativeResize(k + 1);
      traj.x.conservativeResize(k + 1, Eigen::NoChange);
      traj.alg.conservativeResize(k + 1, Eigen::NoChange);
      return traj;
    }
    traj.t[k + 1] = t0 + static_cast<double>(k + 1) * opt.dt;
    traj.x.row(k + 1) = x;
    if (sys.alg_dim > 0) traj.alg.row(k + 1) = alg;
  }
  return traj;
}

// --- equilibrium ---------------------------------------------------------------

namespace {

Equilibrium solve_equilibrium_at(const Scenario& sc, double omega_com) {
  const auto gf_nodes = sc.net.grid_forming_nodes();
  const auto load_nodes = sc.net.load_nodes();
  const int n1 = static_cast<int>(gf_nodes.size());
  const int nl = static_cast<int>(load_nodes.size());
  const int n = sc.net.node_count();
  const AdmittanceMatrix y = build_admittance(sc.net, omega_com);
  const double vs = mean_gf_voltage(sc);
  const double ss = power_scale(sc);

  // unknowns: gf angles except the first (gauge delta_0 = 0), gf voltages,
  // load (delta, V) pairs, and the synchronous frequency
  const int dim = (n1 - 1) + n1 + 2 * nl + 1;
  Eigen::VectorXd delta(n), v(n);

  auto unpack = [&](const Eigen::VectorXd& u) {
    delta[gf_nodes[0]] = 0.0;
    for (int g = 1; g < n1; ++g) delta[gf_nodes[g]] = u[g - 1];
    for (int g = 0; g < n1; ++g) v[gf_nodes[g]] = u[(n1 - 1) + g];
    for (int k = 0; k < nl; ++k) {
      delta[load_nodes[k]] = u[2 * n1 - 1 + 2 * k];
      v[load_nodes[k]] = u[2 * n1 - 1 + 2 * k + 1];
    }
  };

  auto residual = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    unpack(u);
    const double omega_s = u[dim - 1];
    const NodePowers pw = power_flow(delta, v, y);
    for (int g = 0; g < n1; ++g) {
      const auto& cfg = sc.inverters[g];
      const int node = gf_nodes[g];
      r[g] = cfg.omega_set - cfg.droop_kp * (pw.p[node] - cfg.p_set) - omega_s;
      r[n1 + g] =
          cfg.v_set - cfg.droop_kq * (pw.q[node] - cfg.q_set) - v[node];
    }
    for (int k = 0; k < nl; ++k) {
      const int node = load_nodes[k];
      const PowerTriple tgt = zip_power(v[node], sc.loads[k]);
      r[2 * n1 + 2 * k] = pw.p[node] - tgt.p;
      r[2 * n1 + 2 * k + 1] = pw.q[node] - tgt.q;
    }
  };

  Eigen::VectorXd u(dim);
  u.setZero();
  for (int g = 0; g < n1; ++g) u[(n1 - 1) + g] = sc.inverters[g].v_set;
  for (int k = 0; k < nl; ++k) u[2 * n1 - 1 + 2 * k + 1] = vs;
  double omega_guess = 0.0;
  for (const auto& inv : sc.inverters) omega_guess += inv.omega_set;
  u[dim - 1] = omega_guess / n1;

  NewtonOptions nopt;
  nopt.tol = 1e-12;
  nopt.max_iter = 80;
  nopt.x_scale.resize(dim);
  nopt.f_scale.resize(dim);
  for (int g = 0; g < n1 - 1; ++g) nopt.x_scale[g] = 1.0;
  for (int g = 0; g < n1; ++g) nopt.x_scale[(n1 - 1) + g] = vs;
  for (int k = 0; k < nl; ++k) {
    nopt.x_scale[2 * n1 - 1 + 2 * k] = 1.0;
    nopt.x_scale[2 * n1 - 1 + 2 * k + 1] = vs;
  }
  nopt.x_scale[dim - 1] = u[dim - 1];
  for (int g = 0; g < n1; ++g) {
    nopt.f_scale[g] = 1.0;  // rad/s
    nopt.f_scale[n1 + g] = vs;
  }
  for (int k = 0; k < nl; ++k) {
    nopt.f_scale[2 * n1 + 2 * k] = ss;
    nopt.f_scale[2 * n1 + 2 * k + 1] = ss;
  }

  const NewtonReport rep = newton_solve(residual, u, nopt);
  if (!rep.converged) {
    std::string hist;
    for (double h : rep.residual_history) hist += " " + std::to_string(h);
    throw ModelError("find_equilibrium: Newton did not converge (scaled residual" +
                     hist + ")");
  }

  unpack(u);
  Equilibrium eq;
  eq.delta = delta;
  eq.v = v;
  const NodePowers pw = power_flow(delta, v, y);
  eq.p = pw.p;
  eq.q = pw.q;
  eq.omega_sync = u[dim - 1];
  eq.omega_com = omega_com;
  eq.report = rep;
  return eq;
}

}  // namespace

Equilibrium find_equilibrium(const Scenario& sc_in) {
  const Scenario sc = validate_scenario(sc_in);
  double omega_com = sc.settings.omega_nominal;
  Equilibrium eq = solve_equilibrium_at(sc, omega_com);
  if (sc.settings.omega_common == OmegaCommonMode::Synchronous) {
    for (int pass = 0; pass < 10; ++pass) {
      if (std::abs(eq.omega_sync - omega_com) <=
          1e-9 * sc.settings.omega_nominal)
        break;
      omega_com = eq.omega_sync;
      eq = solve_equilibrium_at(sc, omega_com);
    }
    LOG_INFO("equilibrium re-linearized at omega_com=%.9g rad/s", omega_com);
  }
  return eq;
}

// --- initial states -------------------------------------------------------------

Eigen::VectorXd full_initial_state(const FullSystem& sys,
                                   const Equilibrium& eq) {
  const Scenario& sc = sys.scenario();
  const FullLayout& lay = sys.layout();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.dim());

  const PhasorVector vph = phasors_from_polar(eq.delta, eq.v);
  const PhasorVector ibr = branch_currents(sc.net, sys.omega_com(), vph);
  PhasorVector inode = PhasorVector::Zero(sc.net.node_count());
  for (int l = 0; l < sc.net.edge_count(); ++l) {
    const auto& e = sc.net.edges()[l];
    inode[e.source] += ibr[l];
    inode[e.target] -= ibr[l];
  }

  const bool settled =
      sc.settings.measurement_init == MeasurementInit::Settled;
  for (size_t g = 0; g < lay.gf_nodes.size(); ++g) {
    const int node = lay.gf_nodes[g];
    const int z = lay.z_off[g];
    x[z] = eq.delta[node];
    x[z + 1] = settled ? eq.p[node] : 0.0;
    x[z + 2] = settled ? eq.q[node] : 0.0;
    const DqPair v_ref{eq.v[node] * std::sin(eq.delta[node]),
                       eq.v[node] * std::cos(eq.delta[node])};
    x.segment(lay.inner_off[g], lay.inner_dim[g]) = inner_loop_settled(
        sc.inverters[g], eq.delta[node], v_ref, from_phasor(inode[node]),
        sys.omega_com());
  }
  for (int l = 0; l < sc.net.edge_count(); ++l) {
    x[lay.edge_off[l]] = ibr[l].imag();      // d
    x[lay.edge_off[l] + 1] = ibr[l].real();  // q
  }
  for (size_t k = 0; k < lay.load_nodes.size(); ++k) {
    const int node = lay.load_nodes[k];
    x.segment(lay.load_off[k], lay.load_dim[k]) =
        dynamic_load_settled(sc.loads[k], from_phasor(vph[node]));
  }
  return x;
}

void reduced_initial_state(const ReducedSystem& sys, const Equilibrium& eq,
                           Eigen::VectorXd& z, Eigen::VectorXd& alg) {
  const Scenario& sc = sys.scenario();
  const auto gf_nodes = sc.net.grid_forming_nodes();
  const auto load_nodes = sc.net.load_nodes();
  const bool settled =
      sc.settings.measurement_init == MeasurementInit::Settled;
  z.resize(sys.ode_dim());
  for (int g = 0; g < sys.n_gf(); ++g) {
    z[3 * g] = eq.delta[gf_nodes[g]];
    z[3 * g + 1] = settled ? eq.p[gf_nodes[g]] : 0.0;
    z[3 * g + 2] = settled ? eq.q[gf_nodes[g]] : 0.0;
  }
  alg.resize(sys.alg_dim());
  for (int k = 0; k < sys.n_load(); ++k) {
    alg[2 * k] = eq.delta[load_nodes[k]];
    alg[2 * k + 1] = eq.v[load_nodes[k]];
  }
}

// --- scenario orchestration ------------------------------------------------------

OutputSchema output_schema(const Scenario& sc) {
  OutputSchema s;
  s.columns.push_back("t");
  s.units.push_back("s");
  for (const auto& nd : sc.net.nodes()) {
    s.columns.push_back("V_" + nd.id);
    s.units.push_back("V");
    s.columns.push_back("delta_" + nd.id);
    s.units.push_back("rad");
    if (nd.kind == NodeKind::GridForming) {
      s.columns.push_back("omega_" + nd.id);
      s.units.push_back("rad/s");
    }
    s.columns.push_back("P_" + nd.id);
    s.units.push_back("W");
    s.columns.push_back("Q_" + nd.id);
    s.units.push_back("var");
  }
  for (int l = 0; l < sc.net.edge_count(); ++l) {
    s.columns.push_back("Id_" + std::to_string(l));
    s.units.push_back("A");
    s.columns.push_back("Iq_" + std::to_string(l));
    s.units.push_back("A");
  }
  return s;
}

namespace {

// Flat operating point: all angles zero, grid-forming nodes at their voltage
// setpoints, load nodes at the mean setpoint.
Equilibrium flat_point(const Scenario& sc, double omega_com) {
  Equilibrium eq;
  const int n = sc.net.node_count();
  eq.delta = Eigen::VectorXd::Zero(n);
  eq.v = Eigen::VectorXd::Constant(n, mean_gf_voltage(sc));
  const auto gf_nodes = sc.net.grid_forming_nodes();
  for (size_t g = 0; g < gf_nodes.size(); ++g)
    eq.v[gf_nodes[g]] = sc.inverters[g].v_set;
  const AdmittanceMatrix y = build_admittance(sc.net, omega_com);
  const NodePowers pw = power_flow(eq.delta, eq.v, y);
  eq.p = pw.p;
  eq.q = pw.q;
  eq.omega_sync = sc.settings.omega_nominal;
  eq.omega_com = omega_com;
  return eq;
}

void apply_event(Scenario& sc, const LoadStepEvent& ev) {
  const auto load_nodes = sc.net.load_nodes();
  for (size_t k = 0; k < load_nodes.size(); ++k) {
    if (load_nodes[k] == ev.node) {
      auto& ld = sc.loads[k];
      ld.a_p = ev.a_p;
      ld.b_p = ev.b_p;
      ld.c_p = ev.c_p;
      ld.a_q = ev.a_q;
      ld.b_q = ev.b_q;
      ld.c_q = ev.c_q;
      return;
    }
  }
  throw InputError("event: node is not a load node");
}

void unwrap_angle_columns(const OutputSchema& schema, Eigen::MatrixXd& rows) {
  for (int c = 0; c < schema.width(); ++c) {
    if (schema.columns[c].rfind("delta_", 0) != 0) continue;
    for (Eigen::Index r = 1; r < rows.rows(); ++r) {
      const double prev = rows(r - 1, c);
      double cur = rows(r, c);
      cur += kTwoPi * std::round((prev - cur) / kTwoPi);
      rows(r, c) = cur;
    }
  }
}

}  // namespace

SimulationOutput simulate_scenario(const Scenario& sc_in) {
  Scenario sc = validate_scenario(sc_in);
  const SolverSettings& st = sc.settings;

  // the frame frequency, possibly re-linearized at the solved equilibrium
  Equilibrium eq;
  if (st.init == InitMode::Equilibrium ||
      st.omega_common == OmegaCommonMode::Synchronous) {
    eq = find_equilibrium(sc);
  }
  const double omega_com = st.omega_common == OmegaCommonMode::Synchronous
                               ? eq.omega_com
                               : st.omega_nominal;
  if (st.init == InitMode::Flat) eq = flat_point(sc, omega_com);

  const long n_steps = std::lround(st.horizon / st.dt);
  if (std::abs(static_cast<double>(n_steps) * st.dt - st.horizon) >
      1e-9 * std::max(1.0, st.horizon))
    throw InputError("settings: horizon must be an integer number of steps");

  // event times snapped onto the step grid
  struct Segment {
    long k_begin;
    long k_end;
  };
  std::vector<long> boundaries{0};
  std::vector<std::pair<long, LoadStepEvent>> timed;
  SimulationOutput out;
  for (const auto& ev : sc.events) {
    long k = std::lround(ev.time / st.dt);
    k = std::clamp(k, 0L, n_steps);
    if (std::abs(static_cast<double>(k) * st.dt - ev.time) >
        1e-9 * std::max(1.0, ev.time))
      out.stats.note(ev.time, "event snapped to the step grid at t=" +
                                  std::to_string(static_cast<double>(k) * st.dt));
    timed.push_back({k, ev});
    if (k > 0 && k < n_steps) boundaries.push_back(k);
  }
  boundaries.push_back(n_steps);
  std::sort(boundaries.begin(), boundaries.end());
  boundaries.erase(std::unique(boundaries.begin(), boundaries.end()),
                   boundaries.end());

  out.schema = output_schema(sc);
  out.omega_com = omega_com;

  IntegrateOptions iopt;
  iopt.method = st.method;
  iopt.dt = st.dt;

  const long n_rows = n_steps + 1;
  out.rows.resize(n_rows, out.schema.width());

  if (st.model == ModelKind::Full) {
    FullSystem sys(sc, omega_com);
    Eigen::VectorXd x = full_initial_state(sys, eq);
    const Eigen::VectorXd scales = sys.state_scales();

    auto emit_row = [&](long row, double t, const FullSystem& s,
                        const Eigen::VectorXd& xs) {
      const auto v = s.node_voltages(xs);
      const auto inj = s.node_currents(xs);
      const FullLayout& lay = s.layout();
      int c = 0;
      out.rows(row, c++) = t;
      int g = 0;
      for (int node = 0; node < sc.net.node_count(); ++node) {
        if (sc.net.nodes()[node].kind == NodeKind::GridForming) {
          const int z = lay.z_off[g];
          const auto& cfg = sc.inverters[g];
          const DroopCommand cmd = droop_control(xs[z + 1], xs[z + 2], cfg);
          out.rows(row, c++) = std::hypot(v[node].d, v[node].q);
          out.rows(row, c++) = xs[z];
          out.rows(row, c++) =
              (cmd.u_delta - omega_com) / cfg.gamma + omega_com;
          const PowerTriple pw = instantaneous_power(v[node], inj[node]);
          out.rows(row, c++) = pw.p;
          out.rows(row, c++) = pw.q;
          ++g;
        } else {
          out.rows(row, c++) = std::hypot(v[node].d, v[node].q);
          out.rows(row, c++) = std::atan2(v[node].d, v[node].q);
          const PowerTriple pw = instantaneous_power(v[node], inj[node]);
          out.rows(row, c++) = pw.p;
          out.rows(row, c++) = pw.q;
        }
      }
      for (int l = 0; l < sc.net.edge_count(); ++l) {
        out.rows(row, c++) = xs[lay.edge_off[l]];
        out.rows(row, c++) = xs[lay.edge_off[l] + 1];
      }
    };

    long row = 0;
    for (size_t seg = 0; seg + 1 < boundaries.size(); ++seg) {
      const long ka = boundaries[seg];
      const long kb = boundaries[seg + 1];
      for (const auto& [k_ev, ev] : timed)
        if (k_ev == ka) {
          apply_event(sc, ev);
          out.stats.note(static_cast<double>(ka) * st.dt,
                         "load step at node '" + sc.net.nodes()[ev.node].id +
                             "'");
        }
      FullSystem seg_sys(sc, omega_com);
      DaeView view;
      view.ode_dim = seg_sys.dim();
      view.alg_dim = 0;
      view.state_scale = scales;
      view.rhs = [&seg_sys, &out](double t, const Eigen::VectorXd& xs,
                                  const Eigen::VectorXd&, Eigen::VectorXd& dx) {
        seg_sys.rhs(t, xs, dx, &out.stats);
      };
      Trajectory tr =
          integrate(view, x, Eigen::VectorXd(), static_cast<double>(ka) * st.dt,
                    static_cast<double>(kb) * st.dt, iopt);
      out.stats.step_halvings += tr.stats.step_halvings;
      for (const auto& note : tr.stats.log) out.stats.log.push_back(note);
      const long got = tr.t.size() - 1;  // steps actually completed
      for (long i = (seg == 0 ? 0 : 1); i <= got; ++i)
        emit_row(row++, tr.t[i], seg_sys, tr.x.row(i).transpose());
      x = tr.x.row(got).transpose();
      if (!tr.completed) {
        out.completed = false;
        out.abort_reason = tr.abort_reason;
        out.rows.conservativeResize(row, Eigen::NoChange);
        break;
      }
    }
  } else {
    ReducedSystem sys(sc, omega_com);
    Eigen::VectorXd z, alg;
    reduced_initial_state(sys, eq, z, alg);
    sys.solve_algebraic(z, alg);  // consistent start
    const Eigen::VectorXd scales = sys.state_scales();

    auto emit_row = [&](long row, double t, const ReducedSystem& s,
                        const Eigen::VectorXd& zs, const Eigen::VectorXd& as) {
      Eigen::VectorXd delta, v;
      s.node_polar(zs, as, delta, v);
      const NodePowers pw = power_flow(delta, v, s.admittance());
      const PhasorVector vph = phasors_from_polar(delta, v);
      const PhasorVector ibr = branch_currents(sc.net, s.omega_com(), vph);
      int c = 0;
      out.rows(row, c++) = t;
      int g = 0;
      for (int node = 0; node < sc.net.node_count(); ++node) {
        out.rows(row, c++) = v[node];
        out.rows(row, c++) = delta[node];
        if (sc.net.nodes()[node].kind == NodeKind::GridForming) {
          const auto& cfg = sc.inverters[g];
          const DroopCommand cmd =
              droop_control(zs[3 * g + 1], zs[3 * g + 2], cfg);
          out.rows(row, c++) =
              (cmd.u_delta - s.omega_com()) / cfg.gamma + s.omega_com();
          ++g;
        }
        out.rows(row, c++) = pw.p[node];
        out.rows(row, c++) = pw.q[node];
      }
      for (int l = 0; l < sc.net.edge_count(); ++l) {
        out.rows(row, c++) = ibr[l].imag();
        out.rows(row, c++) = ibr[l].real();
      }
    };

    long row = 0;
    for (size_t seg = 0; seg + 1 < boundaries.size(); ++seg) {
      const long ka = boundaries[seg];
      const long kb = boundaries[seg + 1];
      bool stepped = false;
      for (const auto& [k_ev, ev] : timed)
        if (k_ev == ka) {
          apply_event(sc, ev);
          stepped = true;
          out.stats.note(static_cast<double>(ka) * st.dt,
                         "load step at node '" + sc.net.nodes()[ev.node].id +
                             "'");
        }
      ReducedSystem seg_sys(sc, omega_com);
      if (stepped) seg_sys.solve_algebraic(z, alg);  // re-anchor after the jump
      DaeView view;
      view.ode_dim = seg_sys.ode_dim();
      view.alg_dim = seg_sys.alg_dim();
      view.state_scale = scales;
      view.rhs = [&seg_sys, &out](double t, const Eigen::VectorXd& zs,
                                  const Eigen::VectorXd& as,
                                  Eigen::VectorXd& dz) {
        seg_sys.rhs(t, zs, as, dz, &out.stats);
      };
      view.solve_alg = [&seg_sys, &out](double, const Eigen::VectorXd& zs,
                                        Eigen::VectorXd& as) {
        seg_sys.solve_algebraic(zs, as, &out.stats);
      };
      Trajectory tr = integrate(view, z, alg, static_cast<double>(ka) * st.dt,
                                static_cast<double>(kb) * st.dt, iopt);
      out.stats.step_halvings += tr.stats.step_halvings;
      for (const auto& note : tr.stats.log) out.stats.log.push_back(note);
      const long got = tr.t.size() - 1;
      for (long i = (seg == 0 ? 0 : 1); i <= got; ++i)
        emit_row(row++, tr.t[i], seg_sys, tr.x.row(i).transpose(),
                 tr.alg.row(i).transpose());
      z = tr.x.row(got).transpose();
      alg = tr.alg.row(got).transpose();
      if (!tr.completed) {
        out.completed = false;
        out.abort_reason = tr.abort_reason;
        out.rows.conservativeResize(row, Eigen::NoChange);
        break;
      }
    }
  }

  unwrap_angle_columns(out.schema, out.rows);
  return out;
}

}  // namespace mgsim

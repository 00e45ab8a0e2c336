/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "mgsim/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "mgsim/components.hpp"
#include "mgsim/errors.hpp"
#include "mgsim/log.hpp"
#include "mgsim/signals.hpp"

namespace mgsim {

namespace {

int column_index(const OutputSchema& schema, const std::string& name) {
  for (int c = 0; c < schema.width(); ++c)
    if (schema.columns[c] == name) return c;
  throw ModelError("output schema has no column '" + name + "'");
}

// Signal classes of one run, one column per node (angles, magnitudes) or per
// grid-forming slot (filtered power, recovered from the frequency column
// through the droop law).
struct ClassSeries {
  Eigen::VectorXd t;
  Eigen::MatrixXd delta;  // node order
  Eigen::MatrixXd v;      // node order
  Eigen::MatrixXd p_m;    // grid-forming slot order
};

ClassSeries extract_classes(const Scenario& sc, const SimulationOutput& out) {
  const int n = sc.net.node_count();
  const auto gf = sc.net.grid_forming_nodes();
  const Eigen::Index rows = out.rows.rows();
  ClassSeries cs;
  cs.t = out.rows.col(0);
  cs.delta.resize(rows, n);
  cs.v.resize(rows, n);
  cs.p_m.resize(rows, static_cast<int>(gf.size()));
  for (int i = 0; i < n; ++i) {
    const std::string& id = sc.net.nodes()[i].id;
    cs.delta.col(i) = out.rows.col(column_index(out.schema, "delta_" + id));
    cs.v.col(i) = out.rows.col(column_index(out.schema, "V_" + id));
  }
  for (size_t g = 0; g < gf.size(); ++g) {
    const auto& cfg = sc.inverters[g];
    const Eigen::VectorXd omega = out.rows.col(
        column_index(out.schema, "omega_" + sc.net.nodes()[gf[g]].id));
    // omega = (u_delta - omega_com)/gamma + omega_com and
    // u_delta = omega_set - kp (Pm - p_set)  =>  invert for Pm
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double u_delta =
          cfg.gamma * (omega[r] - out.omega_com) + out.omega_com;
      cs.p_m(r, static_cast<int>(g)) =
          cfg.p_set + (cfg.omega_set - u_delta) / cfg.droop_kp;
    }
  }
  return cs;
}

std::vector<bool> window_mask(const Eigen::VectorXd& t,
                              const std::vector<double>& event_times,
                              double t_bl) {
  std::vector<bool> keep(t.size(), true);
  for (Eigen::Index r = 0; r < t.size(); ++r) {
    if (t[r] < t[0] + t_bl) keep[r] = false;
    for (double te : event_times)
      if (t[r] >= te && t[r] < te + t_bl) keep[r] = false;
  }
  return keep;
}

double baseline_window(const Scenario& sc) {
  double m = 0.0;
  for (const auto& inv : sc.inverters) m = std::max(m, inv.nu * inv.gamma);
  for (const auto& e : sc.net.edges()) {
    if (!(e.line.r_ohm > 0.0))
      throw InputError(
          "sweep: lossless line has an unbounded settling time; the "
          "boundary-layer window needs R > 0 on every line");
    m = std::max(m, e.line.l_henry / e.line.r_ohm);
  }
  for (const auto& ld : sc.loads) m = std::max(m, ld.kappa);
  return 10.0 * m;
}

std::string format_sig(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SweepGaps trajectory_gaps(const Scenario& sc, const SimulationOutput& run_a,
                          const SimulationOutput& run_b, double t_bl) {
  if (run_a.rows.rows() != run_b.rows.rows())
    throw InputError("trajectory_gaps: runs have different grid lengths");
  if ((run_a.rows.col(0) - run_b.rows.col(0)).cwiseAbs().maxCoeff() > 1e-12)
    throw InputError("trajectory_gaps: runs are on different time grids");

  const ClassSeries a = extract_classes(sc, run_a);
  const ClassSeries b = extract_classes(sc, run_b);

  std::vector<double> event_times;
  for (const auto& ev : sc.events) event_times.push_back(ev.time);
  const std::vector<bool> keep = window_mask(a.t, event_times, t_bl);

  SweepGaps g;
  for (Eigen::Index r = 0; r < a.t.size(); ++r) {
    if (!keep[r]) continue;
    for (int c = 0; c < a.delta.cols(); ++c)
      g.delta = std::max(
          g.delta, std::abs(angle_distance(a.delta(r, c), b.delta(r, c))));
    for (int c = 0; c < a.v.cols(); ++c)
      g.v = std::max(g.v, std::abs(a.v(r, c) - b.v(r, c)));
    for (int c = 0; c < a.p_m.cols(); ++c)
      g.p_m = std::max(g.p_m, std::abs(a.p_m(r, c) - b.p_m(r, c)));
  }

  if (!event_times.empty()) {
    const double t_step = *std::min_element(event_times.begin(),
                                            event_times.end());
    Eigen::Index k_step = 0;
    while (k_step + 1 < b.t.size() && b.t[k_step] < t_step - 1e-12) ++k_step;
    for (Eigen::Index r = k_step; r < b.t.size(); ++r)
      for (int c = 0; c < b.delta.cols(); ++c)
        g.swing_delta =
            std::max(g.swing_delta, std::abs(angle_distance(
                                        b.delta(r, c), b.delta(k_step, c))));
  }
  return g;
}

SweepReport epsilon_sweep(const Scenario& sc_in,
                          const std::vector<double>& epsilons) {
  const Scenario sc = validate_scenario(sc_in);
  if (epsilons.empty()) throw InputError("epsilon_sweep: empty epsilon list");
  for (size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0))
      throw InputError("epsilon_sweep: epsilon values must be > 0");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw InputError("epsilon_sweep: epsilon values must be strictly decreasing");
  }
  if (sc.events.empty())
    throw InputError("epsilon_sweep: scenario needs a disturbance event");

  SweepReport rep;
  rep.epsilons = epsilons;
  rep.t_boundary_layer = baseline_window(sc);
  rep.t_step = sc.events.front().time;
  if (sc.settings.horizon <= rep.t_step + rep.t_boundary_layer)
    throw InputError(
        "epsilon_sweep: horizon leaves no post-disturbance window");

  const Equilibrium eq_base = find_equilibrium(sc);
  rep.omega_sync_offset =
      std::abs(eq_base.omega_sync - sc.settings.omega_nominal);

  for (double eps : epsilons) {
    SweepRow row;
    row.epsilon = eps;

    // rebuild the network with scaled line inductances
    std::vector<std::pair<int, int>> endpoints;
    std::vector<LineParams> lines;
    for (const auto& e : sc.net.edges()) {
      endpoints.push_back({e.source, e.target});
      lines.push_back({e.line.r_ohm, e.line.l_henry * eps});
    }
    Scenario scaled{NetworkTopology(sc.net.nodes(), endpoints, lines),
                    sc.inverters, sc.loads, sc.settings, sc.events};
    for (auto& inv : scaled.inverters) inv.nu *= eps;
    for (auto& ld : scaled.loads) ld.kappa *= eps;

    SimulationOutput full_run, reduced_run;
    bool ok = true;
    try {
      Scenario fsc = scaled;
      fsc.settings.model = ModelKind::Full;
      full_run = simulate_scenario(fsc);
      if (!full_run.completed) {
        ok = false;
        row.note = "full model: " + full_run.abort_reason;
      }
      if (ok) {
        Scenario rsc = scaled;
        rsc.settings.model = ModelKind::Reduced;
        reduced_run = simulate_scenario(rsc);
        if (!reduced_run.completed) {
          ok = false;
          row.note = "reduced model: " + reduced_run.abort_reason;
        }
      }
    } catch (const std::exception& e) {
      ok = false;
      row.note = e.what();
    }

    if (ok) {
      row.ok = true;
      row.gaps =
          trajectory_gaps(scaled, full_run, reduced_run, rep.t_boundary_layer);
      LOG_INFO("sweep eps=%g: gap_delta=%.6g rad, gap_v=%.6g V, gap_pm=%.6g W",
               eps, row.gaps.delta, row.gaps.v, row.gaps.p_m);
    } else {
      LOG_WARN("sweep eps=%g failed: %s", eps, row.note.c_str());
    }
    rep.rows.push_back(std::move(row));
  }

  // monotonicity: >= 5% decrease per decade between consecutive usable rows
  rep.monotone = true;
  const SweepRow* prev = nullptr;
  int usable = 0;
  for (const auto& row : rep.rows) {
    if (!row.ok) continue;
    ++usable;
    if (prev) {
      const double decades = std::log10(prev->epsilon / row.epsilon);
      const double factor = std::pow(0.95, decades);
      auto check = [&](double a, double b, const char* what) {
        if (b > a * factor) {
          rep.monotone = false;
          char buf[160];
          std::snprintf(buf, sizeof(buf),
                        "%s gap did not decrease 5%%/decade: %.6g -> %.6g "
                        "between eps %g and %g",
                        what, a, b, prev->epsilon, row.epsilon);
          if (!rep.monotone_note.empty()) rep.monotone_note += "; ";
          rep.monotone_note += buf;
        }
      };
      check(prev->gaps.delta, row.gaps.delta, "delta");
      check(prev->gaps.v, row.gaps.v, "V");
      check(prev->gaps.p_m, row.gaps.p_m, "Pm");
    }
    prev = &row;
  }
  if (usable < 2) {
    rep.monotone = false;
    rep.monotone_note = "fewer than two usable rows";
  }
  if (rep.monotone) rep.monotone_note = "gaps decrease >=5% per decade";
  return rep;
}

double static_line_check(const NetworkTopology& net, const PhasorVector& v,
                         double omega_com, double dt) {
  const int ne = net.edge_count();
  if (ne == 0) return 0.0;
  if (v.size() != net.node_count())
    throw InputError("static_line_check: phasor count does not match nodes");

  double max_lr = 0.0;
  for (const auto& e : net.edges()) {
    if (!(e.line.r_ohm > 0.0))
      throw InputError(
          "static_line_check: lossless line never settles; needs R > 0");
    max_lr = std::max(max_lr, e.line.l_henry / e.line.r_ohm);
  }
  const double horizon = 20.0 * max_lr;
  const long n_steps = static_cast<long>(std::ceil(horizon / dt));

  std::vector<DqPair> vn(net.node_count());
  for (int i = 0; i < net.node_count(); ++i) vn[i] = from_phasor(v[i]);

  DaeView sys;
  sys.ode_dim = 2 * ne;
  sys.alg_dim = 0;
  sys.rhs = [&](double, const Eigen::VectorXd& x, const Eigen::VectorXd&,
                Eigen::VectorXd& dx) {
    for (int l = 0; l < ne; ++l) {
      const auto& e = net.edges()[l];
      const LineDeriv d =
          line_dq_deriv({x[2 * l], x[2 * l + 1]}, vn[e.source], vn[e.target],
                        e.line, omega_com);
      dx[2 * l] = d.dx.d;
      dx[2 * l + 1] = d.dx.q;
    }
  };

  IntegrateOptions opt;
  opt.method = IntegrationMethod::Rk4;
  opt.dt = dt;
  const Trajectory traj =
      integrate(sys, Eigen::VectorXd::Zero(2 * ne), Eigen::VectorXd(), 0.0,
                static_cast<double>(n_steps) * dt, opt);
  if (!traj.completed)
    throw ModelError("static_line_check: integration aborted (" +
                     traj.abort_reason + ")");

  const PhasorVector oracle = branch_currents(net, omega_com, v);
  double mag_max = 0.0;
  for (int l = 0; l < ne; ++l) mag_max = std::max(mag_max, std::abs(oracle[l]));
  const double floor = 1e-9 * (1.0 + mag_max);

  const Eigen::VectorXd xf = traj.x.row(traj.x.rows() - 1);
  double worst = 0.0;
  for (int l = 0; l < ne; ++l) {
    const std::complex<double> settled{xf[2 * l + 1], xf[2 * l]};
    const double dev = std::abs(settled - oracle[l]);
    worst = std::max(worst, dev / std::max(std::abs(oracle[l]), floor));
  }
  return worst;
}

AuditReport power_balance_audit(const NetworkTopology& net, double omega_com,
                                const Eigen::VectorXd& delta,
                                const Eigen::VectorXd& v) {
  const AdmittanceMatrix y = build_admittance(net, omega_com);
  const NodePowers pf = power_flow(delta, v, y);
  const PhasorVector vph = phasors_from_polar(delta, v);
  const PhasorVector iph = static_currents(y, vph);
  const PhasorVector ibr = branch_currents(net, omega_com, vph);

  AuditReport rep;
  for (int i = 0; i < net.node_count(); ++i) {
    AuditRow row;
    row.node = net.nodes()[i].id;
    row.p_w = pf.p[i];
    row.q_var = pf.q[i];
    const std::complex<double> s_oracle = vph[i] * std::conj(iph[i]);
    row.mismatch_va =
        std::abs(std::complex<double>(pf.p[i], pf.q[i]) - s_oracle);
    rep.injection_sum_w += pf.p[i];
    rep.reactive_sum_var += pf.q[i];
    if (pf.p[i] > 0.0) rep.generation_w += pf.p[i];
    rep.nodes.push_back(std::move(row));
  }
  for (int l = 0; l < net.edge_count(); ++l) {
    const auto& e = net.edges()[l];
    const double i2 = std::norm(ibr[l]);
    rep.loss_w += e.line.r_ohm * i2;
    rep.reactive_absorbed_var += e.line.reactance(omega_com) * i2;
  }
  rep.residual_w = rep.injection_sum_w - rep.loss_w;
  rep.reactive_residual_var = rep.reactive_sum_var - rep.reactive_absorbed_var;
  return rep;
}

AuditReport power_balance_audit(const Scenario& sc, const Equilibrium& eq) {
  return power_balance_audit(sc.net, eq.omega_com, eq.delta, eq.v);
}

AuditReport power_balance_audit(const Scenario& sc,
                                const SimulationOutput& out) {
  if (out.rows.rows() == 0)
    throw InputError("power_balance_audit: empty trajectory");
  const Eigen::Index last = out.rows.rows() - 1;
  const int n = sc.net.node_count();
  Eigen::VectorXd delta(n), v(n);
  for (int i = 0; i < n; ++i) {
    const std::string& id = sc.net.nodes()[i].id;
    delta[i] = out.rows(last, column_index(out.schema, "delta_" + id));
    v[i] = out.rows(last, column_index(out.schema, "V_" + id));
  }
  return power_balance_audit(sc.net, out.omega_com, delta, v);
}

NetworkTopology random_connected_network(Rng& rng, int n_nodes, double omega,
                                         double extra_edge_prob) {
  if (n_nodes < 2)
    throw InputError("random_connected_network: need at least 2 nodes");
  std::vector<NetworkNode> nodes;
  for (int i = 0; i < n_nodes; ++i) {
    NetworkNode nd;
    nd.id = "n" + std::to_string(i);
    nd.kind = (i == 0 || rng.uniform01() < 0.5) ? NodeKind::GridForming
                                                : NodeKind::Load;
    nodes.push_back(std::move(nd));
  }

  std::vector<std::pair<int, int>> endpoints;
  std::set<std::pair<int, int>> seen;
  for (int i = 1; i < n_nodes; ++i) {
    const int parent = rng.uniform_int(0, i - 1);
    endpoints.push_back({parent, i});
    seen.insert({parent, i});
  }
  for (int i = 0; i < n_nodes; ++i)
    for (int k = i + 1; k < n_nodes; ++k) {
      const bool add = rng.uniform01() < extra_edge_prob;
      if (add && !seen.count({i, k})) {
        endpoints.push_back({i, k});
        seen.insert({i, k});
      }
    }

  std::vector<LineParams> lines;
  for (size_t l = 0; l < endpoints.size(); ++l) {
    const double r = rng.uniform(0.1, 1.0);
    const double x_over_r = rng.uniform(0.5, 5.0);
    lines.push_back({r, x_over_r * r / omega});
  }
  return NetworkTopology(std::move(nodes), std::move(endpoints),
                         std::move(lines));
}

CrosscheckReport oracle_crosscheck(int instances, int max_nodes,
                                   std::uint64_t seed, double omega) {
  if (instances < 1 || max_nodes < 2)
    throw InputError("oracle_crosscheck: need >= 1 instance and >= 2 nodes");
  Rng rng(seed);
  CrosscheckReport rep;
  for (int inst = 0; inst < instances; ++inst) {
    const int n = rng.uniform_int(2, max_nodes);
    const NetworkTopology net = random_connected_network(rng, n, omega);
    Eigen::VectorXd delta(n), v(n);
    for (int i = 0; i < n; ++i) {
      delta[i] = rng.uniform(-3.141592653589793, 3.141592653589793);
      v[i] = rng.uniform(0.5, 1.5);
    }

    const AdmittanceMatrix y = build_admittance(net, omega);
    const NodePowers pf = power_flow(delta, v, y);
    const PhasorVector vph = phasors_from_polar(delta, v);
    const PhasorVector iph = static_currents(y, vph);

    double scale = 1.0;
    for (int i = 0; i < n; ++i)
      scale = std::max(scale, std::abs(vph[i] * std::conj(iph[i])));
    double rel = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::complex<double> s_oracle = vph[i] * std::conj(iph[i]);
      rel = std::max(rel, (std::abs(pf.p[i] - s_oracle.real()) +
                           std::abs(pf.q[i] - s_oracle.imag())) /
                              scale);
    }

    CrosscheckRow row{n, net.edge_count(), rel, rel < 1e-10};
    rep.worst_rel = std::max(rep.worst_rel, rel);
    if (!row.pass) {
      ++rep.failures;
      if (rep.failure_dump.empty()) {
        std::string dump = "instance " + std::to_string(inst) + ": nodes=" +
                           std::to_string(n) + "; edges:";
        for (const auto& e : net.edges())
          dump += " (" + std::to_string(e.source) + "," +
                  std::to_string(e.target) + ",R=" + format_sig(e.line.r_ohm) +
                  ",L=" + format_sig(e.line.l_henry) + ")";
        dump += "; delta:";
        for (int i = 0; i < n; ++i) dump += " " + format_sig(delta[i]);
        dump += "; v:";
        for (int i = 0; i < n; ++i) dump += " " + format_sig(v[i]);
        rep.failure_dump = std::move(dump);
        LOG_ERROR("oracle_crosscheck mismatch: %s", rep.failure_dump.c_str());
      }
    }
    rep.rows.push_back(row);
  }
  return rep;
}

ValidationBundle run_validation(const Scenario& sc_in,
                                const std::vector<double>& epsilons,
                                std::uint64_t seed) {
  const Scenario sc = validate_scenario(sc_in);
  ValidationBundle b;
  const Equilibrium eq = find_equilibrium(sc);
  b.audit = power_balance_audit(sc, eq);
  b.static_line_deviation = static_line_check(
      sc.net, phasors_from_polar(eq.delta, eq.v), sc.settings.omega_nominal);
  b.crosscheck_instances = 100;
  b.crosscheck = oracle_crosscheck(b.crosscheck_instances, 10, seed,
                                   sc.settings.omega_nominal);
  b.sweep = epsilon_sweep(sc, epsilons);
  return b;
}

}  // namespace mgsim

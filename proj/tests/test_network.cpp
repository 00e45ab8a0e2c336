/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mgsim/errors.hpp>
#include <mgsim/network.hpp>
#include <mgsim/rng.hpp>
#include <mgsim/signals.hpp>

#include <cmath>
#include <complex>

using namespace mgsim;
using cplx = std::complex<double>;

namespace {

constexpr double kOmega = 100.0 * 3.14159265358979323846;  // 2*pi*50

NetworkTopology two_node(double r, double l) {
  return NetworkTopology({{"a", NodeKind::GridForming}, {"b", NodeKind::Load}},
                         {{0, 1}}, {{r, l}});
}

NetworkTopology chain3(double r1, double l1, double r2, double l2) {
  return NetworkTopology({{"a", NodeKind::GridForming},
                          {"m", NodeKind::Load},
                          {"b", NodeKind::Load}},
                         {{0, 1}, {1, 2}}, {{r1, l1}, {r2, l2}});
}

}  // namespace

TEST_CASE("topology bookkeeping: ids, kinds, incidence") {
  NetworkTopology net = chain3(0.5, 1e-3, 0.25, 2e-3);
  CHECK(net.node_count() == 3);
  CHECK(net.edge_count() == 2);
  CHECK(net.index_of("a") == 0);
  CHECK(net.index_of("m") == 1);
  CHECK(net.index_of("nope") == -1);
  CHECK(net.grid_forming_nodes() == std::vector<int>{0});
  CHECK(net.load_nodes() == std::vector<int>{1, 2});

  const Eigen::MatrixXd b = net.incidence();
  CHECK(b.rows() == 3);
  CHECK(b.cols() == 2);
  // every column carries one +1 and one -1: columns sum to zero
  for (int c = 0; c < 2; ++c) {
    CHECK(b.col(c).sum() == doctest::Approx(0.0));
    CHECK(b.col(c).cwiseAbs().sum() == doctest::Approx(2.0));
  }
}

TEST_CASE("topology construction rejects malformed inputs") {
  std::vector<NetworkNode> nodes{{"a", NodeKind::GridForming},
                                 {"b", NodeKind::Load}};
  // self-loop
  CHECK_THROWS_AS(NetworkTopology(nodes, {{0, 0}}, {{0.1, 1e-3}}), InputError);
  // bad endpoint index
  CHECK_THROWS_AS(NetworkTopology(nodes, {{0, 5}}, {{0.1, 1e-3}}), InputError);
  // duplicate node id
  CHECK_THROWS_AS(NetworkTopology({{"a", NodeKind::GridForming},
                                   {"a", NodeKind::Load}},
                                  {{0, 1}}, {{0.1, 1e-3}}),
                  InputError);
  // duplicate edge (either orientation)
  CHECK_THROWS_AS(NetworkTopology(nodes, {{0, 1}, {1, 0}},
                                  {{0.1, 1e-3}, {0.2, 1e-3}}),
                  InputError);
  // negative resistance / nonpositive inductance
  CHECK_THROWS_AS(NetworkTopology(nodes, {{0, 1}}, {{-0.1, 1e-3}}), InputError);
  CHECK_THROWS_AS(NetworkTopology(nodes, {{0, 1}}, {{0.1, 0.0}}), InputError);
  // disconnected graph
  CHECK_THROWS_AS(NetworkTopology({{"a", NodeKind::GridForming},
                                   {"b", NodeKind::Load},
                                   {"c", NodeKind::Load},
                                   {"d", NodeKind::Load}},
                                  {{0, 1}, {2, 3}},
                                  {{0.1, 1e-3}, {0.1, 1e-3}}),
                  InputError);
  // lossless R = 0 is allowed for programmatic oracle circuits
  CHECK_NOTHROW(NetworkTopology(nodes, {{0, 1}}, {{0.0, 1e-3}}));
}

TEST_CASE("admittance of one line: unit R and X give y = 0.5 - 0.5j") {
  // R = 1 ohm, X = 1 ohm at omega, so y = 1/(1+j) = 0.5 - 0.5j
  NetworkTopology net = two_node(1.0, 1.0 / kOmega);
  const AdmittanceMatrix y = build_admittance(net, kOmega);
  CHECK(y.size() == 2);
  // diagonal entries are the raw self terms
  CHECK(y.G(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.B(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(y.G(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.B(1, 1) == doctest::Approx(-0.5).epsilon(1e-12));
  // off-diagonal accessors return the branch admittance (sign flipped)
  CHECK(y.G(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.B(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(y.adjacent(0, 1));
  // the underlying matrix stores the negated coupling
  CHECK(y.matrix()(0, 1).real() == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("static currents follow Y*v and respect KCL on branches") {
  NetworkTopology net = chain3(0.3, 1.2e-3, 0.8, 0.7e-3);
  const AdmittanceMatrix y = build_admittance(net, kOmega);
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    PhasorVector v(3);
    for (int i = 0; i < 3; ++i)
      v[i] = cplx(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const PhasorVector inj = static_currents(y, v);
    const PhasorVector direct = y.matrix() * v;
    for (int i = 0; i < 3; ++i) CHECK(std::abs(inj[i] - direct[i]) < 1e-12);

    // node injections decompose into incident branch currents
    const PhasorVector ib = branch_currents(net, kOmega, v);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(3);
    for (int l = 0; l < net.edge_count(); ++l) {
      const auto& e = net.edges()[l];
      acc[e.source] += ib[l];
      acc[e.target] -= ib[l];
    }
    for (int i = 0; i < 3; ++i) CHECK(std::abs(acc[i] - inj[i]) < 1e-12);
  }
}

TEST_CASE("two-node lossless reference flow: P = 0.5 and Q = 1 - cos(pi/6)") {
  // X = 1 ohm, R = 0, V1 = V2 = 1, angle difference pi/6
  NetworkTopology net = two_node(0.0, 1.0 / kOmega);
  const AdmittanceMatrix y = build_admittance(net, kOmega);
  Eigen::VectorXd delta(2), vmag(2);
  delta << kTwoPi / 12.0, 0.0;  // pi/6 ahead at node 1
  vmag << 1.0, 1.0;
  const NodePowers s = power_flow(delta, vmag, y);
  const double q_ref = 1.0 - std::cos(kTwoPi / 12.0);  // 0.13397459621556135
  CHECK(s.p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.p[1] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(s.p.sum() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(s.q[0] == doctest::Approx(q_ref).epsilon(1e-12));
  CHECK(s.q[1] == doctest::Approx(q_ref).epsilon(1e-12));

  // identical phasors carry nothing
  delta << 0.4, 0.4;
  const NodePowers z = power_flow(delta, vmag, y);
  CHECK(std::abs(z.p[0]) < 1e-14);
  CHECK(std::abs(z.p[1]) < 1e-14);
  CHECK(std::abs(z.q[0]) < 1e-14);
  CHECK(std::abs(z.q[1]) < 1e-14);
}

TEST_CASE("power flow matches the raw phasor product on lossy networks") {
  Rng rng(22);
  NetworkTopology net = chain3(0.45, 1.5e-3, 0.2, 0.9e-3);
  const AdmittanceMatrix y = build_admittance(net, kOmega);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd delta(3), vmag(3);
    for (int i = 0; i < 3; ++i) {
      delta[i] = rng.uniform(-3.0, 3.0);
      vmag[i] = rng.uniform(0.5, 1.5);
    }
    const NodePowers s = power_flow(delta, vmag, y);
    const PhasorVector v = phasors_from_polar(delta, vmag);
    const PhasorVector inj = static_currents(y, v);
    for (int i = 0; i < 3; ++i) {
      const cplx oracle = v[i] * std::conj(inj[i]);
      CHECK(s.p[i] == doctest::Approx(oracle.real()).epsilon(1e-10));
      CHECK(s.q[i] == doctest::Approx(oracle.imag()).epsilon(1e-10));
    }
    // conservation: total injection equals resistive branch loss
    const double loss = total_line_loss(net, kOmega, v);
    CHECK(s.p.sum() == doctest::Approx(loss).epsilon(1e-9));
    CHECK(loss >= 0.0);
  }
}

TEST_CASE("local currents give P = V*iq and Q = -V*id") {
  NetworkTopology net = chain3(0.45, 1.5e-3, 0.2, 0.9e-3);
  const AdmittanceMatrix y = build_admittance(net, kOmega);
  Rng rng(23);
  Eigen::VectorXd delta(3), vmag(3);
  for (int i = 0; i < 3; ++i) {
    delta[i] = rng.uniform(-1.0, 1.0);
    vmag[i] = rng.uniform(0.8, 1.2);
  }
  const LocalCurrents lc = local_currents(delta, vmag, y);
  const NodePowers s = power_flow(delta, vmag, y);
  for (int i = 0; i < 3; ++i) {
    CHECK(s.p[i] == doctest::Approx(vmag[i] * lc.iq[i]).epsilon(1e-12));
    CHECK(s.q[i] == doctest::Approx(-vmag[i] * lc.id[i]).epsilon(1e-12));
  }
}

TEST_CASE("analytic power-flow jacobian matches finite differences") {
  NetworkTopology net = chain3(0.45, 1.5e-3, 0.2, 0.9e-3);
  const AdmittanceMatrix y = build_admittance(net, kOmega);
  Rng rng(24);
  Eigen::VectorXd delta(3), vmag(3);
  for (int i = 0; i < 3; ++i) {
    delta[i] = rng.uniform(-0.5, 0.5);
    vmag[i] = rng.uniform(0.8, 1.2);
  }
  const PowerFlowJacobian jac = power_flow_jacobian(delta, vmag, y);
  const double h = 1e-6;
  double worst = 0.0;
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd dp = delta, dm = delta;
    dp[j] += h;
    dm[j] -= h;
    const NodePowers sp = power_flow(dp, vmag, y);
    const NodePowers sm = power_flow(dm, vmag, y);
    for (int i = 0; i < 3; ++i) {
      worst = std::max(worst, std::abs((sp.p[i] - sm.p[i]) / (2 * h) -
                                       jac.dp_ddelta(i, j)));
      worst = std::max(worst, std::abs((sp.q[i] - sm.q[i]) / (2 * h) -
                                       jac.dq_ddelta(i, j)));
    }
    Eigen::VectorXd vp = vmag, vm = vmag;
    vp[j] += h;
    vm[j] -= h;
    const NodePowers svp = power_flow(delta, vp, y);
    const NodePowers svm = power_flow(delta, vm, y);
    for (int i = 0; i < 3; ++i) {
      worst = std::max(worst, std::abs((svp.p[i] - svm.p[i]) / (2 * h) -
                                       jac.dp_dv(i, j)));
      worst = std::max(worst, std::abs((svp.q[i] - svm.q[i]) / (2 * h) -
                                       jac.dq_dv(i, j)));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("kron reduction of a chain equals the series-impedance line") {
  // eliminating the middle node of a series chain must produce the
  // admittance of the single combined line
  const double r1 = 0.3, l1 = 1.2e-3, r2 = 0.7, l2 = 0.4e-3;
  NetworkTopology net = chain3(r1, l1, r2, l2);
  const AdmittanceMatrix y = build_admittance(net, kOmega);
  const AdmittanceMatrix red = kron_reduce(y, {0, 2});
  CHECK(red.size() == 2);

  const cplx z_series = cplx(r1, l1 * kOmega) + cplx(r2, l2 * kOmega);
  const cplx y_series = 1.0 / z_series;
  CHECK(std::abs(red.matrix()(0, 0) - y_series) < 1e-12);
  CHECK(std::abs(red.matrix()(0, 1) + y_series) < 1e-12);
  CHECK(std::abs(red.matrix()(1, 1) - y_series) < 1e-12);
  // reduced matrix stays symmetric
  CHECK(std::abs(red.matrix()(0, 1) - red.matrix()(1, 0)) < 1e-15);
}

TEST_CASE("kron reduction preserves port behaviour on a random network") {
  Rng rng(25);
  // star with 5 nodes: hub 0 plus a cross link
  NetworkTopology net({{"h", NodeKind::Load},
                       {"n1", NodeKind::GridForming},
                       {"n2", NodeKind::GridForming},
                       {"n3", NodeKind::Load},
                       {"n4", NodeKind::Load}},
                      {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {3, 4}},
                      {{0.2, 1e-3},
                       {0.4, 0.8e-3},
                       {0.3, 1.1e-3},
                       {0.25, 0.6e-3},
                       {0.5, 0.9e-3}});
  const AdmittanceMatrix y = build_admittance(net, kOmega);
  const std::vector<int> retained{1, 2, 3, 4};
  const AdmittanceMatrix red = kron_reduce(y, retained);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXcd vr(4);
    for (int i = 0; i < 4; ++i)
      vr[i] = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    // full solve with zero injection at the eliminated hub
    const Eigen::MatrixXcd& yf = y.matrix();
    const cplx v_hub = -(yf(0, 1) * vr[0] + yf(0, 2) * vr[1] +
                         yf(0, 3) * vr[2] + yf(0, 4) * vr[3]) /
                       yf(0, 0);
    Eigen::VectorXcd v_full(5);
    v_full << v_hub, vr[0], vr[1], vr[2], vr[3];
    const Eigen::VectorXcd i_full = yf * v_full;
    CHECK(std::abs(i_full[0]) < 1e-12);  // hub truly current-free
    const Eigen::VectorXcd i_red = red.matrix() * vr;
    for (int i = 0; i < 4; ++i) CHECK(std::abs(i_red[i] - i_full[i + 1]) < 1e-10);
  }
}

TEST_CASE("kron reduction refuses to eliminate nodes with injections") {
  NetworkTopology net = chain3(0.3, 1.2e-3, 0.7, 0.4e-3);
  const AdmittanceMatrix y = build_admittance(net, kOmega);
  CHECK_THROWS_AS((void)kron_reduce(y, {0, 2}, {}, {false, true, false}),
                  InputError);
  CHECK_NOTHROW((void)kron_reduce(y, {0, 2}, {}, {true, false, true}));
}

TEST_CASE("polar phasor helpers roundtrip") {
  Rng rng(26);
  Eigen::VectorXd delta(4), vmag(4);
  for (int i = 0; i < 4; ++i) {
    delta[i] = rng.uniform(-3.0, 3.0);
    vmag[i] = rng.uniform(0.1, 10.0);
  }
  const PhasorVector v = phasors_from_polar(delta, vmag);
  const Eigen::VectorXd m = phasor_magnitudes(v);
  const Eigen::VectorXd a = phasor_angles(v);
  for (int i = 0; i < 4; ++i) {
    CHECK(m[i] == doctest::Approx(vmag[i]).epsilon(1e-13));
    CHECK(std::abs(angle_distance(a[i], delta[i])) < 1e-13);
  }
}

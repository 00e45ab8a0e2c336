/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "mgsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mgsim/errors.hpp"

namespace mgsim {

NetworkTopology::NetworkTopology(std::vector<NetworkNode> nodes,
                                 std::vector<std::pair<int, int>> endpoints,
                                 std::vector<LineParams> lines)
    : nodes_(std::move(nodes)) {
  const int n = static_cast<int>(nodes_.size());
  if (n < 2) throw InputError("network: need at least 2 nodes");
  if (endpoints.size() != lines.size())
    throw InputError("network: endpoint/line count mismatch");
  if (endpoints.empty()) throw InputError("network: need at least 1 edge");

  {
    std::set<std::string> seen;
    for (const auto& nd : nodes_)
      if (!seen.insert(nd.id).second)
        throw InputError("network: duplicate node id '" + nd.id + "'");
  }

  std::set<std::pair<int, int>> undirected;
  edges_.reserve(lines.size());
  for (size_t l = 0; l < lines.size(); ++l) {
    auto [a, b] = endpoints[l];
    const std::string where = "edge " + std::to_string(l);
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw InputError("network: " + where + " references a missing node");
    if (a == b)
      throw InputError("network: " + where + " ('" + nodes_[a].id +
                       "') is a self-loop");
    NetworkEdge e;
    e.source = std::min(a, b);
    e.target = std::max(a, b);
    e.line = lines[l];
    /* R = 0 is allowed so ideal lossless circuits can be built in code for
     * conservation oracles; scenario files enforce R > 0 at the parse layer. */
    if (!(e.line.r_ohm >= 0.0))
      throw InputError("network: " + where + " needs R >= 0");
    if (!(e.line.l_henry > 0.0))
      throw InputError("network: " + where + " needs L > 0");
    if (!undirected.insert({e.source, e.target}).second)
      throw InputError("network: duplicate edge between '" +
                       nodes_[e.source].id + "' and '" + nodes_[e.target].id +
                       "'");
    edges_.push_back(e);
  }

  // connectivity via breadth-first sweep from node 0
  std::vector<char> seen(n, 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  for (size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (const auto& e : edges_) {
      const int other = e.source == u ? e.target : (e.target == u ? e.source : -1);
      if (other >= 0 && !seen[other]) {
        seen[other] = 1;
        queue.push_back(other);
      }
    }
  }
  for (int i = 0; i < n; ++i)
    if (!seen[i])
      throw InputError("network: graph is disconnected, node '" +
                       nodes_[i].id + "' unreachable from '" + nodes_[0].id +
                       "'");
}

int NetworkTopology::index_of(const std::string& id) const {
  for (size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].id == id) return static_cast<int>(i);
  return -1;
}

Eigen::MatrixXd NetworkTopology::incidence() const {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(node_count(), edge_count());
  for (int l = 0; l < edge_count(); ++l) {
    b(edges_[l].source, l) = 1.0;
    b(edges_[l].target, l) = -1.0;
  }
  return b;
}

std::vector<int> NetworkTopology::grid_forming_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < node_count(); ++i)
    if (nodes_[i].kind == NodeKind::GridForming) out.push_back(i);
  return out;
}

std::vector<int> NetworkTopology::load_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < node_count(); ++i)
    if (nodes_[i].kind == NodeKind::Load) out.push_back(i);
  return out;
}

NetworkTopology build_topology(std::vector<NetworkNode> nodes,
                               std::vector<std::pair<int, int>> endpoints,
                               std::vector<LineParams> lines) {
  return NetworkTopology(std::move(nodes), std::move(endpoints),
                         std::move(lines));
}

AdmittanceMatrix AdmittanceMatrix::from_matrix(Eigen::MatrixXcd y) {
  if (y.rows() != y.cols() || y.rows() < 1)
    throw InputError("admittance: matrix must be square and nonempty");
  const double scale = std::max(1e-300, y.cwiseAbs().maxCoeff());
  if (((y - y.transpose()).cwiseAbs().maxCoeff()) > 1e-9 * scale)
    throw InputError("admittance: matrix must be symmetric");
  return AdmittanceMatrix(std::move(y));
}

AdmittanceMatrix build_admittance(const NetworkTopology& net,
                                  double omega_com) {
  if (!(omega_com > 0.0)) throw InputError("build_admittance: omega_com must be > 0");
  const int n = net.node_count();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& e : net.edges()) {
    const std::complex<double> w = 1.0 / e.line.impedance(omega_com);
    y(e.source, e.source) += w;
    y(e.target, e.target) += w;
    y(e.source, e.target) -= w;
    y(e.target, e.source) -= w;
  }
  return AdmittanceMatrix::from_matrix(std::move(y));
}

PhasorVector phasors_from_polar(const Eigen::VectorXd& delta,
                                const Eigen::VectorXd& v) {
  PhasorVector out(delta.size());
  for (Eigen::Index i = 0; i < delta.size(); ++i)
    out[i] = std::polar(v[i], delta[i]);
  return out;
}

Eigen::VectorXd phasor_magnitudes(const PhasorVector& x) {
  return x.cwiseAbs();
}

Eigen::VectorXd phasor_angles(const PhasorVector& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out[i] = std::arg(x[i]);
  return out;
}

PhasorVector static_currents(const AdmittanceMatrix& y, const PhasorVector& v) {
  if (v.size() != y.size()) throw InputError("static_currents: size mismatch");
  return y.matrix() * v;
}

LocalCurrents local_currents(const Eigen::VectorXd& delta,
                             const Eigen::VectorXd& v,
                             const AdmittanceMatrix& y) {
  const int n = y.size();
  if (delta.size() != n || v.size() != n)
    throw InputError("local_currents: size mismatch");
  LocalCurrents out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i) {
    double iq = y.G(i, i) * v[i];
    double id = y.B(i, i) * v[i];
    for (int k = 0; k < n; ++k) {
      if (k == i || !y.adjacent(i, k)) continue;
      const double c = std::cos(delta[i] - delta[k]);
      const double s = std::sin(delta[i] - delta[k]);
      iq -= (y.G(i, k) * c + y.B(i, k) * s) * v[k];
      id -= (y.B(i, k) * c - y.G(i, k) * s) * v[k];
    }
    out.iq[i] = iq;
    out.id[i] = id;
  }
  return out;
}

NodePowers power_flow(const Eigen::VectorXd& delta, const Eigen::VectorXd& v,
                      const AdmittanceMatrix& y) {
  const LocalCurrents i = local_currents(delta, v, y);
  return {v.cwiseProduct(i.iq), -v.cwiseProduct(i.id)};
}

PowerFlowJacobian power_flow_jacobian(const Eigen::VectorXd& delta,
                                      const Eigen::VectorXd& v,
                                      const AdmittanceMatrix& y) {
  const int n = y.size();
  PowerFlowJacobian j;
  j.dp_ddelta = Eigen::MatrixXd::Zero(n, n);
  j.dp_dv = Eigen::MatrixXd::Zero(n, n);
  j.dq_ddelta = Eigen::MatrixXd::Zero(n, n);
  j.dq_dv = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    j.dp_dv(i, i) = 2.0 * y.G(i, i) * v[i];
    j.dq_dv(i, i) = -2.0 * y.B(i, i) * v[i];
    for (int k = 0; k < n; ++k) {
      if (k == i || !y.adjacent(i, k)) continue;
      const double c = std::cos(delta[i] - delta[k]);
      const double s = std::sin(delta[i] - delta[k]);
      const double g = y.G(i, k);
      const double b = y.B(i, k);
      // P_i gets -(g c + b s) V_i V_k from neighbor k
      j.dp_ddelta(i, i) += (g * s - b * c) * v[i] * v[k];
      j.dp_ddelta(i, k) = (-g * s + b * c) * v[i] * v[k];
      j.dp_dv(i, i) -= (g * c + b * s) * v[k];
      j.dp_dv(i, k) = -(g * c + b * s) * v[i];
      // Q_i gets +(b c - g s) V_i V_k from neighbor k
      j.dq_ddelta(i, i) += (-b * s - g * c) * v[i] * v[k];
      j.dq_ddelta(i, k) = (b * s + g * c) * v[i] * v[k];
      j.dq_dv(i, i) += (b * c - g * s) * v[k];
      j.dq_dv(i, k) = (b * c - g * s) * v[i];
    }
  }
  return j;
}

AdmittanceMatrix kron_reduce(
    const AdmittanceMatrix& y, const std::vector<int>& retained,
    const std::vector<std::complex<double>>& eliminated_shunts,
    const std::vector<bool>& has_injection) {
  const int n = y.size();
  std::vector<char> keep(n, 0);
  for (int r : retained) {
    if (r < 0 || r >= n) throw InputError("kron_reduce: retained index out of range");
    if (keep[r]) throw InputError("kron_reduce: duplicate retained index");
    keep[r] = 1;
  }
  if (retained.empty()) throw InputError("kron_reduce: retained set is empty");

  std::vector<int> elim;
  for (int i = 0; i < n; ++i)
    if (!keep[i]) elim.push_back(i);
  if (!has_injection.empty()) {
    if (static_cast<int>(has_injection.size()) != n)
      throw InputError("kron_reduce: injection flag size mismatch");
    for (int e : elim)
      if (has_injection[e])
        throw InputError(
            "kron_reduce: node " + std::to_string(e) +
            " carries an independent injection and cannot be eliminated");
  }
  if (!eliminated_shunts.empty() &&
      eliminated_shunts.size() != elim.size())
    throw InputError("kron_reduce: shunt list size mismatch");

  if (elim.empty()) return AdmittanceMatrix::from_matrix(y.matrix());

  const int nr = static_cast<int>(retained.size());
  const int ne = static_cast<int>(elim.size());
  Eigen::MatrixXcd yrr(nr, nr), yre(nr, ne), yer(ne, nr), yee(ne, ne);
  for (int a = 0; a < nr; ++a) {
    for (int b = 0; b < nr; ++b) yrr(a, b) = y.matrix()(retained[a], retained[b]);
    for (int b = 0; b < ne; ++b) yre(a, b) = y.matrix()(retained[a], elim[b]);
  }
  for (int a = 0; a < ne; ++a) {
    for (int b = 0; b < nr; ++b) yer(a, b) = y.matrix()(elim[a], retained[b]);
    for (int b = 0; b < ne; ++b) yee(a, b) = y.matrix()(elim[a], elim[b]);
  }
  if (!eliminated_shunts.empty())
    for (int a = 0; a < ne; ++a) yee(a, a) += eliminated_shunts[a];

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(yee);
  if (!lu.isInvertible()) {
    throw ModelError(
        "kron_reduce: eliminated block is singular (rank " +
        std::to_string(lu.rank()) + " of " + std::to_string(ne) +
        "); the eliminated subnetwork floats without a shunt or retained tie");
  }
  Eigen::MatrixXcd reduced = yrr - yre * lu.solve(yer);
  // enforce exact symmetry against factorization roundoff
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  return AdmittanceMatrix::from_matrix(std::move(reduced));
}

PhasorVector branch_currents(const NetworkTopology& net, double omega_com,
                             const PhasorVector& v) {
  if (v.size() != net.node_count())
    throw InputError("branch_currents: size mismatch");
  PhasorVector out(net.edge_count());
  for (int l = 0; l < net.edge_count(); ++l) {
    const auto& e = net.edges()[l];
    out[l] = (v[e.source] - v[e.target]) / e.line.impedance(omega_com);
  }
  return out;
}

double total_line_loss(const NetworkTopology& net, double omega_com,
                       const PhasorVector& v) {
  const PhasorVector i = branch_currents(net, omega_com, v);
  double loss = 0.0;
  for (int l = 0; l < net.edge_count(); ++l)
    loss += net.edges()[l].line.r_ohm * std::norm(i[l]);
  return loss;
}

}  // namespace mgsim

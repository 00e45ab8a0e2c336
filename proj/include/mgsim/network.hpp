/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mgsim {

// Series RL line (three-phase symmetric, one dq-equivalent per edge).
struct LineParams {
  double r_ohm = 0.0;    // > 0
  double l_henry = 0.0;  // > 0
  double reactance(double omega) const { return l_henry * omega; }
  std::complex<double> impedance(double omega) const {
    return {r_ohm, l_henry * omega};
  }
};

enum class NodeKind { GridForming, Load };

struct NetworkNode {
  std::string id;
  NodeKind kind = NodeKind::Load;
};

// Stored with source = lower node index, so the incidence sign convention is
// independent of the order endpoints were written in.
struct NetworkEdge {
  int source = 0;
  int target = 0;
  LineParams line;
};

// Connected undirected graph of RL lines. Node and edge numbering follow
// input order; ids are unique.
class NetworkTopology {
 public:
  NetworkTopology(std::vector<NetworkNode> nodes,
                  std::vector<std::pair<int, int>> endpoints,
                  std::vector<LineParams> lines);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<NetworkNode>& nodes() const { return nodes_; }
  const std::vector<NetworkEdge>& edges() const { return edges_; }

  int index_of(const std::string& id) const;  // -1 when absent

  // |N| x |E| incidence matrix: +1 at each edge's source row, -1 at its
  // target row, 0 elsewhere.
  Eigen::MatrixXd incidence() const;

  std::vector<int> grid_forming_nodes() const;
  std::vector<int> load_nodes() const;

 private:
  std::vector<NetworkNode> nodes_;
  std::vector<NetworkEdge> edges_;
};

// Validating constructor wrapper (the conventional entry point).
NetworkTopology build_topology(std::vector<NetworkNode> nodes,
                               std::vector<std::pair<int, int>> endpoints,
                               std::vector<LineParams> lines);

// Symmetric nodal admittance matrix. Accessors follow the power-flow sign
// convention: G(i,i) + jB(i,i) is the raw diagonal entry, while G(i,k) +
// jB(i,k) for i != k is the NEGATED off-diagonal entry (the admittance of
// the i-k coupling itself).
class AdmittanceMatrix {
 public:
  static AdmittanceMatrix from_matrix(Eigen::MatrixXcd y);

  int size() const { return static_cast<int>(y_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return y_; }

  double G(int i, int k) const {
    return i == k ? y_(i, i).real() : -y_(i, k).real();
  }
  double B(int i, int k) const {
    return i == k ? y_(i, i).imag() : -y_(i, k).imag();
  }
  bool adjacent(int i, int k) const { return y_(i, k) != 0.0; }

 private:
  explicit AdmittanceMatrix(Eigen::MatrixXcd y) : y_(std::move(y)) {}
  Eigen::MatrixXcd y_;
};

// Y = B * diag(1/(R_l + jX_l)) * B^T with X_l = L_l * omega_com. Symmetric
// with zero row sums (the model has no shunt elements).
AdmittanceMatrix build_admittance(const NetworkTopology& net, double omega_com);

// Node phasors in the common frame, stored as x_q + j*x_d.
using PhasorVector = Eigen::VectorXcd;

PhasorVector phasors_from_polar(const Eigen::VectorXd& delta,
                                const Eigen::VectorXd& v);
Eigen::VectorXd phasor_magnitudes(const PhasorVector& x);
Eigen::VectorXd phasor_angles(const PhasorVector& x);  // atan2, in (-pi, pi]

// Injected node currents I = Y * V for fixed node voltage phasors.
PhasorVector static_currents(const AdmittanceMatrix& y, const PhasorVector& v);

// Per-node local-frame current components, written out per the component
// power-flow formulas (delta_ik = delta_i - delta_k):
//   Iq_i = G_ii V_i - sum_k (G_ik cos + B_ik sin) V_k
//   Id_i = B_ii V_i - sum_k (B_ik cos - G_ik sin) V_k
struct LocalCurrents {
  Eigen::VectorXd iq, id;
};
LocalCurrents local_currents(const Eigen::VectorXd& delta,
                             const Eigen::VectorXd& v,
                             const AdmittanceMatrix& y);

// P_i = V_i * Iq_i, Q_i = -V_i * Id_i (generator convention).
struct NodePowers {
  Eigen::VectorXd p, q;
};
NodePowers power_flow(const Eigen::VectorXd& delta, const Eigen::VectorXd& v,
                      const AdmittanceMatrix& y);

// Analytic partial derivatives of power_flow; cross-checked against finite
// differences in the tests. Used to accelerate the algebraic load solves.
struct PowerFlowJacobian {
  Eigen::MatrixXd dp_ddelta, dp_dv, dq_ddelta, dq_dv;
};
PowerFlowJacobian power_flow_jacobian(const Eigen::VectorXd& delta,
                                      const Eigen::VectorXd& v,
                                      const AdmittanceMatrix& y);

// Schur-complement elimination of the non-retained nodes:
//   Y_red = Y_rr - Y_re (Y_ee + diag(shunts))^-1 Y_er.
// Eliminated nodes must carry no independent injection; a load folded into a
// shunt admittance is handled by `eliminated_shunts` (ordered by ascending
// eliminated node index). `has_injection`, when given, flags nodes that must
// not be eliminated (e.g. grid-forming nodes).
AdmittanceMatrix kron_reduce(
    const AdmittanceMatrix& y, const std::vector<int>& retained,
    const std::vector<std::complex<double>>& eliminated_shunts = {},
    const std::vector<bool>& has_injection = {});

// Per-edge branch current phasors, source -> target orientation.
PhasorVector branch_currents(const NetworkTopology& net, double omega_com,
                             const PhasorVector& v);

// Sum of R_l * |I_l|^2 over all edges.
double total_line_loss(const NetworkTopology& net, double omega_com,
                       const PhasorVector& v);

}  // namespace mgsim

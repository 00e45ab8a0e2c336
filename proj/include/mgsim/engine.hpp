/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgsim/components.hpp"
#include "mgsim/network.hpp"

namespace mgsim {

enum class IntegrationMethod { Rk4, Trapezoidal };
enum class ModelKind { Full, Reduced };
enum class InitMode { Equilibrium, Flat };
enum class MeasurementInit { Settled, Zero };
// Frequency at which line reactances (and the rotating-frame coupling) are
// evaluated: the nominal frequency, or re-linearized at the solved
// synchronous frequency. The induced difference is reported by the
// validation module rather than silently absorbed.
enum class OmegaCommonMode { Nominal, Synchronous };

struct SolverSettings {
  double omega_nominal = kTwoPi * 50.0;  // rad/s
  double horizon = 1.0;                  // s
  double dt = 1e-4;                      // s
  IntegrationMethod method = IntegrationMethod::Trapezoidal;
  ModelKind model = ModelKind::Full;
  InitMode init = InitMode::Equilibrium;
  MeasurementInit measurement_init = MeasurementInit::Settled;
  OmegaCommonMode omega_common = OmegaCommonMode::Nominal;
};

// Replace a load node's ZIP coefficients at a point in time.
struct LoadStepEvent {
  double time = 0.0;  // s; snapped to the step grid
  int node = -1;      // node index into the topology
  double a_p = 0, b_p = 0, c_p = 0, a_q = 0, b_q = 0, c_q = 0;
};

struct Scenario {
  NetworkTopology net;
  // Slot-aligned with net.grid_forming_nodes() / net.load_nodes().
  std::vector<GridFormingConfig> inverters;
  std::vector<ZipConfig> loads;
  SolverSettings settings;
  std::vector<LoadStepEvent> events;
};

// Structural checks: config counts match node kinds, at least one
// grid-forming node, parameter ranges, event targets are load nodes.
// Returns the scenario with derived defaults (load voltage clamps) filled in.
Scenario validate_scenario(Scenario sc);

// Counters and notes accumulated over one run.
struct RunEvent {
  double time = 0.0;
  std::string what;
};
struct RunStats {
  long clamp_events = 0;
  long step_halvings = 0;
  std::vector<RunEvent> log;
  void note(double t, std::string what) { log.push_back({t, std::move(what)}); }
};

// --- generic Newton -------------------------------------------------------

struct NewtonOptions {
  double tol = 1e-10;  // on the scaled residual inf-norm
  int max_iter = 50;
  int max_backtrack = 8;
  Eigen::VectorXd x_scale;  // finite-difference step scales (default 1)
  Eigen::VectorXd f_scale;  // residual scales (default 1)
};

struct NewtonReport {
  enum class Failure { None, SingularJacobian, MaxIterations, NonFinite };
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // final scaled inf-norm
  std::vector<double> residual_history;
  Failure failure = Failure::None;
  int worst_equation = -1;  // index of the largest scaled residual entry
};

// Damped Newton with forward-difference Jacobian (step sqrt(eps) * scale).
// On success x holds the solution; on failure x holds the best iterate.
NewtonReport newton_solve(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& fn,
    Eigen::VectorXd& x, const NewtonOptions& opt = {});

// --- systems ---------------------------------------------------------------

// Index map of the full-order state vector: per grid-forming node the slow
// block (delta, Pm, Qm), then its inner-loop block; then per edge the line
// current pair; then per load node the load block.
struct FullLayout {
  std::vector<int> gf_nodes, load_nodes;
  std::vector<int> z_off;                  // per gf slot, 3 entries each
  std::vector<int> inner_off, inner_dim;   // per gf slot
  std::vector<int> edge_off;               // per edge, 2 entries each
  std::vector<int> load_off, load_dim;     // per load slot
  int dim = 0;
};

class FullSystem {
 public:
  FullSystem(const Scenario& sc, double omega_com);

  int dim() const { return layout_.dim; }
  const FullLayout& layout() const { return layout_; }
  double omega_com() const { return omega_com_; }

  void rhs(double t, Eigen::Ref<const Eigen::VectorXd> x,
           Eigen::Ref<Eigen::VectorXd> dx, RunStats* stats = nullptr) const;

  // per-state magnitude scales (rad, W, var, V, A) for solver tolerances
  Eigen::VectorXd state_scales() const;

  // Node terminal voltages (common frame) for a given state.
  std::vector<DqPair> node_voltages(Eigen::Ref<const Eigen::VectorXd> x) const;
  // Node injection currents from the line states.
  std::vector<DqPair> node_currents(Eigen::Ref<const Eigen::VectorXd> x) const;

  const Scenario& scenario() const { return sc_; }

 private:
  Scenario sc_;
  double omega_com_;
  FullLayout layout_;
};

class ReducedSystem {
 public:
  ReducedSystem(const Scenario& sc, double omega_com);

  int ode_dim() const { return 3 * n_gf(); }
  int alg_dim() const { return 2 * n_load(); }
  int n_gf() const { return static_cast<int>(gf_nodes_.size()); }
  int n_load() const { return static_cast<int>(load_nodes_.size()); }
  double omega_com() const { return omega_com_; }
  const AdmittanceMatrix& admittance() const { return y_; }

  // ODE right side; `alg` must hold a consistent algebraic solution.
  void rhs(double t, Eigen::Ref<const Eigen::VectorXd> z,
           Eigen::Ref<const Eigen::VectorXd> alg,
           Eigen::Ref<Eigen::VectorXd> dz, RunStats* stats = nullptr) const;

  // Solve the load power balances at the operating point implied by z,
  // warm-starting from (and overwriting) `alg`.
  void solve_algebraic(Eigen::Ref<const Eigen::VectorXd> z,
                       Eigen::VectorXd& alg, RunStats* stats = nullptr) const;

  // Residual of the load power balances at (z, alg); used by tests.
  Eigen::VectorXd algebraic_residual(Eigen::Ref<const Eigen::VectorXd> z,
                                     Eigen::Ref<const Eigen::VectorXd> alg) const;

  // Full node-order angle and magnitude vectors from (z, alg).
  void node_polar(Eigen::Ref<const Eigen::VectorXd> z,
                  Eigen::Ref<const Eigen::VectorXd> alg,
                  Eigen::VectorXd& delta, Eigen::VectorXd& v) const;

  Eigen::VectorXd state_scales() const;
  Eigen::VectorXd alg_guess_flat() const;

  const Scenario& scenario() const { return sc_; }

 private:
  Scenario sc_;
  double omega_com_;
  std::vector<int> gf_nodes_, load_nodes_;
  AdmittanceMatrix y_;
};

FullSystem assemble_full(const Scenario& sc);
ReducedSystem assemble_reduced(const Scenario& sc);

// Load-node power balance solve at fixed grid-forming phasors. alg holds
// (delta_k, V_k) interleaved per load slot; it is the warm start and the
// result. Throws ModelError naming the worst node on infeasibility.
struct AlgebraicSolveInfo {
  int iterations = 0;
  double residual = 0.0;
};
AlgebraicSolveInfo solve_algebraic_loads(
    const Scenario& sc, const AdmittanceMatrix& y,
    Eigen::Ref<const Eigen::VectorXd> delta_gf,
    Eigen::Ref<const Eigen::VectorXd> v_gf, Eigen::VectorXd& alg,
    double tol = 1e-10);

// --- integration ------------------------------------------------------------

// Semi-explicit DAE view: a plain ODE when alg_dim == 0. The integrator
// re-solves the algebraic part after every stage (index-1 treatment).
struct DaeView {
  int ode_dim = 0;
  int alg_dim = 0;
  std::function<void(double, const Eigen::VectorXd&, const Eigen::VectorXd&,
                     Eigen::VectorXd&)>
      rhs;
  std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>
      solve_alg;                 // unused when alg_dim == 0
  Eigen::VectorXd state_scale;  // optional, default 1
};

struct IntegrateOptions {
  IntegrationMethod method = IntegrationMethod::Rk4;
  double dt = 1e-3;
  double newton_tol = 1e-10;
  int newton_max_iter = 25;
  int max_halvings = 12;  // per-step implicit retries
};

struct Trajectory {
  Eigen::VectorXd t;
  Eigen::MatrixXd x;    // one row per snapshot
  Eigen::MatrixXd alg;  // zero columns for plain ODEs
  bool completed = true;
  std::string abort_reason;
  RunStats stats;
};

Trajectory integrate(const DaeView& sys, const Eigen::VectorXd& x0,
                     const Eigen::VectorXd& alg0, double t0, double t1,
                     const IntegrateOptions& opt);

// --- equilibrium ------------------------------------------------------------

struct Equilibrium {
  Eigen::VectorXd delta, v, p, q;  // per node, full node order
  double omega_sync = 0.0;         // rad/s
  double omega_com = 0.0;          // frame used for the admittance
  NewtonReport report;
};

// Newton solve of [equal droop frequencies; droop voltage laws; load power
// balances] with the first grid-forming node's angle gauged to zero.
Equilibrium find_equilibrium(const Scenario& sc);

// --- scenario runs ----------------------------------------------------------

struct OutputSchema {
  std::vector<std::string> columns;  // including leading "t"
  std::vector<std::string> units;
  int width() const { return static_cast<int>(columns.size()); }
};
OutputSchema output_schema(const Scenario& sc);

struct SimulationOutput {
  OutputSchema schema;
  Eigen::MatrixXd rows;  // column 0 is t
  RunStats stats;
  double omega_com = 0.0;
  bool completed = true;
  std::string abort_reason;
};

// Full orchestration: equilibrium/flat init, event segmentation, integration,
// output extraction on the uniform grid.
SimulationOutput simulate_scenario(const Scenario& sc);

// State initializers (exposed for validation/testing).
Eigen::VectorXd full_initial_state(const FullSystem& sys, const Equilibrium& eq);
void reduced_initial_state(const ReducedSystem& sys, const Equilibrium& eq,
                           Eigen::VectorXd& z, Eigen::VectorXd& alg);

}  // namespace mgsim

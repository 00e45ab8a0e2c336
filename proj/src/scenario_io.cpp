/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "mgsim/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mgsim/errors.hpp"

namespace mgsim {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& source, const std::string& path,
                       const std::string& message) {
  throw InputError(source + ": " + path + ": " + message);
}

const json& require_key(const json& obj, const std::string& source,
                        const std::string& path, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(source, path + "." + key, "missing required key");
  return *it;
}

void reject_unknown(const json& obj, const std::string& source,
                    const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) fail(source, path, "unknown key '" + item.key() + "'");
  }
}

double as_number(const json& v, const std::string& source,
                 const std::string& path) {
  if (!v.is_number()) fail(source, path, "expected a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& source,
                      const std::string& path) {
  if (!v.is_string()) fail(source, path, "expected a string");
  return v.get<std::string>();
}

double number_or(const json& obj, const std::string& source,
                 const std::string& path, const std::string& key,
                 double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  return as_number(*it, source, path + "." + key);
}

std::string string_choice(const json& v, const std::string& source,
                          const std::string& path,
                          std::initializer_list<const char*> choices) {
  const std::string s = as_string(v, source, path);
  for (const char* c : choices)
    if (s == c) return s;
  std::string msg = "expected one of {";
  bool first = true;
  for (const char* c : choices) {
    if (!first) msg += ", ";
    msg += std::string("\"") + c + "\"";
    first = false;
  }
  fail(source, path, msg + "}, got \"" + s + "\"");
}

GridFormingConfig parse_gf_params(const json& p, const std::string& source,
                                  const std::string& path) {
  if (!p.is_object()) fail(source, path, "expected an object");
  reject_unknown(p, source, path,
                 {"omega_set_rad_s", "v_set_v", "p_set_w", "q_set_var",
                  "droop_kp_rad_s_per_w", "droop_kq_v_per_var", "tau_p_s",
                  "gamma", "nu_s", "inner", "lc_pi"});
  GridFormingConfig cfg;
  cfg.omega_set = number_or(p, source, path, "omega_set_rad_s", cfg.omega_set);
  cfg.v_set = number_or(p, source, path, "v_set_v", cfg.v_set);
  cfg.p_set = number_or(p, source, path, "p_set_w", cfg.p_set);
  cfg.q_set = number_or(p, source, path, "q_set_var", cfg.q_set);
  cfg.droop_kp =
      number_or(p, source, path, "droop_kp_rad_s_per_w", cfg.droop_kp);
  cfg.droop_kq =
      number_or(p, source, path, "droop_kq_v_per_var", cfg.droop_kq);
  cfg.tau_p = number_or(p, source, path, "tau_p_s", cfg.tau_p);
  cfg.gamma = number_or(p, source, path, "gamma", cfg.gamma);
  cfg.nu = number_or(p, source, path, "nu_s", cfg.nu);
  if (auto it = p.find("inner"); it != p.end()) {
    const std::string s =
        string_choice(*it, source, path + ".inner", {"lag", "lc_pi"});
    cfg.inner =
        s == "lag" ? InnerLoopKind::FirstOrderLag : InnerLoopKind::LcPiCascade;
  }
  if (auto it = p.find("lc_pi"); it != p.end()) {
    const json& q = *it;
    const std::string lp = path + ".lc_pi";
    if (!q.is_object()) fail(source, lp, "expected an object");
    reject_unknown(q, source, lp,
                   {"l_f_ohm", "c_f_siemens", "r_f1_ohm", "r_f2_ohm",
                    "kp_v_siemens", "ki_v_siemens", "kp_c_ohm", "ki_c_ohm"});
    cfg.lc_pi.l_f = number_or(q, source, lp, "l_f_ohm", cfg.lc_pi.l_f);
    cfg.lc_pi.c_f = number_or(q, source, lp, "c_f_siemens", cfg.lc_pi.c_f);
    cfg.lc_pi.r_f1 = number_or(q, source, lp, "r_f1_ohm", cfg.lc_pi.r_f1);
    cfg.lc_pi.r_f2 = number_or(q, source, lp, "r_f2_ohm", cfg.lc_pi.r_f2);
    cfg.lc_pi.kp_v = number_or(q, source, lp, "kp_v_siemens", cfg.lc_pi.kp_v);
    cfg.lc_pi.ki_v = number_or(q, source, lp, "ki_v_siemens", cfg.lc_pi.ki_v);
    cfg.lc_pi.kp_c = number_or(q, source, lp, "kp_c_ohm", cfg.lc_pi.kp_c);
    cfg.lc_pi.ki_c = number_or(q, source, lp, "ki_c_ohm", cfg.lc_pi.ki_c);
  }
  return cfg;
}

void parse_zip_coeffs(const json& p, const std::string& source,
                      const std::string& path, bool required, ZipConfig& cfg) {
  if (required) {
    for (const char* key :
         {"a_p_w_per_v2", "b_p_w_per_v", "c_p_w", "a_q_var_per_v2",
          "b_q_var_per_v", "c_q_var"})
      require_key(p, source, path, key);
  }
  cfg.a_p = number_or(p, source, path, "a_p_w_per_v2", cfg.a_p);
  cfg.b_p = number_or(p, source, path, "b_p_w_per_v", cfg.b_p);
  cfg.c_p = number_or(p, source, path, "c_p_w", cfg.c_p);
  cfg.a_q = number_or(p, source, path, "a_q_var_per_v2", cfg.a_q);
  cfg.b_q = number_or(p, source, path, "b_q_var_per_v", cfg.b_q);
  cfg.c_q = number_or(p, source, path, "c_q_var", cfg.c_q);
}

ZipConfig parse_load_params(const json& p, const std::string& source,
                            const std::string& path) {
  if (!p.is_object()) fail(source, path, "expected an object");
  reject_unknown(p, source, path,
                 {"a_p_w_per_v2", "b_p_w_per_v", "c_p_w", "a_q_var_per_v2",
                  "b_q_var_per_v", "c_q_var", "kappa_s", "c_snub_f",
                  "v_clamp_v"});
  ZipConfig cfg;
  parse_zip_coeffs(p, source, path, false, cfg);
  cfg.kappa = number_or(p, source, path, "kappa_s", cfg.kappa);
  cfg.c_snub = number_or(p, source, path, "c_snub_f", cfg.c_snub);
  cfg.v_clamp = number_or(p, source, path, "v_clamp_v", cfg.v_clamp);
  return cfg;
}

SolverSettings parse_settings(const json& s, const std::string& source,
                              const std::string& path) {
  if (!s.is_object()) fail(source, path, "expected an object");
  reject_unknown(s, source, path,
                 {"omega_nominal_rad_s", "horizon_s", "dt_s", "method",
                  "model", "init", "measurement_init", "omega_common"});
  SolverSettings st;
  st.omega_nominal =
      number_or(s, source, path, "omega_nominal_rad_s", st.omega_nominal);
  st.horizon = number_or(s, source, path, "horizon_s", st.horizon);
  st.dt = number_or(s, source, path, "dt_s", st.dt);
  if (auto it = s.find("method"); it != s.end())
    st.method = string_choice(*it, source, path + ".method",
                              {"rk4", "trapezoidal"}) == "rk4"
                    ? IntegrationMethod::Rk4
                    : IntegrationMethod::Trapezoidal;
  if (auto it = s.find("model"); it != s.end())
    st.model = string_choice(*it, source, path + ".model",
                             {"full", "reduced"}) == "full"
                   ? ModelKind::Full
                   : ModelKind::Reduced;
  if (auto it = s.find("init"); it != s.end())
    st.init = string_choice(*it, source, path + ".init",
                            {"equilibrium", "flat"}) == "equilibrium"
                  ? InitMode::Equilibrium
                  : InitMode::Flat;
  if (auto it = s.find("measurement_init"); it != s.end())
    st.measurement_init = string_choice(*it, source, path + ".measurement_init",
                                        {"settled", "zero"}) == "settled"
                              ? MeasurementInit::Settled
                              : MeasurementInit::Zero;
  if (auto it = s.find("omega_common"); it != s.end())
    st.omega_common = string_choice(*it, source, path + ".omega_common",
                                    {"nominal", "synchronous"}) == "nominal"
                          ? OmegaCommonMode::Nominal
                          : OmegaCommonMode::Synchronous;
  return st;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text,
                             const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(source + ": not valid JSON: " + e.what());
  }
  if (!root.is_object()) fail(source, "$", "expected a JSON object");
  reject_unknown(root, source, "$", {"nodes", "lines", "settings", "events"});

  // nodes
  const json& jnodes = require_key(root, source, "$", "nodes");
  if (!jnodes.is_array() || jnodes.size() < 2)
    fail(source, "nodes", "expected an array of at least 2 nodes");
  std::vector<NetworkNode> nodes;
  std::vector<GridFormingConfig> inverters;
  std::vector<ZipConfig> loads;
  for (size_t i = 0; i < jnodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    const json& jn = jnodes[i];
    if (!jn.is_object()) fail(source, path, "expected an object");
    reject_unknown(jn, source, path, {"id", "kind", "params"});
    NetworkNode nd;
    nd.id = as_string(require_key(jn, source, path, "id"), source,
                      path + ".id");
    if (nd.id.empty()) fail(source, path + ".id", "empty node id");
    const std::string kind =
        string_choice(require_key(jn, source, path, "kind"), source,
                      path + ".kind", {"grid_forming", "load"});
    nd.kind = kind == "grid_forming" ? NodeKind::GridForming : NodeKind::Load;
    const json params =
        jn.contains("params") ? jn.at("params") : json::object();
    if (nd.kind == NodeKind::GridForming)
      inverters.push_back(parse_gf_params(params, source, path + ".params"));
    else
      loads.push_back(parse_load_params(params, source, path + ".params"));
    nodes.push_back(std::move(nd));
  }

  auto node_index = [&](const std::string& id) -> int {
    for (size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
  };

  // lines
  const json& jlines = require_key(root, source, "$", "lines");
  if (!jlines.is_array() || jlines.empty())
    fail(source, "lines", "expected a non-empty array");
  std::vector<std::pair<int, int>> endpoints;
  std::vector<LineParams> lines;
  for (size_t l = 0; l < jlines.size(); ++l) {
    const std::string path = "lines[" + std::to_string(l) + "]";
    const json& jl = jlines[l];
    if (!jl.is_object()) fail(source, path, "expected an object");
    reject_unknown(jl, source, path, {"from", "to", "R_ohm", "L_henry"});
    const std::string from = as_string(require_key(jl, source, path, "from"),
                                       source, path + ".from");
    const std::string to =
        as_string(require_key(jl, source, path, "to"), source, path + ".to");
    const int fi = node_index(from);
    const int ti = node_index(to);
    if (fi < 0)
      fail(source, path + ".from", "references unknown node id \"" + from + "\"");
    if (ti < 0)
      fail(source, path + ".to", "references unknown node id \"" + to + "\"");
    LineParams lp;
    lp.r_ohm = as_number(require_key(jl, source, path, "R_ohm"), source,
                         path + ".R_ohm");
    lp.l_henry = as_number(require_key(jl, source, path, "L_henry"), source,
                           path + ".L_henry");
    if (!(lp.r_ohm > 0.0)) fail(source, path + ".R_ohm", "must be > 0");
    if (!(lp.l_henry > 0.0)) fail(source, path + ".L_henry", "must be > 0");
    endpoints.push_back({fi, ti});
    lines.push_back(lp);
  }

  // settings
  SolverSettings settings;
  if (root.contains("settings"))
    settings = parse_settings(root.at("settings"), source, "settings");

  // events
  std::vector<LoadStepEvent> events;
  if (root.contains("events")) {
    const json& jevents = root.at("events");
    if (!jevents.is_array()) fail(source, "events", "expected an array");
    for (size_t e = 0; e < jevents.size(); ++e) {
      const std::string path = "events[" + std::to_string(e) + "]";
      const json& je = jevents[e];
      if (!je.is_object()) fail(source, path, "expected an object");
      reject_unknown(je, source, path, {"time_s", "node", "zip"});
      LoadStepEvent ev;
      ev.time = as_number(require_key(je, source, path, "time_s"), source,
                          path + ".time_s");
      const std::string id = as_string(require_key(je, source, path, "node"),
                                       source, path + ".node");
      ev.node = node_index(id);
      if (ev.node < 0)
        fail(source, path + ".node",
             "references unknown node id \"" + id + "\"");
      if (nodes[ev.node].kind != NodeKind::Load)
        fail(source, path + ".node",
             "node \"" + id + "\" is not a load node");
      const json& jz = require_key(je, source, path, "zip");
      const std::string zp = path + ".zip";
      if (!jz.is_object()) fail(source, zp, "expected an object");
      reject_unknown(jz, source, zp,
                     {"a_p_w_per_v2", "b_p_w_per_v", "c_p_w", "a_q_var_per_v2",
                      "b_q_var_per_v", "c_q_var"});
      ZipConfig tmp;
      parse_zip_coeffs(jz, source, zp, true, tmp);
      ev.a_p = tmp.a_p;
      ev.b_p = tmp.b_p;
      ev.c_p = tmp.c_p;
      ev.a_q = tmp.a_q;
      ev.b_q = tmp.b_q;
      ev.c_q = tmp.c_q;
      events.push_back(ev);
    }
  }

  // topology construction performs the structural graph checks
  Scenario sc{NetworkTopology(std::move(nodes), std::move(endpoints),
                              std::move(lines)),
              std::move(inverters), std::move(loads), settings,
              std::move(events)};
  return validate_scenario(std::move(sc));
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path);
}

std::string serialize_scenario(const Scenario& sc) {
  ojson root;
  root["nodes"] = ojson::array();
  int g = 0, k = 0;
  for (const auto& nd : sc.net.nodes()) {
    ojson jn;
    jn["id"] = nd.id;
    if (nd.kind == NodeKind::GridForming) {
      const auto& c = sc.inverters[g++];
      jn["kind"] = "grid_forming";
      ojson p;
      p["omega_set_rad_s"] = c.omega_set;
      p["v_set_v"] = c.v_set;
      p["p_set_w"] = c.p_set;
      p["q_set_var"] = c.q_set;
      p["droop_kp_rad_s_per_w"] = c.droop_kp;
      p["droop_kq_v_per_var"] = c.droop_kq;
      p["tau_p_s"] = c.tau_p;
      p["gamma"] = c.gamma;
      p["nu_s"] = c.nu;
      p["inner"] = c.inner == InnerLoopKind::FirstOrderLag ? "lag" : "lc_pi";
      ojson lc;
      lc["l_f_ohm"] = c.lc_pi.l_f;
      lc["c_f_siemens"] = c.lc_pi.c_f;
      lc["r_f1_ohm"] = c.lc_pi.r_f1;
      lc["r_f2_ohm"] = c.lc_pi.r_f2;
      lc["kp_v_siemens"] = c.lc_pi.kp_v;
      lc["ki_v_siemens"] = c.lc_pi.ki_v;
      lc["kp_c_ohm"] = c.lc_pi.kp_c;
      lc["ki_c_ohm"] = c.lc_pi.ki_c;
      p["lc_pi"] = std::move(lc);
      jn["params"] = std::move(p);
    } else {
      const auto& c = sc.loads[k++];
      jn["kind"] = "load";
      ojson p;
      p["a_p_w_per_v2"] = c.a_p;
      p["b_p_w_per_v"] = c.b_p;
      p["c_p_w"] = c.c_p;
      p["a_q_var_per_v2"] = c.a_q;
      p["b_q_var_per_v"] = c.b_q;
      p["c_q_var"] = c.c_q;
      p["kappa_s"] = c.kappa;
      p["c_snub_f"] = c.c_snub;
      p["v_clamp_v"] = c.v_clamp;
      jn["params"] = std::move(p);
    }
    root["nodes"].push_back(std::move(jn));
  }

  root["lines"] = ojson::array();
  for (const auto& e : sc.net.edges()) {
    ojson jl;
    jl["from"] = sc.net.nodes()[e.source].id;
    jl["to"] = sc.net.nodes()[e.target].id;
    jl["R_ohm"] = e.line.r_ohm;
    jl["L_henry"] = e.line.l_henry;
    root["lines"].push_back(std::move(jl));
  }

  ojson st;
  st["omega_nominal_rad_s"] = sc.settings.omega_nominal;
  st["horizon_s"] = sc.settings.horizon;
  st["dt_s"] = sc.settings.dt;
  st["method"] =
      sc.settings.method == IntegrationMethod::Rk4 ? "rk4" : "trapezoidal";
  st["model"] = sc.settings.model == ModelKind::Full ? "full" : "reduced";
  st["init"] =
      sc.settings.init == InitMode::Equilibrium ? "equilibrium" : "flat";
  st["measurement_init"] =
      sc.settings.measurement_init == MeasurementInit::Settled ? "settled"
                                                               : "zero";
  st["omega_common"] = sc.settings.omega_common == OmegaCommonMode::Nominal
                           ? "nominal"
                           : "synchronous";
  root["settings"] = std::move(st);

  root["events"] = ojson::array();
  for (const auto& ev : sc.events) {
    ojson je;
    je["time_s"] = ev.time;
    je["node"] = sc.net.nodes()[ev.node].id;
    ojson jz;
    jz["a_p_w_per_v2"] = ev.a_p;
    jz["b_p_w_per_v"] = ev.b_p;
    jz["c_p_w"] = ev.c_p;
    jz["a_q_var_per_v2"] = ev.a_q;
    jz["b_q_var_per_v"] = ev.b_q;
    jz["c_q_var"] = ev.c_q;
    je["zip"] = std::move(jz);
    root["events"].push_back(std::move(je));
  }

  return root.dump(2) + "\n";
}

std::string format_csv_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const SimulationOutput& out) {
  for (int c = 0; c < out.schema.width(); ++c)
    os << (c ? "," : "") << out.schema.columns[c];
  os << "\n# ";
  for (int c = 0; c < out.schema.width(); ++c)
    os << (c ? "," : "") << out.schema.units[c];
  os << "\n";
  for (Eigen::Index r = 0; r < out.rows.rows(); ++r) {
    for (int c = 0; c < out.schema.width(); ++c)
      os << (c ? "," : "") << format_csv_value(out.rows(r, c));
    os << "\n";
  }
}

void write_powerflow_table(std::ostream& os, const Scenario& sc,
                           const Equilibrium& eq) {
  os << "node,V,delta,P,Q,omega_s\n";
  os << "# -,V,rad,W,var,rad/s\n";
  for (int i = 0; i < sc.net.node_count(); ++i) {
    os << sc.net.nodes()[i].id << "," << format_csv_value(eq.v[i]) << ","
       << format_csv_value(eq.delta[i]) << "," << format_csv_value(eq.p[i])
       << "," << format_csv_value(eq.q[i]) << ","
       << format_csv_value(eq.omega_sync) << "\n";
  }
}

void write_validation_text(std::ostream& os, const ValidationBundle& b) {
  os << "== model-reduction sweep ==\n";
  os << "disturbance at t=" << format_csv_value(b.sweep.t_step)
     << " s, boundary-layer window " << format_csv_value(b.sweep.t_boundary_layer)
     << " s\n";
  for (const auto& row : b.sweep.rows) {
    os << "eps=" << format_csv_value(row.epsilon) << ": ";
    if (row.ok) {
      os << "gap_delta=" << format_csv_value(row.gaps.delta)
         << " rad, gap_V=" << format_csv_value(row.gaps.v)
         << " V, gap_Pm=" << format_csv_value(row.gaps.p_m)
         << " W (delta swing " << format_csv_value(row.gaps.swing_delta)
         << " rad)\n";
    } else {
      os << "FAILED: " << row.note << "\n";
    }
  }
  os << "monotonicity: " << (b.sweep.monotone ? "PASS" : "FAIL") << " ("
     << b.sweep.monotone_note << ")\n";
  os << "frame offset |omega_sync - omega_nominal|: "
     << format_csv_value(b.sweep.omega_sync_offset) << " rad/s\n";

  os << "\n== conservation audit ==\n";
  os << "injection sum " << format_csv_value(b.audit.injection_sum_w)
     << " W, line losses " << format_csv_value(b.audit.loss_w)
     << " W, residual " << format_csv_value(b.audit.residual_w) << " W ("
     << format_csv_value(b.audit.relative()) << " relative)\n";
  os << "reactive residual "
     << format_csv_value(b.audit.reactive_residual_var) << " var\n";
  for (const auto& row : b.audit.nodes)
    os << "  node " << row.node << ": P=" << format_csv_value(row.p_w)
       << " W, Q=" << format_csv_value(row.q_var)
       << " var, formula mismatch " << format_csv_value(row.mismatch_va)
       << " VA\n";

  os << "\n== static line equivalence ==\n";
  os << "max relative deviation " << format_csv_value(b.static_line_deviation)
     << "\n";

  os << "\n== power-flow oracle cross-check ==\n";
  os << b.crosscheck_instances << " random instances, "
     << b.crosscheck.failures << " failures, worst relative deviation "
     << format_csv_value(b.crosscheck.worst_rel) << "\n";
  if (!b.crosscheck.failure_dump.empty())
    os << "first failure: " << b.crosscheck.failure_dump << "\n";
}

void write_validation_csv(std::ostream& os, const ValidationBundle& b) {
  os << "check,key,metric,value\n";
  auto line = [&os](const std::string& check, const std::string& key,
                    const std::string& metric, const std::string& value) {
    os << check << "," << key << "," << metric << "," << value << "\n";
  };
  line("sweep", "", "t_step_s", format_csv_value(b.sweep.t_step));
  line("sweep", "", "t_boundary_layer_s",
       format_csv_value(b.sweep.t_boundary_layer));
  line("sweep", "", "omega_sync_offset_rad_s",
       format_csv_value(b.sweep.omega_sync_offset));
  line("sweep", "", "monotone", b.sweep.monotone ? "1" : "0");
  for (const auto& row : b.sweep.rows) {
    const std::string key = format_csv_value(row.epsilon);
    line("sweep", key, "ok", row.ok ? "1" : "0");
    if (row.ok) {
      line("sweep", key, "gap_delta_rad", format_csv_value(row.gaps.delta));
      line("sweep", key, "gap_v_v", format_csv_value(row.gaps.v));
      line("sweep", key, "gap_pm_w", format_csv_value(row.gaps.p_m));
      line("sweep", key, "swing_delta_rad",
           format_csv_value(row.gaps.swing_delta));
    }
  }
  line("audit", "", "injection_sum_w",
       format_csv_value(b.audit.injection_sum_w));
  line("audit", "", "loss_w", format_csv_value(b.audit.loss_w));
  line("audit", "", "residual_w", format_csv_value(b.audit.residual_w));
  line("audit", "", "residual_relative", format_csv_value(b.audit.relative()));
  line("audit", "", "reactive_residual_var",
       format_csv_value(b.audit.reactive_residual_var));
  for (const auto& row : b.audit.nodes) {
    line("audit", row.node, "p_w", format_csv_value(row.p_w));
    line("audit", row.node, "q_var", format_csv_value(row.q_var));
    line("audit", row.node, "mismatch_va", format_csv_value(row.mismatch_va));
  }
  line("static_line", "", "max_relative_deviation",
       format_csv_value(b.static_line_deviation));
  line("crosscheck", "", "instances",
       std::to_string(b.crosscheck_instances));
  line("crosscheck", "", "failures", std::to_string(b.crosscheck.failures));
  line("crosscheck", "", "worst_rel", format_csv_value(b.crosscheck.worst_rel));
}

}  // namespace mgsim

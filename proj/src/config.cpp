#include "dpgrid/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "dpgrid/errors.hpp"
#include "dpgrid/version.hpp"

namespace dpgrid {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

PfSetpoint parse_pf(const json& j, const std::string& where) {
  PfSetpoint pf;
  pf.type = get_or<std::string>(j, "type", "pv");
  if (pf.type != "slack" && pf.type != "pv")
    throw ConfigError(where + ": pf.type must be 'slack' or 'pv'");
  pf.p_mw = get_or<double>(j, "p_mw", 0.0);
  pf.v_pu = require<double>(j, "v_pu", where + ".pf");
  return pf;
}

ExciterParams parse_exciter(const json& j, const std::string& where) {
  ExciterParams e;
  e.t_r = get_or<double>(j, "t_r", e.t_r);
  e.t_a = require<double>(j, "t_a", where);
  e.t_e = require<double>(j, "t_e", where);
  e.t_f = require<double>(j, "t_f", where);
  e.k_a = require<double>(j, "k_a", where);
  e.k_e = get_or<double>(j, "k_e", e.k_e);
  e.k_f = require<double>(j, "k_f", where);
  e.a_ex = get_or<double>(j, "a_ex", 0.0);
  e.b_ex = get_or<double>(j, "b_ex", 0.0);
  e.vr_max = get_or<double>(j, "vr_max", 0.0);
  e.vr_min = get_or<double>(j, "vr_min", 0.0);
  for (double tc : {e.t_r, e.t_a, e.t_e, e.t_f})
    if (tc <= 0.0) throw ConfigError(where + ": exciter time constants must be > 0");
  return e;
}

}  // namespace

void SystemConfig::validate() const {
  if (base_mva <= 0.0 || freq_hz <= 0.0) throw ConfigError("base: mva and freq_hz must be > 0");
  std::set<int> ids;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second)
      throw ConfigError("buses: duplicate id " + std::to_string(b.id));
  }
  auto check_bus = [&](int id, const std::string& where) {
    if (!ids.count(id))
      throw ConfigError(where + ": references unknown bus " + std::to_string(id));
  };
  for (size_t i = 0; i < branches.size(); ++i) {
    const auto& br = branches[i];
    const std::string where = "branches[" + std::to_string(i) + "]";
    check_bus(br.from, where);
    check_bus(br.to, where);
    if (br.from == br.to) throw ConfigError(where + ": degenerate endpoints");
    if (br.x <= 0.0) throw ConfigError(where + ": series x must be > 0");
  }
  std::set<std::string> names;
  for (const auto& g : sgs) {
    check_bus(g.bus, "sg '" + g.name + "'");
    if (!names.insert(g.name).second) throw ConfigError("duplicate device name " + g.name);
  }
  for (const auto& g : gfls) {
    check_bus(g.bus, "gfl '" + g.name + "'");
    if (!names.insert(g.name).second) throw ConfigError("duplicate device name " + g.name);
    if (g.params.x_tot() <= 0.0) throw ConfigError("gfl '" + g.name + "': l + l_t must be > 0");
    if (g.params.i_max <= 0.0) throw ConfigError("gfl '" + g.name + "': i_max must be > 0");
  }
  for (const auto& l : loads) check_bus(l.bus, "load");
  for (const auto& d : dc_loads) check_bus(d.bus, "dc_load");
  int slack = 0;
  for (const auto& g : sgs) slack += g.pf.type == "slack" ? 1 : 0;
  for (const auto& g : gfls) slack += g.pf.type == "slack" ? 1 : 0;
  if (slack != 1) throw ConfigError("exactly one source must have pf.type = 'slack'");
}

SystemConfig parse_system_config(const std::string& text, const std::string& origin) {
  json j = parse_json(text, origin);
  SystemConfig cfg;
  cfg.source_text = j.dump();  // canonical form for hashing

  const json base = get_or<json>(j, "base", json::object());
  cfg.base_mva = get_or<double>(base, "mva", 100.0);
  cfg.freq_hz = get_or<double>(base, "freq_hz", 60.0);

  for (const auto& jb : require<json>(j, "buses", origin)) {
    BusConfig b;
    b.id = require<int>(jb, "id", origin + ".buses");
    b.name = get_or<std::string>(jb, "name", "bus" + std::to_string(b.id));
    b.shunt_c_pu = get_or<double>(jb, "shunt_c_pu", 0.0);
    b.shunt_g_pu = get_or<double>(jb, "shunt_g_pu", 1e-5);
    cfg.buses.push_back(b);
  }
  for (const auto& jb : require<json>(j, "branches", origin)) {
    BranchConfig b;
    b.from = require<int>(jb, "from", origin + ".branches");
    b.to = require<int>(jb, "to", origin + ".branches");
    b.r = get_or<double>(jb, "r", 0.0);
    b.x = require<double>(jb, "x", origin + ".branches");
    b.b_half = get_or<double>(jb, "b_half", 0.0);
    b.z_scale = get_or<double>(jb, "z_scale", 3.0);
    b.z_open = get_or<bool>(jb, "z_open", false);
    b.tie = get_or<bool>(jb, "tie", false);
    b.name = get_or<std::string>(jb, "name",
                                 std::to_string(b.from) + "_" + std::to_string(b.to));
    cfg.branches.push_back(b);
  }
  for (const auto& jg : get_or<json>(j, "sgs", json::array())) {
    SGConfig g;
    g.name = require<std::string>(jg, "name", origin + ".sgs");
    g.bus = require<int>(jg, "bus", "sg " + g.name);
    g.mva = require<double>(jg, "mva", "sg " + g.name);
    const json jm = require<json>(jg, "machine", "sg " + g.name);
    auto& m = g.machine;
    const std::string where = "sg " + g.name + ".machine";
    m.xd = require<double>(jm, "xd", where);
    m.xq = require<double>(jm, "xq", where);
    m.xl = require<double>(jm, "xl", where);
    m.xd1 = require<double>(jm, "xd1", where);
    m.xq1 = require<double>(jm, "xq1", where);
    m.xd2 = require<double>(jm, "xd2", where);
    m.xq2 = require<double>(jm, "xq2", where);
    m.ra = require<double>(jm, "ra", where);
    m.td0p = require<double>(jm, "td0p", where);
    m.tq0p = require<double>(jm, "tq0p", where);
    m.td0pp = require<double>(jm, "td0pp", where);
    m.tq0pp = require<double>(jm, "tq0pp", where);
    m.h = require<double>(jm, "h", where);
    m.kd = get_or<double>(jm, "kd", 0.0);
    g.exciter = parse_exciter(require<json>(jg, "exciter", "sg " + g.name), "sg " + g.name);
    g.pf = parse_pf(require<json>(jg, "pf", "sg " + g.name), "sg " + g.name);
    cfg.sgs.push_back(g);
  }
  for (const auto& jg : get_or<json>(j, "gfls", json::array())) {
    GFLConfig g;
    g.name = require<std::string>(jg, "name", origin + ".gfls");
    g.bus = require<int>(jg, "bus", "gfl " + g.name);
    g.mva = require<double>(jg, "mva", "gfl " + g.name);
    const json jp = require<json>(jg, "params", "gfl " + g.name);
    auto& p = g.params;
    const std::string where = "gfl " + g.name + ".params";
    p.tau_m = require<double>(jp, "tau_m", where);
    p.tau_f = require<double>(jp, "tau_f", where);
    p.kp_v = require<double>(jp, "kp_v", where);
    p.ki_v = require<double>(jp, "ki_v", where);
    p.kp_i = require<double>(jp, "kp_i", where);
    p.ki_i = require<double>(jp, "ki_i", where);
    p.r = require<double>(jp, "r", where);
    p.l = require<double>(jp, "l", where);
    p.r_t = get_or<double>(jp, "r_t", 0.0);
    p.l_t = get_or<double>(jp, "l_t", 0.0);
    p.i_max = require<double>(jp, "i_max", where);
    p.v_dm_min = get_or<double>(jp, "v_dm_min", 0.2);
    if (jg.contains("pll_bw_hz")) {
      g.pll_bw_hz = jg.at("pll_bw_hz").get<double>();
      p.set_pll_bandwidth(*g.pll_bw_hz);
    } else {
      const json jpll = require<json>(jg, "pll", "gfl " + g.name);
      p.kp_pll = require<double>(jpll, "kp", where + ".pll");
      p.ki_pll = require<double>(jpll, "ki", where + ".pll");
    }
    if (p.tau_m <= 0.0 || p.tau_f <= 0.0)
      throw ConfigError(where + ": time constants must be > 0");
    g.pf = parse_pf(require<json>(jg, "pf", "gfl " + g.name), "gfl " + g.name);
    cfg.gfls.push_back(g);
  }
  for (const auto& jl : get_or<json>(j, "loads", json::array())) {
    LoadConfig l;
    l.bus = require<int>(jl, "bus", origin + ".loads");
    l.p_mw = get_or<double>(jl, "p_mw", 0.0);
    l.q_mvar = get_or<double>(jl, "q_mvar", 0.0);
    l.c_mvar = get_or<double>(jl, "c_mvar", 0.0);
    l.z_open = get_or<bool>(jl, "z_open", true);
    cfg.loads.push_back(l);
  }
  for (const auto& jd : get_or<json>(j, "dc_loads", json::array())) {
    DCLoadConfig d;
    d.bus = require<int>(jd, "bus", origin + ".dc_loads");
    d.p_mw = get_or<double>(jd, "p_mw", 0.0);
    d.v_min = get_or<double>(jd, "v_min", 0.3);
    cfg.dc_loads.push_back(d);
  }
  cfg.validate();
  return cfg;
}

SystemConfig load_system_config(const std::string& path) {
  return parse_system_config(read_file(path), path);
}

void ScenarioConfig::validate() const {
  if (duration <= 0.0) throw ConfigError("scenario: duration must be > 0");
  double last = -1.0;
  for (const auto& e : events) {
    if (e.t < 0.0 || e.t > duration)
      throw ConfigError("scenario: event time outside [0, duration]");
    if (e.t < last) throw ConfigError("scenario: events must be time-ordered");
    last = e.t;
  }
  // Fault apply/clear pairing per bus.
  std::map<int, int> open_faults;
  for (const auto& e : events) {
    if (e.kind == EventKind::FaultApply) {
      if (open_faults[e.fault.bus]++ > 0)
        throw ConfigError("scenario: nested fault-apply at bus " + std::to_string(e.fault.bus));
    } else if (e.kind == EventKind::FaultClear) {
      if (--open_faults[e.fault.bus] < 0)
        throw ConfigError("scenario: fault-clear without apply at bus " +
                          std::to_string(e.fault.bus));
    }
  }
  if (record.dt <= 0.0) throw ConfigError("scenario: record.dt must be > 0");
}

ScenarioConfig parse_scenario_config(const std::string& text, const std::string& origin) {
  json j = parse_json(text, origin);
  ScenarioConfig sc;
  sc.source_text = j.dump();
  sc.duration = require<double>(j, "duration", origin);
  sc.seed = get_or<std::uint64_t>(j, "seed", 0);
  for (const auto& je : get_or<json>(j, "events", json::array())) {
    ScenarioEvent e;
    e.t = require<double>(je, "t", origin + ".events");
    const std::string kind = require<std::string>(je, "kind", origin + ".events");
    if (kind == "fault-apply" || kind == "fault-clear") {
      e.kind = kind == "fault-apply" ? EventKind::FaultApply : EventKind::FaultClear;
      e.fault.bus = require<int>(je, "bus", origin + ".events");
      e.fault.r_a = get_or<double>(je, "r_a", 1e6);
      e.fault.r_b = get_or<double>(je, "r_b", 1e6);
      e.fault.r_c = get_or<double>(je, "r_c", 1e6);
      e.fault.r_g = get_or<double>(je, "r_g", 0.0);
    } else if (kind == "dc-pulse") {
      e.kind = EventKind::DcPulse;
      e.pulse.bus = require<int>(je, "bus", origin + ".events");
      e.pulse.amp_mw = require<double>(je, "amp_mw", origin + ".events");
      e.pulse.freq_hz = require<double>(je, "freq_hz", origin + ".events");
      e.pulse.duty = get_or<double>(je, "duty", 0.5);
      e.pulse.stop_t = get_or<double>(je, "stop_t", 0.0);
      e.pulse.noise_mw = get_or<double>(je, "noise_mw", 0.0);
      e.pulse.noise_hold_s = get_or<double>(je, "noise_hold_s", 2e-3);
    } else if (kind == "reference-step") {
      e.kind = EventKind::ReferenceStep;
      e.step.device = require<std::string>(je, "device", origin + ".events");
      e.step.field = require<std::string>(je, "field", origin + ".events");
      e.step.delta = require<double>(je, "delta", origin + ".events");
    } else if (kind == "controller-enable") {
      e.kind = EventKind::ControllerEnable;
      e.controller = require<std::string>(je, "controller", origin + ".events");
    } else {
      throw ConfigError(origin + ": unknown event kind '" + kind + "'");
    }
    sc.events.push_back(e);
  }
  const json jr = get_or<json>(j, "record", json::object());
  sc.record.dt = get_or<double>(jr, "dt", 1e-3);
  sc.record.channels = get_or<std::vector<std::string>>(jr, "channels", {});
  const json js = get_or<json>(j, "solver", json::object());
  if (js.contains("rtol")) sc.solver.rtol = js.at("rtol").get<double>();
  if (js.contains("atol")) sc.solver.atol = js.at("atol").get<double>();
  if (js.contains("hmax")) sc.solver.hmax = js.at("hmax").get<double>();
  sc.controllers = get_or<std::vector<std::string>>(j, "controllers", {});
  sc.validate();
  return sc;
}

ScenarioConfig load_scenario_config(const std::string& path) {
  return parse_scenario_config(read_file(path), path);
}

DesignConfig load_design_config(const std::string& path) {
  const std::string text = read_file(path);
  json j = parse_json(text, path);
  DesignConfig d;
  d.source_text = j.dump();
  d.ibr_order = require<std::vector<std::string>>(j, "ibr_order", path);
  d.ts_schedule = require<std::vector<double>>(j, "ts_schedule", path);
  if (d.ibr_order.size() != d.ts_schedule.size())
    throw ConfigError(path + ": ibr_order and ts_schedule must have equal length");
  for (size_t i = 1; i < d.ts_schedule.size(); ++i)
    if (d.ts_schedule[i] >= d.ts_schedule[i - 1])
      throw ConfigError(path + ": ts_schedule must be strictly decreasing");
  const json jw = require<json>(j, "w", path);
  d.w_num = require<std::vector<double>>(jw, "num", path + ".w");
  d.w_den = require<std::vector<double>>(jw, "den", path + ".w");
  d.washout_tw = get_or<double>(j, "washout_tw", 2.0);
  d.reduce_order = get_or<int>(j, "reduce_order", 15);
  d.rho = get_or<double>(j, "rho", 0.1);
  d.gamma_rel_tol = get_or<double>(j, "gamma_rel_tol", 1e-3);
  d.verify_scenario = get_or<std::string>(j, "verify_scenario", "");
  return d;
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RunManifest::to_json() const {
  json j;
  j["tool_version"] = tool_version;
  j["config_hash"] = config_hash;
  j["scenario_hash"] = scenario_hash;
  j["seed"] = seed;
  j["solver"] = {{"rtol", rtol}, {"atol", atol}};
  j["wall_seconds"] = wall_seconds;
  for (const auto& [k, v] : extras) j[k] = v;
  return j.dump(2);
}

}  // namespace dpgrid

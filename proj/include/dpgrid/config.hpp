#pragma once

// Structured-text (JSON) configuration documents: system datasets, scenarios,
// and controller-design specs, plus the reproducibility manifest.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpgrid/gfl.hpp"
#include "dpgrid/machine.hpp"
#include "dpgrid/network.hpp"

namespace dpgrid {

struct BusConfig {
  int id = -1;
  std::string name;
  double shunt_c_pu = 0.0;   // explicit shunt capacitance (pu)
  double shunt_g_pu = 1e-5;  // small conductance, keeps islands damped
};

struct BranchConfig {
  std::string name;
  int from = -1, to = -1;
  double r = 0.0, x = 0.0;
  double b_half = 0.0;        // per-end charging susceptance (pu)
  double z_scale = 3.0;       // r0/x0 multiplier for lines
  bool z_open = false;        // transformers without a zero-sequence path
  bool tie = false;           // member of the reported tie interface
};

struct PfSetpoint {
  std::string type = "pv";  // "slack" | "pv" | "pq"
  double p_mw = 0.0;
  double v_pu = 1.0;
};

struct SGConfig {
  std::string name;
  int bus = -1;
  double mva = 0.0;
  SGStandardData machine{};
  ExciterParams exciter{};
  PfSetpoint pf{};
};

struct GFLConfig {
  std::string name;
  int bus = -1;
  double mva = 0.0;
  GFLParams params{};
  std::optional<double> pll_bw_hz;  // derives (kp, ki) when present
  PfSetpoint pf{};
};

struct LoadConfig {
  int bus = -1;
  double p_mw = 0.0;
  double q_mvar = 0.0;   // inductive part of the parallel load
  double c_mvar = 0.0;   // capacitive part, merged into the node shunt
  bool z_open = true;
};

struct DCLoadConfig {
  int bus = -1;
  double p_mw = 0.0;     // base demand
  double v_min = 0.3;    // guard on |<v_p>_1|
};

struct SystemConfig {
  double base_mva = 100.0;
  double freq_hz = 60.0;
  std::vector<BusConfig> buses;
  std::vector<BranchConfig> branches;
  std::vector<SGConfig> sgs;
  std::vector<GFLConfig> gfls;
  std::vector<LoadConfig> loads;
  std::vector<DCLoadConfig> dc_loads;
  std::string source_text;  // canonical serialized form (hash input)

  double omega_s() const { return 2.0 * kPi * freq_hz; }
  void validate() const;  // referential integrity; throws ConfigError
};

SystemConfig load_system_config(const std::string& path);
SystemConfig parse_system_config(const std::string& text, const std::string& origin);

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

enum class EventKind { FaultApply, FaultClear, DcPulse, ReferenceStep, ControllerEnable };

struct DcPulseSpec {
  int bus = -1;
  double amp_mw = 0.0;       // pulse amplitude
  double freq_hz = 0.0;      // pulse train fundamental
  double duty = 0.5;
  double stop_t = 0.0;       // 0: runs to scenario end
  double noise_mw = 0.0;     // band-limited (sample-and-hold) noise amplitude
  double noise_hold_s = 2e-3;
};

struct ReferenceStepSpec {
  std::string device;
  std::string field;  // "p_ref_mw" | "vmag_ref" | "v_ref"
  double delta = 0.0;
};

struct ScenarioEvent {
  double t = 0.0;
  EventKind kind;
  FaultSpec fault{};          // FaultApply/FaultClear
  DcPulseSpec pulse{};        // DcPulse
  ReferenceStepSpec step{};   // ReferenceStep
  std::string controller;     // ControllerEnable
};

struct RecordSpec {
  double dt = 1e-3;
  std::vector<std::string> channels;  // empty: a default set
};

struct SolverOverrides {
  std::optional<double> rtol, atol, hmax;
};

struct ScenarioConfig {
  double duration = 1.0;
  std::uint64_t seed = 0;
  std::vector<ScenarioEvent> events;
  RecordSpec record;
  SolverOverrides solver;
  std::vector<std::string> controllers;  // controller-document paths
  std::string source_text;
  void validate() const;
};

ScenarioConfig load_scenario_config(const std::string& path);
ScenarioConfig parse_scenario_config(const std::string& text, const std::string& origin);

// ---------------------------------------------------------------------------
// Controller design spec
// ---------------------------------------------------------------------------

struct DesignConfig {
  std::vector<std::string> ibr_order;      // e.g. ["ibr2", "ibr1"]
  std::vector<double> ts_schedule;         // strictly decreasing (s)
  std::vector<double> w_num, w_den;        // bandpass W(s), descending powers
  double washout_tw = 2.0;
  int reduce_order = 15;
  double rho = 0.1;                        // control-effort weight
  double gamma_rel_tol = 1e-3;
  std::string verify_scenario;             // optional nonlinear check
  std::string source_text;
};

DesignConfig load_design_config(const std::string& path);

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string tool_version;
  std::uint64_t config_hash = 0;
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  double rtol = 0.0, atol = 0.0;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> extras;

  std::string to_json() const;
};

std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace dpgrid

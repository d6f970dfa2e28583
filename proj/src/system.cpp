#include "dpgrid/system.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dpgrid/errors.hpp"

namespace dpgrid {

namespace {

// splitmix64 over the noise bin index: deterministic, solver-independent.
std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

const char* kSgStateNames[sg_idx::count] = {
    "psi0_re", "psi0_im", "psi2_re", "psi2_im", "psi_fd0", "psi_1d0", "psi_1q0", "psi_2q0",
    "psi_fd2_re", "psi_fd2_im", "psi_1d2_re", "psi_1d2_im", "psi_1q2_re", "psi_1q2_im",
    "psi_2q2_re", "psi_2q2_im", "delta", "domega", "exc_rf", "exc_vtr", "exc_vr", "exc_efd"};

const char* kGflVarNames[8] = {"x_pll", "delta_pll", "v_dm", "v_qm",
                               "x_id", "x_iq", "i_td", "i_tq"};

const char* kSeqNames[3] = {"p", "n", "z"};

}  // namespace

double dc_pulse_power(const DcPulseSpec& pulse, std::uint64_t seed, double base_mva, double t) {
  if (t < 0.0) return 0.0;
  if (pulse.stop_t > 0.0 && t >= pulse.stop_t) return 0.0;
  double p = 0.0;
  if (pulse.amp_mw != 0.0 && pulse.freq_hz > 0.0) {
    const double phase = t * pulse.freq_hz;
    if (phase - std::floor(phase) < pulse.duty) p += pulse.amp_mw;
  }
  if (pulse.noise_mw != 0.0 && pulse.noise_hold_s > 0.0) {
    const auto bin = static_cast<std::uint64_t>(std::floor(t / pulse.noise_hold_s));
    const double unit =
        2.0 * (static_cast<double>(splitmix64(seed ^ (bin * 0x9e3779b97f4a7c15ull)) >> 11) /
               9007199254740992.0) - 1.0;
    p += pulse.noise_mw * unit;
  }
  return p / base_mva;
}

int Trajectory::channel_index(const std::string& name) const {
  auto it = std::find(channels.begin(), channels.end(), name);
  if (it == channels.end()) throw MissingChannel("trajectory channel not found: " + name);
  return static_cast<int>(it - channels.begin());
}

std::vector<double> Trajectory::column(const std::string& name) const {
  const int c = channel_index(name);
  std::vector<double> out(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) out[i] = samples[i](c);
  return out;
}

int SystemModel::bus_index(int bus_id) const {
  auto it = bus_index_.find(bus_id);
  if (it == bus_index_.end())
    throw ConfigError("unknown bus id " + std::to_string(bus_id));
  return it->second;
}

int SystemModel::gfl_index(const std::string& name) const {
  for (size_t i = 0; i < gfls_.size(); ++i)
    if (gfls_[i].name == name) return static_cast<int>(i);
  throw ConfigError("unknown gfl device '" + name + "'");
}

int SystemModel::sg_index(const std::string& name) const {
  for (size_t i = 0; i < sgs_.size(); ++i)
    if (sgs_[i].name == name) return static_cast<int>(i);
  throw ConfigError("unknown sg device '" + name + "'");
}

int SystemModel::input_index(const std::string& name) const {
  auto it = std::find(input_names_.begin(), input_names_.end(), name);
  if (it == input_names_.end()) throw MissingChannel("input channel not found: " + name);
  return static_cast<int>(it - input_names_.begin());
}

int SystemModel::output_index(const std::string& name) const {
  auto it = std::find(output_names_.begin(), output_names_.end(), name);
  if (it == output_names_.end()) throw MissingChannel("output channel not found: " + name);
  return static_cast<int>(it - output_names_.begin());
}

const Eigen::VectorXd& SystemModel::equilibrium() const {
  if (!initialized()) throw NumericalError("model not initialized");
  return equilibrium_;
}

Cx SystemModel::node_voltage(const Eigen::VectorXd& x, int bus_idx, int seq) const {
  const int i = node_x0_ + (bus_idx * 3 + seq) * 2;
  return {x(i), x(i + 1)};
}

Cx SystemModel::branch_current(const Eigen::VectorXd& x, int branch_idx, int seq) const {
  const int i = branch_x0_[static_cast<size_t>(branch_idx)] + seq * 2;
  return {x(i), x(i + 1)};
}

SystemModel SystemModel::assemble(const SystemConfig& cfg) {
  cfg.validate();
  SystemModel m;
  m.config_ = cfg;
  m.omega_s_ = cfg.omega_s();
  m.base_mva_ = cfg.base_mva;

  for (const auto& b : cfg.buses) {
    m.bus_index_[b.id] = static_cast<int>(m.bus_ids_.size());
    m.bus_ids_.push_back(b.id);
  }
  const int nbus = static_cast<int>(m.bus_ids_.size());

  // Node shunts: explicit capacitance plus line charging plus load capacitor
  // banks. Every node must end up with C > 0 so its voltage is a state.
  m.nodes_.assign(static_cast<size_t>(nbus), NodeParams{});
  for (int i = 0; i < nbus; ++i) {
    const auto& b = cfg.buses[static_cast<size_t>(i)];
    for (int s = 0; s < 3; ++s) {
      m.nodes_[static_cast<size_t>(i)].c[static_cast<size_t>(s)] = b.shunt_c_pu;
      m.nodes_[static_cast<size_t>(i)].g[static_cast<size_t>(s)] = b.shunt_g_pu;
    }
  }
  for (const auto& br : cfg.branches) {
    for (int end : {br.from, br.to}) {
      auto& node = m.nodes_[static_cast<size_t>(m.bus_index(end))];
      for (int s = 0; s < 3; ++s) node.c[static_cast<size_t>(s)] += br.b_half;
    }
  }
  for (const auto& l : cfg.loads) {
    auto& node = m.nodes_[static_cast<size_t>(m.bus_index(l.bus))];
    for (int s = 0; s < 3; ++s) node.c[static_cast<size_t>(s)] += l.c_mvar / cfg.base_mva;
  }
  for (int i = 0; i < nbus; ++i) {
    if (m.nodes_[static_cast<size_t>(i)].c[0] <= 0.0)
      throw SingularTopology("bus " + std::to_string(m.bus_ids_[static_cast<size_t>(i)]) +
                             " has no shunt capacitance; node voltage cannot be a state");
  }

  for (const auto& br : cfg.branches) {
    BranchParams bp;
    bp.from = m.bus_index(br.from);
    bp.to = m.bus_index(br.to);
    bp.r = {br.r, br.r, br.r * br.z_scale};
    bp.x = {br.x, br.x, br.x * br.z_scale};
    bp.has_z = !br.z_open;
    m.branches_.push_back(bp);
    m.branch_names_.push_back(br.name);
    m.branch_tie_.push_back(br.tie);
  }

  int off = 0;
  for (const auto& g : cfg.sgs) {
    SGDevice d;
    d.name = g.name;
    d.bus = m.bus_index(g.bus);
    d.par = SGParams::from_standard(g.machine);
    d.par.s_mva = g.mva;
    d.exc = g.exciter;
    d.scale = g.mva / cfg.base_mva;
    d.pf = g.pf;
    d.x0 = off;
    off += sg_idx::count;
    m.sgs_.push_back(d);
  }
  for (const auto& g : cfg.gfls) {
    GFLDevice d;
    d.name = g.name;
    d.bus = m.bus_index(g.bus);
    d.par = g.params;
    d.par.s_mva = g.mva;
    d.scale = g.mva / cfg.base_mva;
    d.pf = g.pf;
    d.x0 = off;
    off += gfl_idx::count;
    m.gfls_.push_back(d);
  }
  for (size_t i = 0; i < m.branches_.size(); ++i) {
    m.branch_x0_.push_back(off);
    off += 2 * m.branches_[i].seq_count();
  }
  m.node_x0_ = off;
  off += nbus * 3 * 2;
  for (const auto& l : cfg.loads) {
    LoadDevice d;
    d.cfg = l;
    d.par.bus = m.bus_index(l.bus);
    d.par.has_z = !l.z_open;
    d.x0 = off;
    off += 2 * d.par.seq_count();
    m.loads_.push_back(d);
    m.load_x0_.push_back(d.x0);
  }
  for (const auto& dc : cfg.dc_loads) {
    DCLoadDevice d;
    d.par.bus = m.bus_index(dc.bus);
    d.par.v_min = dc.v_min;
    d.base_p = dc.p_mw / cfg.base_mva;
    m.dc_loads_.push_back(d);
  }
  m.n_states_ = off;

  // State names.
  m.state_names_.resize(static_cast<size_t>(m.n_states_));
  for (const auto& d : m.sgs_)
    for (int i = 0; i < sg_idx::count; ++i)
      m.state_names_[static_cast<size_t>(d.x0 + i)] = d.name + "." + kSgStateNames[i];
  for (const auto& d : m.gfls_) {
    for (int v = 0; v < 8; ++v) {
      m.state_names_[static_cast<size_t>(d.x0 + v)] = d.name + "." + kGflVarNames[v] + ".k0";
      m.state_names_[static_cast<size_t>(d.x0 + gfl_idx::k2_re(v))] =
          d.name + "." + kGflVarNames[v] + ".k2_re";
      m.state_names_[static_cast<size_t>(d.x0 + gfl_idx::k2_im(v))] =
          d.name + "." + kGflVarNames[v] + ".k2_im";
    }
    m.state_names_[static_cast<size_t>(d.x0 + gfl_idx::x_f)] = d.name + ".x_f";
    m.state_names_[static_cast<size_t>(d.x0 + gfl_idx::x_v)] = d.name + ".x_v";
  }
  for (size_t b = 0; b < m.branches_.size(); ++b)
    for (int s = 0; s < m.branches_[b].seq_count(); ++s) {
      const std::string base = "branch." + m.branch_names_[b] + ".i_" + kSeqNames[s];
      m.state_names_[static_cast<size_t>(m.branch_x0_[b] + 2 * s)] = base + "_re";
      m.state_names_[static_cast<size_t>(m.branch_x0_[b] + 2 * s + 1)] = base + "_im";
    }
  for (int n = 0; n < nbus; ++n)
    for (int s = 0; s < 3; ++s) {
      const std::string base =
          "bus" + std::to_string(m.bus_ids_[static_cast<size_t>(n)]) + ".v_" + kSeqNames[s];
      m.state_names_[static_cast<size_t>(m.node_x0_ + (n * 3 + s) * 2)] = base + "_re";
      m.state_names_[static_cast<size_t>(m.node_x0_ + (n * 3 + s) * 2 + 1)] = base + "_im";
    }
  for (size_t l = 0; l < m.loads_.size(); ++l)
    for (int s = 0; s < m.loads_[l].par.seq_count(); ++s) {
      const std::string base =
          "load" + std::to_string(m.loads_[l].cfg.bus) + ".i_" + kSeqNames[s];
      m.state_names_[static_cast<size_t>(m.loads_[l].x0 + 2 * s)] = base + "_re";
      m.state_names_[static_cast<size_t>(m.loads_[l].x0 + 2 * s + 1)] = base + "_im";
    }

  // Input channels.
  for (auto& d : m.gfls_) {
    d.u_d_idx = static_cast<int>(m.input_names_.size());
    m.input_names_.push_back(d.name + ".u_d");
    d.u_q_idx = static_cast<int>(m.input_names_.size());
    m.input_names_.push_back(d.name + ".u_q");
  }
  for (size_t i = 0; i < m.dc_loads_.size(); ++i) {
    m.dc_loads_[i].u_idx = static_cast<int>(m.input_names_.size());
    m.input_names_.push_back("dcload" + std::to_string(cfg.dc_loads[i].bus) + ".p_pu");
  }

  m.register_channels();
  return m;
}

void SystemModel::register_channels() {
  output_names_.clear();
  output_names_.push_back("tie.p_pu");
  output_names_.push_back("tie.p_mw");
  for (int id : bus_ids_) {
    output_names_.push_back("bus" + std::to_string(id) + ".v_mag");
    output_names_.push_back("bus" + std::to_string(id) + ".v_n_mag");
    output_names_.push_back("bus" + std::to_string(id) + ".v_z_mag");
  }
  for (const auto& d : sgs_) {
    output_names_.push_back(d.name + ".speed");
    output_names_.push_back(d.name + ".delta");
    output_names_.push_back(d.name + ".te");
    output_names_.push_back(d.name + ".efd");
    output_names_.push_back(d.name + ".p_mw");
    output_names_.push_back(d.name + ".q_mvar");
  }
  for (const auto& d : gfls_) {
    output_names_.push_back(d.name + ".vmag");
    output_names_.push_back(d.name + ".p_mw");
    output_names_.push_back(d.name + ".q_mvar");
    output_names_.push_back(d.name + ".i_mag");
    output_names_.push_back(d.name + ".limiter");
    output_names_.push_back(d.name + ".i_n_mag");
    output_names_.push_back(d.name + ".i_z_mag");
  }
  for (size_t i = 0; i < dc_loads_.size(); ++i)
    output_names_.push_back("dcload" + std::to_string(config_.dc_loads[i].bus) + ".p_mw");
  for (size_t b = 0; b < branches_.size(); ++b) {
    output_names_.push_back("branch." + branch_names_[b] + ".i_p_mag");
    output_names_.push_back("branch." + branch_names_[b] + ".i_n_mag");
    output_names_.push_back("branch." + branch_names_[b] + ".i_z_mag");
  }
  for (const auto& c : controllers_) output_names_.push_back(c.k.name + ".u");
}

double SystemModel::gfl_vmag(const GFLDevice& g, const Eigen::VectorXd& x) const {
  return std::hypot(x(g.x0 + gfl_idx::v_dm), x(g.x0 + gfl_idx::v_qm));
}

double SystemModel::controller_output(const ControllerDevice& c, const Eigen::VectorXd& x) const {
  if (!c.enabled) return 0.0;
  const double s = gfl_vmag(gfls_[static_cast<size_t>(c.gfl_index)], x);
  const double xh = x(c.x0);
  const double yh = s - xh;  // washout output
  double u = c.k.d(0, 0) * yh;
  for (int i = 0; i < c.k.order(); ++i) u += c.k.c(0, i) * x(c.x0 + 1 + i);
  return u;
}

void SystemModel::evaluate_derivative(double t, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u, Eigen::VectorXd& dx,
                                      KclAudit* audit) const {
  if (x.size() != n_states_) throw NumericalError("evaluate_derivative: state size mismatch");
  if (u.size() != static_cast<Eigen::Index>(input_names_.size()))
    throw NumericalError("evaluate_derivative: input size mismatch");
  dx.setZero(n_states_);

  const int nbus = num_buses();
  std::vector<std::array<Cx, 3>> net(static_cast<size_t>(nbus), {Cx{}, Cx{}, Cx{}});

  // Sources.
  for (const auto& d : sgs_) {
    const Cx vp = node_voltage(x, d.bus, kSeqP);
    const Cx vn = node_voltage(x, d.bus, kSeqN);
    SGOutputs out;
    sg_derivatives(d.par, d.exc, d.refs, x.data() + d.x0, vp, vn, omega_s_, dx.data() + d.x0,
                   &out);
    net[static_cast<size_t>(d.bus)][kSeqP] += d.scale * out.inj.p1;
    net[static_cast<size_t>(d.bus)][kSeqN] += d.scale * out.inj.n1;
  }

  // Damping controllers: outputs feed the IBR references, dynamics are local.
  std::vector<double> u_add_d(gfls_.size(), 0.0), u_add_q(gfls_.size(), 0.0);
  for (const auto& c : controllers_) {
    const double uo = controller_output(c, x);
    (c.to_q_axis ? u_add_q : u_add_d)[static_cast<size_t>(c.gfl_index)] += uo;
    const double s = gfl_vmag(gfls_[static_cast<size_t>(c.gfl_index)], x);
    const double yh = s - x(c.x0);
    dx(c.x0) = yh / c.k.washout_tw;
    for (int i = 0; i < c.k.order(); ++i) {
      double acc = c.k.b(i, 0) * yh;
      for (int j = 0; j < c.k.order(); ++j) acc += c.k.a(i, j) * x(c.x0 + 1 + j);
      dx(c.x0 + 1 + i) = acc;
    }
  }

  for (size_t gi = 0; gi < gfls_.size(); ++gi) {
    const auto& d = gfls_[gi];
    GFLInputs in;
    in.vp1 = node_voltage(x, d.bus, kSeqP);
    in.vn1 = node_voltage(x, d.bus, kSeqN);
    in.u_d = u(d.u_d_idx) + u_add_d[gi];
    in.u_q = u(d.u_q_idx) + u_add_q[gi];
    GFLOutputs out;
    gfl_derivatives(d.par, d.refs, x.data() + d.x0, in, omega_s_, dx.data() + d.x0, &out);
    net[static_cast<size_t>(d.bus)][kSeqP] += d.scale * out.inj.p1;
    net[static_cast<size_t>(d.bus)][kSeqN] += d.scale * out.inj.n1;
  }

  // Loads.
  for (const auto& l : loads_) {
    if (!l.ready) throw NumericalError("load impedances not initialized (run initialize first)");
    for (int s = 0; s < l.par.seq_count(); ++s) {
      const Cx v = node_voltage(x, l.par.bus, s);
      const Cx ill(x(l.x0 + 2 * s), x(l.x0 + 2 * s + 1));
      const Cx d_ill = load_inductor_derivative(l.par.x[static_cast<size_t>(s)], ill, v, omega_s_);
      dx(l.x0 + 2 * s) = d_ill.real();
      dx(l.x0 + 2 * s + 1) = d_ill.imag();
      net[static_cast<size_t>(l.par.bus)][s] -=
          load_total_current(l.par.r[static_cast<size_t>(s)], ill, v);
    }
  }

  // Constant-power (data-center) loads, positive sequence only.
  for (const auto& dc : dc_loads_) {
    double p = dc.base_p;
    if (dc.pulse) p += dc_pulse_power(*dc.pulse, dc.seed, base_mva_, t);
    if (dc.u_idx >= 0) p += u(dc.u_idx);
    const Cx vp = node_voltage(x, dc.par.bus, kSeqP);
    const SeqTriple idc = dc_load_current(vp, p, dc.par.v_min);
    net[static_cast<size_t>(dc.par.bus)][kSeqP] -= idc.p;
  }

  // Faults.
  for (const auto& f : faults_) {
    if (!f.active) continue;
    const int b = bus_index(f.spec.bus);
    SeqTriple v{node_voltage(x, b, kSeqP), node_voltage(x, b, kSeqN), node_voltage(x, b, kSeqZ)};
    const SeqTriple i_f = fault_current(f.r_inv, v, true);
    net[static_cast<size_t>(b)][kSeqP] -= i_f.p;
    net[static_cast<size_t>(b)][kSeqN] -= i_f.n;
    net[static_cast<size_t>(b)][kSeqZ] -= i_f.z;
  }

  // Branch flows and dynamics.
  for (size_t b = 0; b < branches_.size(); ++b) {
    const auto& br = branches_[b];
    for (int s = 0; s < br.seq_count(); ++s) {
      const Cx i = branch_current(x, static_cast<int>(b), s);
      const Cx dv = node_voltage(x, br.from, s) - node_voltage(x, br.to, s);
      const Cx di = branch_derivative(br.r[static_cast<size_t>(s)], br.x[static_cast<size_t>(s)],
                                      i, dv, omega_s_);
      dx(branch_x0_[b] + 2 * s) = di.real();
      dx(branch_x0_[b] + 2 * s + 1) = di.imag();
      net[static_cast<size_t>(br.from)][s] -= i;
      net[static_cast<size_t>(br.to)][s] += i;
    }
  }

  // Node dynamics.
  for (int n = 0; n < nbus; ++n) {
    const auto& nd = nodes_[static_cast<size_t>(n)];
    for (int s = 0; s < 3; ++s) {
      const Cx v = node_voltage(x, n, s);
      const Cx ic = net[static_cast<size_t>(n)][s] - nd.g[static_cast<size_t>(s)] * v;
      const Cx dv = node_derivative(nd.c[static_cast<size_t>(s)], ic, v, omega_s_);
      const int i = node_x0_ + (n * 3 + s) * 2;
      dx(i) = dv.real();
      dx(i + 1) = dv.imag();
    }
  }

  if (audit) {
    // Independent nodal balance recompute: device injections come from the
    // state-only extraction paths, branch/load/fault terms from a bus-major
    // scan, and the result is compared with the node equation actually used.
    double worst = 0.0;
    for (int n = 0; n < nbus; ++n) {
      std::array<Cx, 3> acc{Cx{}, Cx{}, Cx{}};
      for (const auto& d : sgs_)
        if (d.bus == n) {
          const SeqInjection inj = sg_injection(d.par, x.data() + d.x0);
          acc[kSeqP] += d.scale * inj.p1;
          acc[kSeqN] += d.scale * inj.n1;
        }
      for (const auto& d : gfls_)
        if (d.bus == n) {
          const SeqInjection inj = gfl_injection(x.data() + d.x0);
          acc[kSeqP] += d.scale * inj.p1;
          acc[kSeqN] += d.scale * inj.n1;
        }
      for (size_t b = 0; b < branches_.size(); ++b)
        for (int s = 0; s < branches_[b].seq_count(); ++s) {
          if (branches_[b].from == n) acc[s] -= branch_current(x, static_cast<int>(b), s);
          if (branches_[b].to == n) acc[s] += branch_current(x, static_cast<int>(b), s);
        }
      for (const auto& l : loads_)
        if (l.par.bus == n)
          for (int s = 0; s < l.par.seq_count(); ++s)
            acc[s] -= load_total_current(l.par.r[static_cast<size_t>(s)],
                                         Cx(x(l.x0 + 2 * s), x(l.x0 + 2 * s + 1)),
                                         node_voltage(x, n, s));
      for (const auto& dc : dc_loads_)
        if (dc.par.bus == n) {
          double p = dc.base_p;
          if (dc.pulse) p += dc_pulse_power(*dc.pulse, dc.seed, base_mva_, t);
          if (dc.u_idx >= 0) p += u(dc.u_idx);
          acc[kSeqP] -= dc_load_current(node_voltage(x, n, kSeqP), p, dc.par.v_min).p;
        }
      for (const auto& f : faults_)
        if (f.active && bus_index(f.spec.bus) == n) {
          SeqTriple v{node_voltage(x, n, kSeqP), node_voltage(x, n, kSeqN),
                      node_voltage(x, n, kSeqZ)};
          const SeqTriple i_f = fault_current(f.r_inv, v, true);
          acc[kSeqP] -= i_f.p;
          acc[kSeqN] -= i_f.n;
          acc[kSeqZ] -= i_f.z;
        }
      const auto& nd = nodes_[static_cast<size_t>(n)];
      for (int s = 0; s < 3; ++s) {
        // Balance implied by the node equation just written into dx.
        const int i = node_x0_ + (n * 3 + s) * 2;
        const Cx v = node_voltage(x, n, s);
        const Cx dv(dx(i), dx(i + 1));
        const Cx ic_used =
            nd.c[static_cast<size_t>(s)] / omega_s_ * (dv + kJ * omega_s_ * v);
        const Cx ic_indep = acc[s] - nd.g[static_cast<size_t>(s)] * v;
        worst = std::max(worst, std::abs(ic_used - ic_indep));
      }
    }
    audit->max_mismatch = std::max(audit->max_mismatch, worst);
  }
}

void SystemModel::eval_outputs(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               Eigen::VectorXd& y) const {
  y.resize(static_cast<Eigen::Index>(output_names_.size()));
  int k = 0;

  // Tie interface power measured at the from-bus end.
  double tie_p = 0.0;
  for (size_t b = 0; b < branches_.size(); ++b) {
    if (!branch_tie_[b]) continue;
    for (int s = 0; s < branches_[b].seq_count(); ++s) {
      const Cx v = node_voltage(x, branches_[b].from, s);
      const Cx i = branch_current(x, static_cast<int>(b), s);
      tie_p += 2.0 * (std::conj(v) * i).real();
    }
  }
  y(k++) = tie_p;
  y(k++) = tie_p * base_mva_;

  for (int n = 0; n < num_buses(); ++n) {
    y(k++) = kSqrt2 * std::abs(node_voltage(x, n, kSeqP));
    y(k++) = kSqrt2 * std::abs(node_voltage(x, n, kSeqN));
    y(k++) = kSqrt2 * std::abs(node_voltage(x, n, kSeqZ));
  }

  for (const auto& d : sgs_) {
    const Cx vp = node_voltage(x, d.bus, kSeqP);
    const Cx vn = node_voltage(x, d.bus, kSeqN);
    Eigen::VectorXd scratch(sg_idx::count);
    SGOutputs out;
    sg_derivatives(d.par, d.exc, d.refs, x.data() + d.x0, vp, vn, omega_s_, scratch.data(),
                   &out);
    const Cx sp = 2.0 * std::conj(vp) * (d.scale * out.inj.p1) +
                  2.0 * std::conj(vn) * (d.scale * out.inj.n1);
    y(k++) = 1.0 + x(d.x0 + sg_idx::domega);
    y(k++) = x(d.x0 + sg_idx::delta);
    y(k++) = out.te;
    y(k++) = out.efd_pu;
    y(k++) = sp.real() * base_mva_;
    y(k++) = -2.0 * (std::conj(vp) * (d.scale * out.inj.p1)).imag() * base_mva_;
  }

  std::vector<double> u_add_d(gfls_.size(), 0.0), u_add_q(gfls_.size(), 0.0);
  for (const auto& c : controllers_) {
    const double uo = controller_output(c, x);
    (c.to_q_axis ? u_add_q : u_add_d)[static_cast<size_t>(c.gfl_index)] += uo;
  }
  for (size_t gi = 0; gi < gfls_.size(); ++gi) {
    const auto& d = gfls_[gi];
    GFLInputs in;
    in.vp1 = node_voltage(x, d.bus, kSeqP);
    in.vn1 = node_voltage(x, d.bus, kSeqN);
    in.u_d = u(d.u_d_idx) + u_add_d[gi];
    in.u_q = u(d.u_q_idx) + u_add_q[gi];
    Eigen::VectorXd scratch(gfl_idx::count);
    GFLOutputs out;
    gfl_derivatives(d.par, d.refs, x.data() + d.x0, in, omega_s_, scratch.data(), &out);
    const Cx sp = 2.0 * std::conj(in.vp1) * (d.scale * out.inj.p1) +
                  2.0 * std::conj(in.vn1) * (d.scale * out.inj.n1);
    y(k++) = out.vmag;
    y(k++) = sp.real() * base_mva_;
    y(k++) = -2.0 * (std::conj(in.vp1) * (d.scale * out.inj.p1)).imag() * base_mva_;
    y(k++) = std::hypot(x(d.x0 + gfl_idx::i_td), x(d.x0 + gfl_idx::i_tq));
    y(k++) = out.limiter_active ? 1.0 : 0.0;
    y(k++) = std::abs(out.inj.n1);
    y(k++) = 0.0;  // zero-sequence channel is structurally absent from the IBR
  }

  for (const auto& dc : dc_loads_) {
    double p = dc.base_p;
    if (dc.pulse) p += dc_pulse_power(*dc.pulse, dc.seed, base_mva_, t);
    if (dc.u_idx >= 0) p += u(dc.u_idx);
    y(k++) = p * base_mva_;
  }

  for (size_t b = 0; b < branches_.size(); ++b) {
    y(k++) = std::abs(branch_current(x, static_cast<int>(b), kSeqP));
    y(k++) = std::abs(branch_current(x, static_cast<int>(b), kSeqN));
    y(k++) = branches_[b].has_z ? std::abs(branch_current(x, static_cast<int>(b), kSeqZ)) : 0.0;
  }

  for (const auto& c : controllers_) y(k++) = controller_output(c, x);
}

SystemModel::PowerAudit SystemModel::power_audit(double t, const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& u) const {
  PowerAudit a;
  for (const auto& d : sgs_) {
    const SeqInjection inj = sg_injection(d.par, x.data() + d.x0);
    const Cx vp = node_voltage(x, d.bus, kSeqP), vn = node_voltage(x, d.bus, kSeqN);
    a.generation += 2.0 * (std::conj(vp) * (d.scale * inj.p1)).real() +
                    2.0 * (std::conj(vn) * (d.scale * inj.n1)).real();
  }
  for (const auto& d : gfls_) {
    const SeqInjection inj = gfl_injection(x.data() + d.x0);
    const Cx vp = node_voltage(x, d.bus, kSeqP), vn = node_voltage(x, d.bus, kSeqN);
    a.generation += 2.0 * (std::conj(vp) * (d.scale * inj.p1)).real() +
                    2.0 * (std::conj(vn) * (d.scale * inj.n1)).real();
  }
  for (const auto& l : loads_) {
    for (int s = 0; s < l.par.seq_count(); ++s) {
      const Cx v = node_voltage(x, l.par.bus, s);
      const Cx i = load_total_current(l.par.r[static_cast<size_t>(s)],
                                      Cx(x(l.x0 + 2 * s), x(l.x0 + 2 * s + 1)), v);
      a.load += 2.0 * (std::conj(v) * i).real();
    }
  }
  for (const auto& dc : dc_loads_) {
    double p = dc.base_p;
    if (dc.pulse) p += dc_pulse_power(*dc.pulse, dc.seed, base_mva_, t);
    if (dc.u_idx >= 0) p += u(dc.u_idx);
    const Cx vp = node_voltage(x, dc.par.bus, kSeqP);
    a.load += 2.0 * (std::conj(vp) * dc_load_current(vp, p, dc.par.v_min).p).real();
  }
  for (size_t b = 0; b < branches_.size(); ++b)
    for (int s = 0; s < branches_[b].seq_count(); ++s) {
      const Cx i = branch_current(x, static_cast<int>(b), s);
      a.losses += 2.0 * branches_[b].r[static_cast<size_t>(s)] * std::norm(i);
    }
  for (int n = 0; n < num_buses(); ++n)
    for (int s = 0; s < 3; ++s)
      a.losses +=
          2.0 * nodes_[static_cast<size_t>(n)].g[static_cast<size_t>(s)] *
          std::norm(node_voltage(x, n, s));
  for (const auto& f : faults_)
    if (f.active) {
      const int b = bus_index(f.spec.bus);
      SeqTriple v{node_voltage(x, b, kSeqP), node_voltage(x, b, kSeqN),
                  node_voltage(x, b, kSeqZ)};
      const SeqTriple i_f = fault_current(f.r_inv, v, true);
      a.losses += 2.0 * ((std::conj(v.p) * i_f.p).real() + (std::conj(v.n) * i_f.n).real() +
                         (std::conj(v.z) * i_f.z).real());
    }
  return a;
}

void SystemModel::attach_controller(const ControllerSS& k) {
  ControllerDevice c;
  c.k = k;
  c.gfl_index = gfl_index(k.ibr);
  c.to_q_axis = k.output_channel.size() < 3 ||
                k.output_channel.substr(k.output_channel.size() - 3) != "u_d";
  c.x0 = n_states_;
  n_states_ += c.order();
  state_names_.push_back(k.name + ".washout");
  for (int i = 0; i < c.k.order(); ++i)
    state_names_.push_back(k.name + ".x" + std::to_string(i));
  controllers_.push_back(c);
  output_names_.push_back(k.name + ".u");

  if (equilibrium_.size() > 0) {
    Eigen::VectorXd x0 = equilibrium_;
    equilibrium_.resize(n_states_);
    equilibrium_.head(x0.size()) = x0;
    const auto& g = gfls_[static_cast<size_t>(c.gfl_index)];
    equilibrium_(c.x0) = gfl_vmag(g, x0);  // washout settled, output zero
    for (int i = 0; i < c.k.order(); ++i) equilibrium_(c.x0 + 1 + i) = 0.0;
  }
}

Eigen::MatrixXd SystemModel::fd_jacobian(double t, const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u) const {
  const int n = n_states_;
  Eigen::MatrixXd J(n, n);
  Eigen::VectorXd f0(n), f1(n), xp = x;
  evaluate_derivative(t, x, u, f0);
  for (int j = 0; j < n; ++j) {
    const double h = 1.5e-8 * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + h;
    evaluate_derivative(t, xp, u, f1);
    J.col(j) = (f1 - f0) / h;
    xp(j) = x(j);
  }
  return J;
}

}  // namespace dpgrid

#pragma once

// Composition of devices and network into one flattened real-state dynamical
// system. State layout: [SG blocks | GFL blocks | controller blocks | branch
// k=1 sequence DPs | node k=1 sequence DPs | load inductor DPs], each complex
// coefficient interleaved as (re, im).

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>

#include "dpgrid/config.hpp"
#include "dpgrid/controller.hpp"
#include "dpgrid/gfl.hpp"
#include "dpgrid/machine.hpp"
#include "dpgrid/network.hpp"

namespace dpgrid {

struct KclAudit {
  double max_mismatch = 0.0;  // worst nodal current-balance recompute error
};

/// Deterministic sample-and-hold pulse/noise demand (pu on system base).
double dc_pulse_power(const DcPulseSpec& pulse, std::uint64_t seed, double base_mva, double t);

struct Trajectory {
  std::vector<double> time;
  std::vector<std::string> channels;
  std::vector<Eigen::VectorXd> samples;        // one row per time point
  std::vector<std::pair<double, std::string>> events;
  std::size_t accepted_steps = 0;
  double kcl_max_mismatch = 0.0;

  int channel_index(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
};

class SystemModel {
 public:
  struct SGDevice {
    std::string name;
    int bus = -1;
    SGParams par;
    ExciterParams exc;
    double scale = 1.0;  // S_dev / S_base
    SGRefs refs;
    PfSetpoint pf;
    int x0 = 0;
  };

  struct GFLDevice {
    std::string name;
    int bus = -1;
    GFLParams par;
    double scale = 1.0;
    GFLRefs refs;
    PfSetpoint pf;
    int x0 = 0;
    int u_d_idx = -1, u_q_idx = -1;
  };

  struct ControllerDevice {
    ControllerSS k;
    int gfl_index = -1;
    bool to_q_axis = true;  // output into u_q (else u_d)
    bool enabled = true;
    int x0 = 0;  // washout state first, then controller states
    int order() const { return 1 + k.order(); }
  };

  struct LoadDevice {
    LoadParams par;      // impedances filled by initialize()
    LoadConfig cfg;
    int x0 = 0;
    bool ready = false;
  };

  struct DCLoadDevice {
    DCLoadParams par;
    double base_p = 0.0;  // pu
    std::optional<DcPulseSpec> pulse;
    std::uint64_t seed = 0;
    int u_idx = -1;
  };

  struct FaultRuntime {
    FaultSpec spec;
    Eigen::Matrix3cd r_inv;
    bool active = false;
  };

  static SystemModel assemble(const SystemConfig& cfg);

  /// Appends a loaded damping controller as a device; extends the equilibrium
  /// when the model is already initialized.
  void attach_controller(const ControllerSS& k);

  /// Single entry point shared by the integrator and the linearizer:
  /// deterministic and side-effect free given (t, x, u).
  void evaluate_derivative(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           Eigen::VectorXd& dx, KclAudit* audit = nullptr) const;

  void eval_outputs(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                    Eigen::VectorXd& y) const;

  /// Forward-difference Jacobian of the derivative at (t, x, u).
  Eigen::MatrixXd fd_jacobian(double t, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) const;

  /// Sum of source injections, load/dc draws and series losses (pu);
  /// steady-state audit for the conservation property.
  struct PowerAudit {
    double generation = 0.0;
    double load = 0.0;
    double losses = 0.0;  // branch R, shunt G and device-internal series R
  };
  PowerAudit power_audit(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  int num_states() const { return n_states_; }
  int num_inputs() const { return static_cast<int>(input_names_.size()); }
  int num_outputs() const { return static_cast<int>(output_names_.size()); }
  const std::vector<std::string>& state_names() const { return state_names_; }
  const std::vector<std::string>& input_names() const { return input_names_; }
  const std::vector<std::string>& output_names() const { return output_names_; }
  int input_index(const std::string& name) const;
  int output_index(const std::string& name) const;

  double omega_s() const { return omega_s_; }
  double base_mva() const { return base_mva_; }
  int bus_index(int bus_id) const;
  int num_buses() const { return static_cast<int>(nodes_.size()); }

  const Eigen::VectorXd& equilibrium() const;
  bool initialized() const { return equilibrium_.size() == n_states_; }
  void set_equilibrium(const Eigen::VectorXd& x0) { equilibrium_ = x0; }

  Cx node_voltage(const Eigen::VectorXd& x, int bus_idx, int seq) const;
  Cx branch_current(const Eigen::VectorXd& x, int branch_idx, int seq) const;

  // Mutable runtime pieces driven by scenario events.
  std::vector<SGDevice>& sgs() { return sgs_; }
  std::vector<GFLDevice>& gfls() { return gfls_; }
  std::vector<ControllerDevice>& controllers() { return controllers_; }
  std::vector<DCLoadDevice>& dc_loads() { return dc_loads_; }
  std::vector<FaultRuntime>& faults() { return faults_; }
  const std::vector<SGDevice>& sgs() const { return sgs_; }
  const std::vector<GFLDevice>& gfls() const { return gfls_; }
  const std::vector<ControllerDevice>& controllers() const { return controllers_; }
  const std::vector<DCLoadDevice>& dc_loads() const { return dc_loads_; }
  const std::vector<LoadDevice>& load_devices() const { return loads_; }
  std::vector<LoadDevice>& load_devices() { return loads_; }
  const std::vector<BranchParams>& branches() const { return branches_; }
  const std::vector<NodeParams>& nodes() const { return nodes_; }
  const SystemConfig& config() const { return config_; }

  int gfl_index(const std::string& name) const;
  int sg_index(const std::string& name) const;

  friend void initialize_model(SystemModel& model);

 private:
  void register_channels();
  double controller_output(const ControllerDevice& c, const Eigen::VectorXd& x) const;
  double gfl_vmag(const GFLDevice& g, const Eigen::VectorXd& x) const;

  SystemConfig config_;
  double omega_s_ = kOmega60;
  double base_mva_ = 100.0;

  std::map<int, int> bus_index_;
  std::vector<int> bus_ids_;
  std::vector<NodeParams> nodes_;
  std::vector<BranchParams> branches_;
  std::vector<std::string> branch_names_;
  std::vector<bool> branch_tie_;
  std::vector<int> branch_x0_;
  std::vector<int> load_x0_;
  int node_x0_ = 0;
  int n_states_ = 0;

  std::vector<SGDevice> sgs_;
  std::vector<GFLDevice> gfls_;
  std::vector<ControllerDevice> controllers_;
  std::vector<LoadDevice> loads_;
  std::vector<DCLoadDevice> dc_loads_;
  std::vector<FaultRuntime> faults_;

  std::vector<std::string> state_names_;
  std::vector<std::string> input_names_;
  std::vector<std::string> output_names_;
  Eigen::VectorXd equilibrium_;
};

}  // namespace dpgrid

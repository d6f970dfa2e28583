#pragma once

// Damping-controller state-space document: the synthesized compensator plus
// the washout that conditions its feedback signal. The simulator loads these
// to close the loop in nonlinear runs.

#include <Eigen/Dense>
#include <string>

namespace dpgrid {

struct ControllerSS {
  std::string name;
  std::string ibr;             // attached device
  std::string input_channel;   // e.g. "ibr2.vmag"
  std::string output_channel;  // e.g. "ibr2.u_q"
  double washout_tw = 2.0;
  Eigen::MatrixXd a, b, c, d;
  double gamma = 0.0;

  int order() const { return static_cast<int>(a.rows()); }
};

ControllerSS load_controller(const std::string& path);
void save_controller(const ControllerSS& k, const std::string& path);

}  // namespace dpgrid

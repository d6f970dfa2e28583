#pragma once

// Positive-sequence Newton-Raphson power flow at k = 1 and the equilibrium
// back-solve that seeds every device state, followed by a min-norm Newton
// polish on the full DP derivative.

#include <Eigen/Dense>

#include "dpgrid/system.hpp"

namespace dpgrid {

struct PowerFlowResult {
  Eigen::VectorXd vm;     // bus voltage magnitudes (pu)
  Eigen::VectorXd va;     // bus voltage angles (rad)
  Eigen::VectorXcd s_net; // net bus injections (pu, device - load - dc)
  int iterations = 0;
  double mismatch = 0.0;
};

/// Solves the power flow on the assembled model's network. Throws
/// PowerFlowDiverged with the iteration count and worst mismatch on failure.
PowerFlowResult solve_powerflow(const SystemModel& model, double tol = 1e-12,
                                int max_iter = 60);

/// Full initialization: power flow, constant-impedance load conversion,
/// per-device back-solve, Newton polish. Leaves the equilibrium on the model.
void initialize_model(SystemModel& model);

}  // namespace dpgrid

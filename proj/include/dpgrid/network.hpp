#pragma once

// pnz-frame network elements at k = ±1: series R-L branches, capacitive
// nodes, parallel R-L loads (load capacitance merged into the node shunt),
// unity-power-factor constant-power loads, and resistive bus faults.

#include <Eigen/Dense>
#include <array>
#include <optional>

#include "dpgrid/dp.hpp"
#include "dpgrid/types.hpp"

namespace dpgrid {

// Sequence slots.
inline constexpr int kSeqP = 0, kSeqN = 1, kSeqZ = 2;

struct BranchParams {
  int from = -1, to = -1;
  std::array<double, 3> r{};       // per sequence, diagonal
  std::array<double, 3> x{};       // series reactance (= L in pu)
  bool has_z = true;               // false: zero-sequence open (no z state)
  int seq_count() const { return has_z ? 3 : 2; }
};

struct NodeParams {
  std::array<double, 3> c{};  // shunt capacitance (pu); must be > 0
  std::array<double, 3> g{};  // small shunt conductance (pu)
};

struct LoadParams {
  int bus = -1;
  std::array<double, 3> r{};  // parallel resistance per sequence
  std::array<double, 3> x{};  // parallel inductive reactance per sequence
  bool has_z = false;
  int seq_count() const { return has_z ? 3 : 2; }
};

struct DCLoadParams {
  int bus = -1;
  double v_min = 0.3;  // guard on |<v_p>_1|
};

struct FaultSpec {
  int bus = -1;
  double r_a = 1e6, r_b = 1e6, r_c = 1e6;  // phase-to-neutral (pu)
  double r_g = 0.0;                        // neutral-to-ground (pu)
  double t_apply = 0.0, t_clear = 0.0;
};

/// Similarity transform of the phase-domain fault resistance matrix into the
/// pnz frame: R_fpnz = T^{-1} R_fabcg T.
Eigen::Matrix3cd fault_matrix(const FaultSpec& spec);

/// Fault current <i_fault>_k = R_fpnz^{-1} <v>_k while active, zero otherwise.
SeqTriple fault_current(const Eigen::Matrix3cd& r_inv, const SeqTriple& v, bool active);

/// Branch ODE right-hand side at k = 1 for one sequence:
/// di = (w/L)(dv - R i) - j w i.
inline Cx branch_derivative(double r, double l, Cx i, Cx dv, double omega_s) {
  return (omega_s / l) * (dv - r * i) - kJ * omega_s * i;
}

/// Node ODE right-hand side at k = 1 for one sequence:
/// dv = (w/C) i_c - j w v.
inline Cx node_derivative(double c, Cx i_c, Cx v, double omega_s) {
  return (omega_s / c) * i_c - kJ * omega_s * v;
}

/// Load inductor ODE and total load current at k = 1 for one sequence.
inline Cx load_inductor_derivative(double x, Cx i_ll, Cx v, double omega_s) {
  return (omega_s / x) * v - kJ * omega_s * i_ll;
}
inline Cx load_total_current(double r, Cx i_ll, Cx v) { return i_ll + v / r; }

/// Positive-sequence constant-power current: <i_DCp>_1 = P/(2 <v_p>_1*);
/// negative and zero sequences are identically zero. Throws VoltageCollapse
/// below the guard.
SeqTriple dc_load_current(Cx v_p1, double p_dc, double v_min);

}  // namespace dpgrid

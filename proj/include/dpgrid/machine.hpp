#pragma once

// Synchronous generator in sequence-frame dynamic phasors, plus the DC1A
// excitation system.
//
// The machine is the standard fundamental-parameter model (field winding, one
// d-axis damper, two q-axis dampers), generator current convention (stator
// current positive out of the machine). The stator, restricted to pnz k = ±1,
// is carried as two complex rotor-frame flux coefficients
//   Psi0 = <(psi_q - j psi_d)/sqrt2>_0,   Psi2 = <(psi_q + j psi_d)/sqrt2>_2,
// which is the e^{-j k delta} twist that keeps every coupling inductance
// constant: <psi_p>_1 = e^{j delta} Psi0 and <psi_n>_1 = e^{-j delta} Psi2.
// Rotor circuits carry k = 0 (real) and k = ±2 (complex) coefficients; the
// mechanical side and the exciter are k = 0 only.

#include <Eigen/Dense>

#include "dpgrid/dp.hpp"
#include "dpgrid/types.hpp"

namespace dpgrid {

struct ExciterParams {
  double t_r = 0.02;    // voltage transducer (s)
  double t_a = 0.06;    // regulator (s)
  double t_e = 0.46;    // exciter field (s)
  double t_f = 1.0;     // stabilizer washout (s)
  double k_a = 46.0;
  double k_e = 1.0;
  double k_f = 0.1;
  double a_ex = 0.0;    // saturation A_ex * e^{B_ex efd} * efd
  double b_ex = 0.0;
  double vr_max = 0.0;  // ceiling clamps; 0 disables
  double vr_min = 0.0;
};

/// Standard stability-program machine data (machine MVA base).
struct SGStandardData {
  double xd, xq, xl;
  double xd1, xq1;      // transient
  double xd2, xq2;      // subtransient
  double ra;
  double td0p, tq0p;    // transient open-circuit time constants (s)
  double td0pp, tq0pp;  // subtransient (s)
  double h;             // inertia (s, machine base)
  double kd;            // damping torque coefficient (pu)
};

struct SGParams {
  // Fundamental per-unit parameters on the machine base.
  double l_ad, l_aq, l_l;
  double l_ffd, l_11d, l_11q, l_22q;
  double r_fd, r_1d, r_1q, r_2q;
  double r_a;
  double h;
  double k_d;
  double s_mva = 0.0;  // machine rating; 0 means "already on system base"

  Eigen::Matrix3d md_inv;  // [i_d i_fd i_1d] = md_inv [psi_d psi_fd psi_1d]
  Eigen::Matrix3d mq_inv;

  double l_d() const { return l_ad + l_l; }
  double l_q() const { return l_aq + l_l; }

  static SGParams from_standard(const SGStandardData& s);
  void finalize();  // builds md_inv / mq_inv from the inductances
};

// State slice layout (22 doubles).
namespace sg_idx {
inline constexpr int psi0_re = 0, psi0_im = 1;      // stator Psi0
inline constexpr int psi2_re = 2, psi2_im = 3;      // stator Psi2
inline constexpr int fd0 = 4, d1_0 = 5, q1_0 = 6, q2_0 = 7;
inline constexpr int fd2_re = 8, fd2_im = 9;
inline constexpr int d1_2re = 10, d1_2im = 11;
inline constexpr int q1_2re = 12, q1_2im = 13;
inline constexpr int q2_2re = 14, q2_2im = 15;
inline constexpr int delta = 16, domega = 17;
inline constexpr int exc_rf = 18, exc_vtr = 19, exc_vr = 20, exc_efd = 21;
inline constexpr int count = 22;
}  // namespace sg_idx

struct SGRefs {
  double t_m = 0.0;   // mechanical torque (machine pu)
  double v_ref = 0.0; // exciter reference (pu)
};

struct SGOutputs {
  SeqInjection inj;   // stator current into the bus, machine pu
  double te = 0.0;    // air-gap torque (machine pu)
  double efd_pu = 0.0;
};

/// DC1A per the standard block diagram: states [R_f, V_tr, V_r, e_fd],
/// vmag is the sensed terminal-voltage magnitude (pu). Returns field voltage
/// in machine reciprocal pu via v_f = (R_fd/L_adu) e_fd.
void exciter_dc1a_derivatives(const ExciterParams& p, const double* x, double vmag,
                              double v_ref, double* dx, double rfd_over_ladu, double* v_f);

/// Full machine derivative; vp1/vn1 are the bus k = ±1 sequence voltages
/// (system pu voltage, identical in machine pu). Fills the 22-slot dx and
/// reports the injection in machine pu.
void sg_derivatives(const SGParams& p, const ExciterParams& exc, const SGRefs& refs,
                    const double* x, Cx vp1, Cx vn1, double omega_s, double* dx,
                    SGOutputs* out);

/// Back-solve of the balanced equilibrium from the terminal phasor V and
/// complex power S (machine pu, generator convention). Also returns the
/// mechanical torque and exciter reference that hold the point.
void sg_init_from_phasor(const SGParams& p, const ExciterParams& exc, Cx v_phasor,
                         Cx s_power, double* x, SGRefs* refs);

/// Stator current injection recomputed from the flux states alone (machine
/// pu); independent of the derivative path, used by outputs and the KCL audit.
SeqInjection sg_injection(const SGParams& p, const double* x);

}  // namespace dpgrid

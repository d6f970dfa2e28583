#pragma once

// Grid-following inverter in its PLL dq frame: PLL, outer loops (real power
// and AC-voltage magnitude), constant-angle current limiter, inner current
// loops, and the series R-L filter + transformer plant. Every control/plant
// variable carries dynamic phasors on {0, ±2}; k = 0 coefficients are real.
//
// Power scale: the starred references P_c*, Q_c* live in the converter scale
// where P = (3/2) v_d i_d, i.e. P_c* = 1.5 * P in device per-unit. The config
// layer converts from MW.

#include "dpgrid/dp.hpp"
#include "dpgrid/types.hpp"

namespace dpgrid {

struct GFLParams {
  double kp_pll = 0.0, ki_pll = 0.0;
  double tau_m = 0.01;  // voltage measurement filter (s)
  double tau_f = 0.02;  // |v_dq| filter (s)
  double kp_v = 0.0, ki_v = 0.0;   // AC-voltage PI -> Q_c*
  double kp_i = 0.0, ki_i = 0.0;   // current PI
  double r = 0.0, l = 0.0;         // converter filter (device pu)
  double r_t = 0.0, l_t = 0.0;     // transformer (device pu)
  double i_max = 1.2;              // current limit (device pu)
  double v_dm_min = 0.2;           // divide guard on measured v_d
  double s_mva = 0.0;              // device rating; 0 means system base

  double x_tot() const { return l + l_t; }
  double r_tot() const { return r + r_t; }

  /// Second-order PLL tuning: natural frequency 2*pi*bw, damping 0.707.
  void set_pll_bandwidth(double bw_hz) {
    const double wn = 2.0 * kPi * bw_hz;
    ki_pll = wn * wn;
    kp_pll = 2.0 * 0.707 * wn;
  }
};

// State slice layout (26 doubles). k=0 block first, then k=+2 (re, im) in the
// same variable order, then the two magnitude-loop states.
namespace gfl_idx {
inline constexpr int x_pll = 0, delta_pll = 1, v_dm = 2, v_qm = 3;
inline constexpr int x_id = 4, x_iq = 5, i_td = 6, i_tq = 7;
inline constexpr int k2_base = 8;  // 8 complex pairs: same order as k=0 block
inline constexpr int x_f = 24, x_v = 25;
inline constexpr int count = 26;

inline constexpr int k2_re(int var) { return k2_base + 2 * var; }
inline constexpr int k2_im(int var) { return k2_base + 2 * var + 1; }
}  // namespace gfl_idx

struct GFLRefs {
  double p_ref = 0.0;     // P_c* (converter scale, 1.5 * pu)
  double vmag_ref = 1.0;  // |v_dq|*
};

struct GFLInputs {
  Cx vp1;  // bus positive-sequence voltage DP at k=1
  Cx vn1;  // bus negative-sequence voltage DP at k=1
  double u_d = 0.0;  // damping inputs added to the k=0 current references
  double u_q = 0.0;
};

struct GFLOutputs {
  SeqInjection inj;        // injected current, device pu
  bool limiter_active = false;
  double i_ref_norm = 0.0; // |(i_td*, i_tq*)| before limiting
  double vmag = 0.0;       // |v_dq| from measured k=0 components
};

/// Constant-angle limiter: scale both k=0 reference components to I_max when
/// the pair exceeds it, preserving the reference angle.
void apply_current_limit(double& i_td_ref, double& i_tq_ref, double i_max);

/// PLL dynamics per harmonic: dx = ki*vq - j k w x, ddelta = kp*vq + x - j k w d.
void pll_derivatives(const GFLParams& p, double omega_s, const Cx vq[2], const Cx x_pll[2],
                     const Cx delta_pll[2], Cx dx[2], Cx ddelta[2]);

/// Full device derivative. Fills the 26-slot dx and the injection (device pu).
/// Throws LowVoltage when the measured v_d drops below the divide guard.
void gfl_derivatives(const GFLParams& p, const GFLRefs& refs, const double* x,
                     const GFLInputs& in, double omega_s, double* dx, GFLOutputs* out);

/// Balanced equilibrium from the bus phasor V and injected power S (device
/// pu). Throws DeviceInitInfeasible when the operating point violates I_max.
void gfl_init_from_phasor(const GFLParams& p, Cx v_phasor, Cx s_power, double* x,
                          GFLRefs* refs);

/// Injection recomputed from the current states alone (device pu).
SeqInjection gfl_injection(const double* x);

}  // namespace dpgrid

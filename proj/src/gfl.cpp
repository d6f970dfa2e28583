#include "dpgrid/gfl.hpp"

#include <cmath>

#include "dpgrid/errors.hpp"

namespace dpgrid {

void apply_current_limit(double& i_td_ref, double& i_tq_ref, double i_max) {
  const double norm = std::hypot(i_td_ref, i_tq_ref);
  if (norm > i_max && norm > 0.0) {
    const double s = i_max / norm;
    i_td_ref *= s;
    i_tq_ref *= s;
  }
}

void pll_derivatives(const GFLParams& p, double omega_s, const Cx vq[2], const Cx x_pll[2],
                     const Cx delta_pll[2], Cx dx[2], Cx ddelta[2]) {
  for (int h = 0; h < 2; ++h) {
    const double k = h == 0 ? 0.0 : 2.0;
    const Cx jkw = kJ * k * omega_s;
    dx[h] = p.ki_pll * vq[h] - jkw * x_pll[h];
    ddelta[h] = p.kp_pll * vq[h] + x_pll[h] - jkw * delta_pll[h];
  }
}

void gfl_derivatives(const GFLParams& p, const GFLRefs& refs, const double* x,
                     const GFLInputs& in, double omega_s, double* dx, GFLOutputs* out) {
  using namespace gfl_idx;
  auto k2 = [&](int var) { return Cx(x[k2_re(var)], x[k2_im(var)]); };
  auto put_k2 = [&](int var, Cx v) {
    dx[k2_re(var)] = v.real();
    dx[k2_im(var)] = v.imag();
  };

  // Bus voltage in the PLL frame, with the first-order delta ripple coupling.
  const auto rot = HarmonicRotation::from_angle(x[delta_pll], k2(delta_pll));
  const DqHarmonics v = pnz_to_dq_voltage(in.vp1, in.vn1, rot);

  // PLL.
  const Cx vq_h[2] = {v.q0, v.q2};
  const Cx xp_h[2] = {Cx(x[x_pll], 0.0), k2(x_pll)};
  const Cx dl_h[2] = {Cx(x[delta_pll], 0.0), k2(delta_pll)};
  Cx dxp[2], ddl[2];
  pll_derivatives(p, omega_s, vq_h, xp_h, dl_h, dxp, ddl);
  dx[x_pll] = dxp[0].real();
  dx[delta_pll] = ddl[0].real();
  put_k2(x_pll, dxp[1]);
  put_k2(delta_pll, ddl[1]);

  // Measurement filters on both harmonics.
  const Cx vd_h[2] = {v.d0, v.d2};
  const Cx vdm_h[2] = {Cx(x[v_dm], 0.0), k2(v_dm)};
  const Cx vqm_h[2] = {Cx(x[v_qm], 0.0), k2(v_qm)};
  for (int h = 0; h < 2; ++h) {
    const Cx jkw = kJ * (h == 0 ? 0.0 : 2.0) * omega_s;
    const Cx dvdm = (vd_h[h] - vdm_h[h]) / p.tau_m - jkw * vdm_h[h];
    const Cx dvqm = (vq_h[h] - vqm_h[h]) / p.tau_m - jkw * vqm_h[h];
    if (h == 0) {
      dx[v_dm] = dvdm.real();
      dx[v_qm] = dvqm.real();
    } else {
      put_k2(v_dm, dvdm);
      put_k2(v_qm, dvqm);
    }
  }

  // Outer loops (k=0 only): magnitude filter, AC-voltage PI, references.
  const double vmag = std::hypot(x[v_dm], x[v_qm]);
  dx[x_f] = (vmag - x[x_f]) / p.tau_f;
  dx[x_v] = p.ki_v * (refs.vmag_ref - x[x_f]);
  const double q_ref = x[x_v] + p.kp_v * (refs.vmag_ref - x[x_f]);

  if (std::abs(x[v_dm]) < p.v_dm_min)
    throw LowVoltage("gfl: measured v_d below divide guard (" + std::to_string(x[v_dm]) + ")");
  double i_td_ref = (2.0 / 3.0) * refs.p_ref / x[v_dm] + in.u_d;
  double i_tq_ref = -(2.0 / 3.0) * q_ref / x[v_dm] + in.u_q;
  const double ref_norm = std::hypot(i_td_ref, i_tq_ref);
  apply_current_limit(i_td_ref, i_tq_ref, p.i_max);

  // Inner loops + plant, k=0 and k=2; reference harmonics above k=0 are zero
  // by control design.
  const double xt = p.x_tot(), rt = p.r_tot();
  const Cx ref_d[2] = {Cx(i_td_ref, 0.0), Cx(0.0, 0.0)};
  const Cx ref_q[2] = {Cx(i_tq_ref, 0.0), Cx(0.0, 0.0)};
  const Cx itd_h[2] = {Cx(x[i_td], 0.0), k2(i_td)};
  const Cx itq_h[2] = {Cx(x[i_tq], 0.0), k2(i_tq)};
  const Cx xid_h[2] = {Cx(x[x_id], 0.0), k2(x_id)};
  const Cx xiq_h[2] = {Cx(x[x_iq], 0.0), k2(x_iq)};
  for (int h = 0; h < 2; ++h) {
    const Cx jkw = kJ * (h == 0 ? 0.0 : 2.0) * omega_s;
    const Cx ed = ref_d[h] - itd_h[h];
    const Cx eq = ref_q[h] - itq_h[h];
    const Cx dxid = p.ki_i * ed - jkw * xid_h[h];
    const Cx dxiq = p.ki_i * eq - jkw * xiq_h[h];
    const Cx vtd = p.kp_i * ed + xid_h[h] + vdm_h[h] - xt * itq_h[h];
    const Cx vtq = p.kp_i * eq + xiq_h[h] + vqm_h[h] + xt * itd_h[h];
    const Cx ditd =
        (omega_s / xt) * (vtd - vd_h[h] + xt * itq_h[h] - rt * itd_h[h]) - jkw * itd_h[h];
    const Cx ditq =
        (omega_s / xt) * (vtq - vq_h[h] - xt * itd_h[h] - rt * itq_h[h]) - jkw * itq_h[h];
    if (h == 0) {
      dx[x_id] = dxid.real();
      dx[x_iq] = dxiq.real();
      dx[i_td] = ditd.real();
      dx[i_tq] = ditq.real();
    } else {
      put_k2(x_id, dxid);
      put_k2(x_iq, dxiq);
      put_k2(i_td, ditd);
      put_k2(i_tq, ditq);
    }
  }

  if (out) {
    DqHarmonics i;
    i.d0 = Cx(x[i_td], 0.0);
    i.q0 = Cx(x[i_tq], 0.0);
    i.d2 = k2(i_td);
    i.q2 = k2(i_tq);
    out->inj = dq_to_pnz_injection(i, rot);
    out->limiter_active = ref_norm > p.i_max;
    out->i_ref_norm = ref_norm;
    out->vmag = vmag;
  }
}

SeqInjection gfl_injection(const double* x) {
  using namespace gfl_idx;
  const auto rot = HarmonicRotation::from_angle(x[delta_pll],
                                                Cx(x[k2_re(delta_pll)], x[k2_im(delta_pll)]));
  DqHarmonics i;
  i.d0 = Cx(x[i_td], 0.0);
  i.q0 = Cx(x[i_tq], 0.0);
  i.d2 = Cx(x[k2_re(i_td)], x[k2_im(i_td)]);
  i.q2 = Cx(x[k2_re(i_tq)], x[k2_im(i_tq)]);
  return dq_to_pnz_injection(i, rot);
}

void gfl_init_from_phasor(const GFLParams& p, Cx v_phasor, Cx s_power, double* x,
                          GFLRefs* refs) {
  using namespace gfl_idx;
  for (int i = 0; i < count; ++i) x[i] = 0.0;

  const Cx i_phasor = std::conj(s_power / v_phasor);
  const double delta = std::arg(v_phasor) + kPi / 2.0;  // PLL lock: v_q = 0
  const Cx rot = std::polar(1.0, delta);
  const Cx wi = i_phasor * std::conj(rot);  // i_q - j i_d
  const double i_d = -wi.imag(), i_q = wi.real();
  const double v_d = std::abs(v_phasor);

  if (std::hypot(i_d, i_q) > p.i_max)
    throw DeviceInitInfeasible("gfl_init: equilibrium current exceeds I_max");

  x[delta_pll] = delta;
  x[v_dm] = v_d;
  x[v_qm] = 0.0;
  x[i_td] = i_d;
  x[i_tq] = i_q;
  x[x_id] = p.r_tot() * i_d;
  x[x_iq] = p.r_tot() * i_q;
  x[x_f] = v_d;
  x[x_v] = -1.5 * v_d * i_q;  // Q_c* balancing the operating point

  refs->p_ref = 1.5 * v_d * i_d;
  refs->vmag_ref = v_d;
}

}  // namespace dpgrid

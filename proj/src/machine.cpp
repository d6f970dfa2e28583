#include "dpgrid/machine.hpp"

#include <cmath>

#include "dpgrid/errors.hpp"

namespace dpgrid {

SGParams SGParams::from_standard(const SGStandardData& s) {
  SGParams p;
  p.l_l = s.xl;
  p.l_ad = s.xd - s.xl;
  p.l_aq = s.xq - s.xl;
  p.r_a = s.ra;
  p.h = s.h;
  p.k_d = s.kd;

  // d-axis: field from X'd, damper from X''d (mutuals all equal L_ad).
  const double lfd = p.l_ad * (s.xd1 - s.xl) / (p.l_ad - (s.xd1 - s.xl));
  p.l_ffd = p.l_ad + lfd;
  const double xpd = s.xd2 - s.xl;
  const double l1d = 1.0 / (1.0 / xpd - 1.0 / p.l_ad - 1.0 / lfd);
  p.l_11d = p.l_ad + l1d;
  p.r_fd = p.l_ffd / (s.td0p * kOmega60);
  p.r_1d = (l1d + p.l_ad * lfd / (p.l_ad + lfd)) / (s.td0pp * kOmega60);

  // q-axis: first damper from X'q, second from X''q.
  const double l1q = p.l_aq * (s.xq1 - s.xl) / (p.l_aq - (s.xq1 - s.xl));
  p.l_11q = p.l_aq + l1q;
  const double xpq = s.xq2 - s.xl;
  const double l2q = 1.0 / (1.0 / xpq - 1.0 / p.l_aq - 1.0 / l1q);
  p.l_22q = p.l_aq + l2q;
  p.r_1q = p.l_11q / (s.tq0p * kOmega60);
  p.r_2q = (l2q + p.l_aq * l1q / (p.l_aq + l1q)) / (s.tq0pp * kOmega60);

  p.finalize();
  return p;
}

void SGParams::finalize() {
  Eigen::Matrix3d md, mq;
  md << -l_d(), l_ad, l_ad,
        -l_ad, l_ffd, l_ad,
        -l_ad, l_ad, l_11d;
  mq << -l_q(), l_aq, l_aq,
        -l_aq, l_11q, l_aq,
        -l_aq, l_aq, l_22q;
  md_inv = md.inverse();
  mq_inv = mq.inverse();
}

void exciter_dc1a_derivatives(const ExciterParams& p, const double* x, double vmag,
                              double v_ref, double* dx, double rfd_over_ladu, double* v_f) {
  const double rf = x[0], vtr = x[1], vr = x[2], efd = x[3];
  dx[0] = (efd - rf) / p.t_f;
  dx[1] = (vmag - vtr) / p.t_r;
  double vr_eff = vr;
  if (p.vr_max > p.vr_min) vr_eff = std::clamp(vr, p.vr_min, p.vr_max);
  dx[2] = (p.k_a * p.k_f / p.t_f * (rf - efd) + p.k_a * (v_ref - vtr) - vr) / p.t_a;
  const double sat = p.a_ex * std::exp(p.b_ex * efd) * efd;
  dx[3] = -(p.k_e * efd + sat - vr_eff) / p.t_e;
  if (v_f) *v_f = rfd_over_ladu * efd;
}

namespace {

struct AxisCurrents {
  Cx i_s;   // stator component (d or q)
  Cx i_r1;  // field or 1q
  Cx i_r2;  // 1d or 2q
};

inline AxisCurrents solve_axis(const Eigen::Matrix3d& minv, Cx psi_s, Cx psi_r1, Cx psi_r2) {
  AxisCurrents c;
  c.i_s = minv(0, 0) * psi_s + minv(0, 1) * psi_r1 + minv(0, 2) * psi_r2;
  c.i_r1 = minv(1, 0) * psi_s + minv(1, 1) * psi_r1 + minv(1, 2) * psi_r2;
  c.i_r2 = minv(2, 0) * psi_s + minv(2, 1) * psi_r1 + minv(2, 2) * psi_r2;
  return c;
}

}  // namespace

void sg_derivatives(const SGParams& p, const ExciterParams& exc, const SGRefs& refs,
                    const double* x, Cx vp1, Cx vn1, double omega_s, double* dx,
                    SGOutputs* out) {
  using namespace sg_idx;
  const Cx psi_0(x[psi0_re], x[psi0_im]);
  const Cx psi_2(x[psi2_re], x[psi2_im]);
  const double dm = x[delta];
  const double omega = 1.0 + x[domega];

  // Flux components per harmonic. k=0 parts are real; k=2 parts follow from
  // the truncation <u_psi>_2 = 0, i.e. <psi_q>_2 = j <psi_d>_2.
  const double psi_d0 = -kSqrt2 * psi_0.imag();
  const double psi_q0 = kSqrt2 * psi_0.real();
  const Cx psi_d2 = -kJ * psi_2 / kSqrt2;
  const Cx psi_q2 = psi_2 / kSqrt2;

  const AxisCurrents d0 = solve_axis(p.md_inv, psi_d0, x[fd0], x[d1_0]);
  const AxisCurrents q0 = solve_axis(p.mq_inv, psi_q0, x[q1_0], x[q2_0]);
  const AxisCurrents d2 =
      solve_axis(p.md_inv, psi_d2, Cx(x[fd2_re], x[fd2_im]), Cx(x[d1_2re], x[d1_2im]));
  const AxisCurrents q2 =
      solve_axis(p.mq_inv, psi_q2, Cx(x[q1_2re], x[q1_2im]), Cx(x[q2_2re], x[q2_2im]));

  // Rotor-frame complex stator currents and terminal voltages.
  const Cx u_i0 = (q0.i_s - kJ * d0.i_s) / kSqrt2;
  const Cx ubar_i2 = (q2.i_s + kJ * d2.i_s) / kSqrt2;
  const Cx rot = std::polar(1.0, dm);
  const Cx u_v0 = std::conj(rot) * vp1;
  const Cx ubar_v2 = rot * vn1;

  // Stator flux dynamics (k=0 and the conjugate-signal k=2 coefficient).
  const Cx dpsi0 = omega_s * (u_v0 + p.r_a * u_i0 - kJ * omega * psi_0);
  const Cx dpsi2 =
      omega_s * (ubar_v2 + p.r_a * ubar_i2 + kJ * omega * psi_2) - kJ * 2.0 * omega_s * psi_2;
  dx[psi0_re] = dpsi0.real();
  dx[psi0_im] = dpsi0.imag();
  dx[psi2_re] = dpsi2.real();
  dx[psi2_im] = dpsi2.imag();

  // Exciter and field voltage (reciprocal pu via R_fd/L_adu).
  double v_f = 0.0;
  exciter_dc1a_derivatives(exc, x + exc_rf, kSqrt2 * std::abs(vp1), refs.v_ref, dx + exc_rf,
                           p.r_fd / p.l_ad, &v_f);

  // Rotor circuits.
  dx[fd0] = omega_s * (v_f - p.r_fd * d0.i_r1);
  dx[d1_0] = -omega_s * p.r_1d * d0.i_r2;
  dx[q1_0] = -omega_s * p.r_1q * q0.i_r1;
  dx[q2_0] = -omega_s * p.r_2q * q0.i_r2;
  const Cx dfd2 = -omega_s * p.r_fd * d2.i_r1 - kJ * 2.0 * omega_s * Cx(x[fd2_re], x[fd2_im]);
  const Cx dd12 = -omega_s * p.r_1d * d2.i_r2 - kJ * 2.0 * omega_s * Cx(x[d1_2re], x[d1_2im]);
  const Cx dq12 = -omega_s * p.r_1q * q2.i_r1 - kJ * 2.0 * omega_s * Cx(x[q1_2re], x[q1_2im]);
  const Cx dq22 = -omega_s * p.r_2q * q2.i_r2 - kJ * 2.0 * omega_s * Cx(x[q2_2re], x[q2_2im]);
  dx[fd2_re] = dfd2.real();
  dx[fd2_im] = dfd2.imag();
  dx[d1_2re] = dd12.real();
  dx[d1_2im] = dd12.imag();
  dx[q1_2re] = dq12.real();
  dx[q1_2im] = dq12.imag();
  dx[q2_2re] = dq22.real();
  dx[q2_2im] = dq22.imag();

  // Average air-gap torque: the k=±2 products rectify into a k=0 component
  // under unbalance.
  const double te = psi_d0 * q0.i_s.real() - psi_q0 * d0.i_s.real() +
                    2.0 * (std::conj(psi_d2) * q2.i_s - std::conj(psi_q2) * d2.i_s).real();

  dx[delta] = omega_s * x[domega];
  dx[domega] = (refs.t_m - te - p.k_d * x[domega]) / (2.0 * p.h);

  if (out) {
    out->inj.p1 = rot * u_i0;
    out->inj.n1 = std::conj(rot) * ubar_i2;
    out->te = te;
    out->efd_pu = x[exc_efd];
  }
}

SeqInjection sg_injection(const SGParams& p, const double* x) {
  using namespace sg_idx;
  const Cx psi_0(x[psi0_re], x[psi0_im]);
  const Cx psi_2(x[psi2_re], x[psi2_im]);
  const double psi_d0 = -kSqrt2 * psi_0.imag();
  const double psi_q0 = kSqrt2 * psi_0.real();
  const Cx psi_d2 = -kJ * psi_2 / kSqrt2;
  const Cx psi_q2 = psi_2 / kSqrt2;
  const AxisCurrents d0 = solve_axis(p.md_inv, psi_d0, x[fd0], x[d1_0]);
  const AxisCurrents q0 = solve_axis(p.mq_inv, psi_q0, x[q1_0], x[q2_0]);
  const AxisCurrents d2 =
      solve_axis(p.md_inv, psi_d2, Cx(x[fd2_re], x[fd2_im]), Cx(x[d1_2re], x[d1_2im]));
  const AxisCurrents q2 =
      solve_axis(p.mq_inv, psi_q2, Cx(x[q1_2re], x[q1_2im]), Cx(x[q2_2re], x[q2_2im]));
  const Cx rot = std::polar(1.0, x[delta]);
  SeqInjection inj;
  inj.p1 = rot * (q0.i_s - kJ * d0.i_s) / kSqrt2;
  inj.n1 = std::conj(rot) * (q2.i_s + kJ * d2.i_s) / kSqrt2;
  return inj;
}

void sg_init_from_phasor(const SGParams& p, const ExciterParams& exc, Cx v_phasor,
                         Cx s_power, double* x, SGRefs* refs) {
  using namespace sg_idx;
  const Cx i_phasor = std::conj(s_power / v_phasor);

  // Rotor angle from the q-axis internal voltage, then project to d/q.
  const Cx eq = v_phasor + Cx(p.r_a, p.l_q()) * i_phasor;
  const double dm = std::arg(eq);
  const Cx rot = std::polar(1.0, dm);
  const Cx wv = v_phasor * std::conj(rot);  // v_q - j v_d
  const Cx wi = i_phasor * std::conj(rot);
  const double v_d = -wv.imag(), v_q = wv.real();
  const double i_d = -wi.imag(), i_q = wi.real();

  // Steady state: damper currents zero, derivatives zero.
  const double psi_q0 = -(v_d + p.r_a * i_d);
  const double psi_d0 = v_q + p.r_a * i_q;
  const double i_fd = (psi_d0 + p.l_d() * i_d) / p.l_ad;
  if (i_fd <= 0.0) throw DeviceInitInfeasible("sg_init: non-positive field current");

  for (int i = 0; i < count; ++i) x[i] = 0.0;
  const Cx psi_0 = Cx(psi_q0, -psi_d0) / kSqrt2;
  x[psi0_re] = psi_0.real();
  x[psi0_im] = psi_0.imag();
  x[fd0] = p.l_ffd * i_fd - p.l_ad * i_d;
  x[d1_0] = p.l_ad * i_fd - p.l_ad * i_d;
  x[q1_0] = -p.l_aq * i_q;
  x[q2_0] = -p.l_aq * i_q;
  x[delta] = dm;
  x[domega] = 0.0;

  // Exciter held at the field operating point: e_fd state in L_adu*i_fd pu.
  const double efd = p.l_ad * i_fd;
  const double sat = exc.a_ex * std::exp(exc.b_ex * efd) * efd;
  x[exc_efd] = efd;
  x[exc_rf] = efd;
  x[exc_vr] = exc.k_e * efd + sat;
  x[exc_vtr] = std::abs(v_phasor);
  refs->v_ref = std::abs(v_phasor) + x[exc_vr] / exc.k_a;
  refs->t_m = psi_d0 * i_q - psi_q0 * i_d;
}

}  // namespace dpgrid

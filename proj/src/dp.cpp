#include "dpgrid/dp.hpp"

namespace dpgrid {

namespace {
const Cx kAlpha = std::polar(1.0, 2.0 * kPi / 3.0);
const Cx kAlpha2 = std::polar(1.0, -2.0 * kPi / 3.0);  // alpha^2 = conj(alpha)
}  // namespace

SeqTriple abc_to_pnz(Cx xa, Cx xb, Cx xc) {
  // x_pnz = T^H x_abc (T unitary).
  const double s = 1.0 / kSqrt3;
  SeqTriple out;
  out.p = s * (xa + kAlpha * xb + kAlpha2 * xc);
  out.n = s * (xa + kAlpha2 * xb + kAlpha * xc);
  out.z = s * (xa + xb + xc);
  return out;
}

void pnz_to_abc(const SeqTriple& s, Cx& xa, Cx& xb, Cx& xc) {
  const double c = 1.0 / kSqrt3;
  xa = c * (s.p + s.n + s.z);
  xb = c * (kAlpha2 * s.p + kAlpha * s.n + s.z);
  xc = c * (kAlpha * s.p + kAlpha2 * s.n + s.z);
}

double reconstruct_waveform(const DPSet& dp, double t) {
  // k = 0 contributes once; every k > 0 pairs with its mirrored conjugate,
  // i.e. 2*Re(<x>_k e^{j*k*w*t}).
  double x = 0.0;
  for (const auto& [k, c] : dp.coeffs()) {
    if (k == 0) {
      x += c.real();
    } else {
      x += 2.0 * (c * std::polar(1.0, k * dp.base_freq() * t)).real();
    }
  }
  return x;
}

SeqInjection dq_to_pnz_injection(const DqHarmonics& i, const HarmonicRotation& rot) {
  // u = (i_q - j*i_d)/sqrt2 as a complex signal; i_p = e^{j*delta} u e^{j*w*t}.
  const Cx u0 = (i.q0 - kJ * i.d0) / kSqrt2;
  const Cx u2 = (i.q2 - kJ * i.d2) / kSqrt2;
  const Cx ubar0 = (i.q0 + kJ * i.d0) / kSqrt2;        // conj-signal at k=0
  const Cx ubar2 = (i.q2 + kJ * i.d2) / kSqrt2;        // conj-signal at k=+2
  SeqInjection out;
  out.p1 = rot.e0 * u0 + rot.e_m2 * u2;                // <i_p>_{+1}
  out.n1 = rot.inv0() * ubar2 + rot.inv_m2() * ubar0;  // <i_n>_{+1}
  return out;
}

DqHarmonics pnz_to_dq_voltage(Cx vp1, Cx vn1, const HarmonicRotation& rot) {
  // <v_d>_k = (1/(sqrt2 j)) [ sum_m E_{k-1-m} <v_n>_m - sum_m E'_{k+1-m} <v_p>_m ]
  // <v_q>_k = (1/ sqrt2   ) [ sum_m E_{k-1-m} <v_n>_m + sum_m E'_{k+1-m} <v_p>_m ]
  // with <v_n>_{-1} = conj(vp1), <v_p>_{-1} = conj(vn1).
  const Cx vn_m1 = std::conj(vp1);
  const Cx vp_m1 = std::conj(vn1);

  const Cx a0 = rot.e_m2 * vn1 + rot.e0 * vn_m1;      // n-side sum at k=0
  const Cx b0 = rot.inv0() * vp1 + rot.inv_p2() * vp_m1;
  const Cx a2 = rot.e0 * vn1 + rot.e_p2 * vn_m1;      // n-side sum at k=2
  const Cx b2 = rot.inv_p2() * vp1;                   // E'_4 term truncated

  DqHarmonics out;
  out.d0 = (a0 - b0) / (kSqrt2 * kJ);
  out.q0 = (a0 + b0) / kSqrt2;
  out.d2 = (a2 - b2) / (kSqrt2 * kJ);
  out.q2 = (a2 + b2) / kSqrt2;
  return out;
}

}  // namespace dpgrid

#pragma once

// Dynamic-phasor algebra: coefficient storage, the derivative property,
// conjugate-symmetry bookkeeping and the frame transformations
// (abc <-> pnz, DQ0 <-> pnz, dq <-> pnz, waveform reconstruction).
//
// A signal x(tau) on a sliding window of width T = 2*pi/omega_s is represented
// by its Fourier coefficients <x>_k, the k-th dynamic phasor. Only k >= 0 is
// stored; for real signals <x>_{-k} = conj(<x>_k), and for pnz sequence pairs
// <x_p>_{-k} = conj(<x_n>_k), so negative indices are always derived.
//
// Axis convention (fixed once, see dq_to_pnz): for a device frame at angle
// delta, a balanced positive-sequence quantity <x_p>_1 = rho*e^{j*phi} maps to
//   x_d = sqrt(2)*rho*sin(delta - phi),  x_q = sqrt(2)*rho*cos(delta - phi).
// A PLL with positive gains locks at delta = phi + pi/2, i.e. v_q = 0 and
// v_d = sqrt(2)*rho = |v| > 0.

#include <map>

#include "dpgrid/errors.hpp"
#include "dpgrid/types.hpp"

namespace dpgrid {

enum class Frame { AbcPhase, Pnz, SyncDQ0, AsyncDq };

/// Positive/negative/zero sequence values at one harmonic index.
struct SeqTriple {
  Cx p{0.0, 0.0};
  Cx n{0.0, 0.0};
  Cx z{0.0, 0.0};
};

/// DP of a signal's time derivative from the coefficient and its derivative:
/// <dx/dt>_k = d<x>_k/dt + j*k*omega_s*<x>_k.
inline Cx dp_time_shift(int k, Cx value, Cx derivative_of_coeff, double omega_s) {
  return derivative_of_coeff + kJ * (static_cast<double>(k) * omega_s) * value;
}

// ---------------------------------------------------------------------------
// Scalar frame transforms. Index bookkeeping: DQ0/dq coefficients at index k
// pair with <x_p>_{k+1} and <x_n>_{k-1}.
// ---------------------------------------------------------------------------

struct PnzPair {
  Cx p;  // at index k+1
  Cx n;  // at index k-1
};

struct DqPair {
  Cx d;
  Cx q;
};

/// Synchronous-frame coefficients at k -> sequence coefficients.
inline SeqTriple dq0_to_pnz(Cx xD, Cx xQ, Cx x0) {
  SeqTriple out;
  out.p = (xD - kJ * xQ) / kSqrt2;
  out.n = (xD + kJ * xQ) / kSqrt2;
  out.z = x0;
  return out;
}

/// Inverse of dq0_to_pnz (p at k+1, n at k-1 back to D,Q at k).
inline DqPair pnz_to_dq0(Cx xp, Cx xn) {
  DqPair out;
  out.d = (xp + xn) / kSqrt2;               // D component
  out.q = -(xp - xn) / (kSqrt2 * kJ);       // Q component
  return out;
}

/// Device-frame quantities at angle delta from sequence coefficients.
inline DqPair pnz_to_dq(Cx xp_kp1, Cx xn_km1, double delta) {
  const Cx ep = std::polar(1.0, delta);
  DqPair out;
  out.d = (ep * xn_km1 - std::conj(ep) * xp_kp1) / (kSqrt2 * kJ);
  out.q = (ep * xn_km1 + std::conj(ep) * xp_kp1) / kSqrt2;
  return out;
}

/// Inverse of pnz_to_dq; composition is the identity.
inline PnzPair dq_to_pnz(Cx xd, Cx xq, double delta) {
  const Cx ep = std::polar(1.0, delta);
  PnzPair out;
  out.p = std::conj(ep) * (xq - kJ * xd) / kSqrt2;
  out.n = ep * (xq + kJ * xd) / kSqrt2;
  return out;
}

/// Unitary symmetrical-component matrix: x_abc = T * x_pnz with
/// T = (1/sqrt3) [1 1 1; a^2 a 1; a a^2 1], a = e^{j*2*pi/3}.
SeqTriple abc_to_pnz(Cx xa, Cx xb, Cx xc);
void pnz_to_abc(const SeqTriple& s, Cx& xa, Cx& xb, Cx& xc);

// ---------------------------------------------------------------------------
// DPSet: indexed coefficient container tagged with frame and base frequency.
// ---------------------------------------------------------------------------

class DPSet {
 public:
  DPSet() = default;
  DPSet(Frame frame, double base_freq) : frame_(frame), omega_s_(base_freq) {}

  Frame frame() const { return frame_; }
  double base_freq() const { return omega_s_; }

  /// Reads derive k < 0 by conjugate symmetry; absent indices read as zero.
  Cx get(int k) const {
    if (k < 0) return std::conj(get(-k));
    auto it = coeffs_.find(k);
    return it == coeffs_.end() ? Cx{0.0, 0.0} : it->second;
  }

  /// Writes to k < 0 are rejected: symmetry is unviolable by construction.
  void set(int k, Cx v) {
    if (k < 0) throw ConfigError("DPSet: negative harmonic indices are derived, not stored");
    coeffs_[k] = v;
  }

  bool has(int k) const { return coeffs_.count(k < 0 ? -k : k) != 0; }
  const std::map<int, Cx>& coeffs() const { return coeffs_; }

 private:
  Frame frame_ = Frame::Pnz;
  double omega_s_ = kOmega60;
  std::map<int, Cx> coeffs_;
};

/// Truncated Fourier sum of a real signal: sum over stored k (and mirrored
/// negatives) of <x>_k e^{j*k*omega_s*t}; the imaginary residue cancels by
/// conjugate symmetry.
double reconstruct_waveform(const DPSet& dp, double t);

/// Sequence-pair container for a real three-phase signal at the stored
/// indices; enforces <x_p>_{-k} = conj(<x_n>_k).
struct SeqDP {
  DPSet p;
  DPSet n;
  DPSet z;

  Cx p_at(int k) const { return k >= 0 ? p.get(k) : std::conj(n.get(-k)); }
  Cx n_at(int k) const { return k >= 0 ? n.get(k) : std::conj(p.get(-k)); }
  Cx z_at(int k) const { return z.get(k); }
};

// ---------------------------------------------------------------------------
// First-order harmonic rotation <e^{j*delta}> on {0, +2, -2} used at the
// dq <-> pnz interface of PLL-synchronised devices. delta_2 is the k = +2
// coefficient of the (real) angle signal; the k = 0 part enters exactly.
// ---------------------------------------------------------------------------

struct HarmonicRotation {
  Cx e0;    // e^{j*delta_0}
  Cx e_p2;  // <e^{j*delta}>_{+2} = e^{j*delta_0} * j*delta_2
  Cx e_m2;  // <e^{j*delta}>_{-2} = e^{j*delta_0} * j*conj(delta_2)

  static HarmonicRotation from_angle(double delta0, Cx delta2) {
    const Cx e0 = std::polar(1.0, delta0);
    return {e0, e0 * kJ * delta2, e0 * kJ * std::conj(delta2)};
  }

  // Coefficients of e^{-j*delta}: <e^{-j*delta}>_k = conj(<e^{j*delta}>_{-k}).
  Cx inv0() const { return std::conj(e0); }
  Cx inv_p2() const { return std::conj(e_m2); }
  Cx inv_m2() const { return std::conj(e_p2); }
};

/// dq coefficient bundle on the device index set {0, +2} (k=0 real-valued
/// for real signals; stored as complex with zero imaginary part).
struct DqHarmonics {
  Cx d0;
  Cx q0;
  Cx d2;
  Cx q2;
};

/// Sequence coefficients at k = +1 seen by the network.
struct SeqInjection {
  Cx p1;
  Cx n1;
};

/// Device current (d,q at {0,±2}) to network sequence injection at k = ±1,
/// truncating the k = +3 positive-sequence term.
SeqInjection dq_to_pnz_injection(const DqHarmonics& i, const HarmonicRotation& rot);

/// Network voltage at k = ±1 to device-frame coefficients at {0, +2}.
DqHarmonics pnz_to_dq_voltage(Cx vp1, Cx vn1, const HarmonicRotation& rot);

}  // namespace dpgrid

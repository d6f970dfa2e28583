#include "dpgrid/network.hpp"

#include "dpgrid/errors.hpp"

namespace dpgrid {

Eigen::Matrix3cd fault_matrix(const FaultSpec& spec) {
  Eigen::Matrix3d rabc;
  rabc << spec.r_a + spec.r_g, spec.r_g, spec.r_g,
          spec.r_g, spec.r_b + spec.r_g, spec.r_g,
          spec.r_g, spec.r_g, spec.r_c + spec.r_g;

  const Cx a = std::polar(1.0, 2.0 * kPi / 3.0);
  const Cx a2 = std::conj(a);
  Eigen::Matrix3cd t;
  t << Cx(1, 0), Cx(1, 0), Cx(1, 0),
       a2, a, Cx(1, 0),
       a, a2, Cx(1, 0);
  t /= kSqrt3;
  // T is unitary, so T^{-1} = T^H.
  return t.adjoint() * rabc.cast<Cx>() * t;
}

SeqTriple fault_current(const Eigen::Matrix3cd& r_inv, const SeqTriple& v, bool active) {
  SeqTriple out;
  if (!active) return out;
  Eigen::Vector3cd vv(v.p, v.n, v.z);
  Eigen::Vector3cd ii = r_inv * vv;
  out.p = ii(0);
  out.n = ii(1);
  out.z = ii(2);
  return out;
}

SeqTriple dc_load_current(Cx v_p1, double p_dc, double v_min) {
  if (std::abs(v_p1) < v_min)
    throw VoltageCollapse("dc_load: |<v_p>_1| = " + std::to_string(std::abs(v_p1)) +
                          " below guard " + std::to_string(v_min));
  SeqTriple out;
  out.p = p_dc / (2.0 * std::conj(v_p1));
  return out;
}

}  // namespace dpgrid

#include "dpgrid/matrixeq.hpp"

#include <Eigen/Eigenvalues>
#include <complex>

#include "dpgrid/errors.hpp"

namespace dpgrid {

Eigen::MatrixXd lyap_continuous(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const auto n = A.rows();
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) throw EigenFailure("lyap: Schur decomposition failed");
  const Eigen::MatrixXcd U = schur.matrixU();
  const Eigen::MatrixXcd T = schur.matrixT();

  // Transformed equation T Y + Y T^H + F = 0, solved column-wise from the
  // last column (T upper triangular).
  Eigen::MatrixXcd F = U.adjoint() * Q * U;
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -F.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(T(j, k)) * Y.col(k);
    Eigen::MatrixXcd M = T + std::conj(T(j, j)) * Eigen::MatrixXcd::Identity(n, n);
    Y.col(j) = M.triangularView<Eigen::Upper>().solve(rhs);
  }
  Eigen::MatrixXd X = (U * Y * U.adjoint()).real();
  return 0.5 * (X + X.transpose());
}

Eigen::MatrixXd riccati_from_hamiltonian(const Eigen::MatrixXd& H, double jw_eps) {
  const auto n2 = H.rows();
  const auto n = n2 / 2;
  Eigen::EigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) throw EigenFailure("riccati: eigensolver failed");
  const auto& vals = es.eigenvalues();
  const auto& vecs = es.eigenvectors();

  const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
  Eigen::MatrixXcd basis(n2, n);
  Eigen::Index got = 0;
  for (Eigen::Index i = 0; i < n2; ++i) {
    if (std::abs(vals(i).real()) < jw_eps * scale)
      throw AssumptionViolated("riccati: Hamiltonian eigenvalue on the imaginary axis");
    if (vals(i).real() < 0.0) {
      if (got >= n) throw AssumptionViolated("riccati: stable subspace dimension exceeds n");
      basis.col(got++) = vecs.col(i);
    }
  }
  if (got != n) throw AssumptionViolated("riccati: stable subspace dimension deficit");

  const Eigen::MatrixXcd X1 = basis.topRows(n);
  const Eigen::MatrixXcd X2 = basis.bottomRows(n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(X1);
  if (!lu.isInvertible())
    throw AssumptionViolated("riccati: singular X1 block (no stabilizing solution)");
  Eigen::MatrixXd X = (X2 * lu.inverse()).real();
  return 0.5 * (X + X.transpose());
}

}  // namespace dpgrid

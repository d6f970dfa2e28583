#pragma once

// Dense matrix-equation solvers backing model reduction and synthesis:
// continuous Lyapunov via Bartels-Stewart on the complex Schur form, and
// algebraic Riccati via the stable invariant subspace of the Hamiltonian.

#include <Eigen/Dense>

namespace dpgrid {

/// Solves A X + X A^T + Q = 0 for symmetric Q (X symmetric). A must have all
/// eigenvalues in the open left half plane for the result to be a Gramian.
Eigen::MatrixXd lyap_continuous(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Stabilizing solution of the Hamiltonian 2n x 2n matrix H: returns X with
/// X = X2 * X1^{-1} from the n-dimensional stable invariant subspace.
/// Throws AssumptionViolated when eigenvalues sit on the imaginary axis
/// (within eps) or the subspace is degenerate.
Eigen::MatrixXd riccati_from_hamiltonian(const Eigen::MatrixXd& H, double jw_eps = 1e-8);

}  // namespace dpgrid

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dpgrid/errors.hpp"

namespace dpgrid {

/// State-space model with named channels. Invariant: dimensions consistent,
/// entries finite.
struct LinearModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;
  std::vector<std::string> state_names;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;

  int order() const { return static_cast<int>(A.rows()); }
  int num_inputs() const { return static_cast<int>(B.cols()); }
  int num_outputs() const { return static_cast<int>(C.rows()); }

  int input_index(const std::string& name) const;
  int output_index(const std::string& name) const;

  /// Sub-model restricted to the named inputs/outputs (states unchanged).
  LinearModel select(const std::vector<std::string>& inputs,
                     const std::vector<std::string>& outputs) const;

  void check_consistent() const;
};

/// Eigenvalue with oscillation metadata. Complex modes come in conjugate
/// pairs; only the Im >= 0 member carries the pair.
struct Mode {
  std::complex<double> lambda;
  double freq_hz = 0.0;      // |Im lambda| / 2 pi
  double damping = 0.0;      // -Re lambda / |lambda|
  Eigen::VectorXd participation;        // normalized |psi_ki * phi_ik|
  Eigen::VectorXcd right;               // right eigenvector
  Eigen::VectorXcd left;                // left eigenvector (row of V^-1)
};

/// G(j*omega) = C (j*omega I - A)^{-1} B + D.
Eigen::MatrixXcd frequency_response_at(const LinearModel& m, double omega);

/// Largest singular value of G(j*omega).
double sigma_max_at(const LinearModel& m, double omega);

/// Grid-based H-infinity norm estimate: max sigma_max over a log-spaced grid
/// [w_lo, w_hi] with n points, refined once around the peak.
double hinf_norm_grid(const LinearModel& m, double w_lo, double w_hi, int n);

std::vector<double> log_grid(double w_lo, double w_hi, int n);

}  // namespace dpgrid

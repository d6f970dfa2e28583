#include "dpgrid/linear.hpp"

#include <algorithm>
#include <cmath>

namespace dpgrid {

namespace {
int find_name(const std::vector<std::string>& names, const std::string& name,
              const char* what) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw MissingChannel(std::string(what) + " channel not found: " + name);
  return static_cast<int>(it - names.begin());
}
}  // namespace

int LinearModel::input_index(const std::string& name) const {
  return find_name(input_names, name, "input");
}

int LinearModel::output_index(const std::string& name) const {
  return find_name(output_names, name, "output");
}

LinearModel LinearModel::select(const std::vector<std::string>& inputs,
                                const std::vector<std::string>& outputs) const {
  LinearModel out;
  out.A = A;
  out.state_names = state_names;
  out.B.resize(A.rows(), static_cast<Eigen::Index>(inputs.size()));
  out.C.resize(static_cast<Eigen::Index>(outputs.size()), A.rows());
  out.D.resize(static_cast<Eigen::Index>(outputs.size()),
               static_cast<Eigen::Index>(inputs.size()));
  for (size_t j = 0; j < inputs.size(); ++j) out.B.col(j) = B.col(input_index(inputs[j]));
  for (size_t i = 0; i < outputs.size(); ++i) out.C.row(i) = C.row(output_index(outputs[i]));
  for (size_t i = 0; i < outputs.size(); ++i)
    for (size_t j = 0; j < inputs.size(); ++j)
      out.D(i, j) = D(output_index(outputs[i]), input_index(inputs[j]));
  out.input_names = inputs;
  out.output_names = outputs;
  return out;
}

void LinearModel::check_consistent() const {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() ||
      D.cols() != B.cols())
    throw ConfigError("LinearModel: inconsistent matrix dimensions");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
    throw NumericalError("LinearModel: non-finite entries");
}

Eigen::MatrixXcd frequency_response_at(const LinearModel& m, double omega) {
  const auto n = m.order();
  Eigen::MatrixXcd M = -m.A.cast<std::complex<double>>();
  M.diagonal().array() += std::complex<double>(0.0, omega);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  return m.C.cast<std::complex<double>>() * lu.solve(m.B.cast<std::complex<double>>()) +
         m.D.cast<std::complex<double>>();
}

double sigma_max_at(const LinearModel& m, double omega) {
  Eigen::MatrixXcd G = frequency_response_at(m, omega);
  if (G.rows() == 1 && G.cols() == 1) return std::abs(G(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
  return svd.singularValues()(0);
}

std::vector<double> log_grid(double w_lo, double w_hi, int n) {
  std::vector<double> w(static_cast<size_t>(n));
  const double l0 = std::log10(w_lo), l1 = std::log10(w_hi);
  for (int i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] = std::pow(10.0, l0 + (l1 - l0) * i / std::max(1, n - 1));
  return w;
}

double hinf_norm_grid(const LinearModel& m, double w_lo, double w_hi, int n) {
  auto grid = log_grid(w_lo, w_hi, n);
  double best = 0.0, wbest = grid.front();
  for (double w : grid) {
    const double s = sigma_max_at(m, w);
    if (s > best) best = s, wbest = w;
  }
  // One refinement pass around the coarse peak.
  const double lo = wbest / 2.0, hi = wbest * 2.0;
  for (int i = 0; i < 64; ++i) {
    const double w = lo * std::pow(hi / lo, i / 63.0);
    best = std::max(best, sigma_max_at(m, w));
  }
  // Static gain can dominate for lowpass shapes.
  best = std::max(best, sigma_max_at(m, 0.0));
  return best;
}

}  // namespace dpgrid

#pragma once

#include <complex>
#include <vector>

#include "dhlab/liouvillian.hpp"
#include "dhlab/product_state.hpp"
#include "dhlab/time_trace.hpp"

namespace dhlab {

/// Complex exponential component e^{lambda t} c of a signal.
struct Mode {
  std::complex<double> lambda;
  std::complex<double> amplitude;
  double error_metric = 0.0;
};

/// Full eigendecomposition of a dense adjoint Liouvillian, sorted by Re(lambda)
/// descending with ties broken by Im(lambda) ascending.
class Spectrum {
 public:
  int sites() const { return sites_; }
  Eigen::Index size() const { return eigenvalues_.size(); }
  const ComplexVector& eigenvalues() const { return eigenvalues_; }
  /// Columns are right eigenvectors (Pauli coefficients), unit 2-norm.
  const ComplexMatrix& eigenvectors() const { return eigenvectors_; }
  /// Rows are left eigenvectors scaled so that left * right = identity.
  const ComplexMatrix& inverse_eigenvectors() const { return inverse_; }
  const std::vector<double>& average_orders() const { return average_orders_; }
  /// Order k carrying the largest weight in eigenvector n.
  const std::vector<int>& dominant_orders() const { return dominant_orders_; }
  double max_residual() const { return max_residual_; }

  /// Exponential components of Tr(rho_0 O(t)) = sum_n c_n e^{lambda_n t}.
  std::vector<Mode> trace_modes(const PauliString& observable, const ProductState& state) const;

  friend Spectrum eigendecompose(const LiouvillianMatrix& l);

 private:
  int sites_ = 0;
  ComplexVector eigenvalues_;
  ComplexMatrix eigenvectors_;
  ComplexMatrix inverse_;
  std::vector<double> average_orders_;
  std::vector<int> dominant_orders_;
  double max_residual_ = 0.0;
};

/// Non-Hermitian eigendecomposition (LAPACK zgeev). Throws NumericalFault if
/// the solver fails or a residual exceeds 1e-8 * ||L||.
Spectrum eigendecompose(const LiouvillianMatrix& l);

/// sum_x k(x) |v_x|^2 / sum_x |v_x|^2 over canonical indices x.
double average_operator_order(const ComplexVector& v, int sites);

/// Operator order of every canonical index.
const std::vector<int>& orders_of_indices(int sites);

/// Exact Tr(rho_0 O(t)) on the grid, with generator time `unit` per grid
/// step (dense path, via the eigendecomposition).
TimeTrace propagate_observable(const Spectrum& spectrum, const PauliString& observable, const ProductState& state,
                               const TimeGrid& grid, double unit = 1.0);

/// Same trace through the matrix-free generator, stepping with a
/// scaled-and-truncated Taylor expansion of exp(L h) to 1e-13 per step.
TimeTrace propagate_observable(const AdjointOperator& op, const PauliString& observable, const ProductState& state,
                               const TimeGrid& grid, double unit = 1.0);

}  // namespace dhlab

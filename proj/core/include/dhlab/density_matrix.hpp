#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dhlab/circuit.hpp"
#include "dhlab/pauli.hpp"
#include "dhlab/product_state.hpp"

namespace dhlab {

/// l-qubit density matrix; basis index bit (l - 1 - i) is qubit i, so qubit 0
/// is the most significant, matching dense_matrix(PauliString).
class DensityMatrix {
 public:
  /// |0...0><0...0|
  explicit DensityMatrix(int sites);
  /// Validates Hermiticity, unit trace and positivity.
  DensityMatrix(int sites, Eigen::MatrixXcd rho);
  static DensityMatrix maximally_mixed(int sites);

  int sites() const { return sites_; }
  Eigen::Index dim() const { return rho_.rows(); }
  const Eigen::MatrixXcd& matrix() const { return rho_; }

  double trace_deviation() const;
  double hermiticity_error() const;
  double min_eigenvalue() const;
  /// Throws NumericalFault when ||rho - rho^dagger|| > 1e-10, |Tr rho - 1| >
  /// 1e-10 or the smallest eigenvalue is below -1e-8.
  void validate() const;

  /// rho -> A rho A^dagger with A acting on `qubits` (2x2 or 4x4, first qubit
  /// most significant). A need not be unitary.
  void conjugate(const Eigen::MatrixXcd& a, const std::vector<int>& qubits);
  void apply_unitary(const Gate& g);

  friend class NoiseChannel;

 private:
  int sites_ = 0;
  Eigen::MatrixXcd rho_;
};

/// CPTP map on one or two qubits given by Kraus operators. Depolarizing
/// channels are applied through the closed form
/// rho -> (1 - p) rho + p (I/d) (x) Tr_q rho.
class NoiseChannel {
 public:
  enum class Kind { Depolarizing, AmplitudeDamping, Kraus };

  static NoiseChannel depolarizing(int arity, double p);
  static NoiseChannel amplitude_damping(double gamma);
  /// Throws InvalidArgument unless sum K^dagger K = I within 1e-10.
  static NoiseChannel kraus(std::vector<Eigen::MatrixXcd> ops);

  Kind kind() const { return kind_; }
  int arity() const { return arity_; }
  double strength() const { return strength_; }
  const std::vector<Eigen::MatrixXcd>& kraus_operators() const { return kraus_; }
  /// max |(sum K^dagger K - I)_ij|
  double completeness_error() const;

  void apply(DensityMatrix& rho, const std::vector<int>& qubits) const;

 private:
  Kind kind_ = Kind::Kraus;
  int arity_ = 1;
  double strength_ = 0.0;
  std::vector<Eigen::MatrixXcd> kraus_;
};

/// Per-gate noise: depolarizing p1 after one-qubit gates, two-qubit
/// depolarizing p2 after CNOTs, and optional amplitude damping on every
/// touched qubit. `seed` seeds the random circuit instances the noise is
/// attached to. Text form: "p1=0.01 p2=0.02 damping=0 seed=7".
struct NoiseModel {
  double p1 = 0.0;
  double p2 = 0.0;
  double damping = 0.0;
  std::uint64_t seed = 0;

  bool noiseless() const { return p1 == 0 && p2 == 0 && damping == 0; }
  static NoiseModel parse(std::string_view text);
  std::string str() const;
  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

/// rho -> sum_i K_i U rho U^dagger K_i^dagger on the gate's qubits.
void apply_gate(DensityMatrix& rho, const Gate& g, const NoiseChannel* noise = nullptr);

/// Executes every gate of `c` in order with the noise of `model`; with
/// `validate` the CPTP invariants are checked after each gate.
void run_circuit(DensityMatrix& rho, const Circuit& c, const NoiseModel& model, bool validate = false);

/// Gates taking |0...0> to the product state (X, then H, then S as needed).
std::vector<Gate> preparation_gates(const ProductState& state);
DensityMatrix prepare_product_state(const ProductState& state);

/// Tr(rho sigma_s) for the unnormalized string s.
double expectation(const DensityMatrix& rho, const PauliString& s);

/// Estimates Tr(rho sigma_s) for strings sharing one per-site measurement
/// basis by rotating each measured site to Z (H for X, S^dagger then H for
/// Y) and sampling `shots` outcomes of the diagonal. shots == 0 returns exact
/// values. Results follow the order of `strings`.
std::vector<double> sample_shots(const DensityMatrix& rho, const std::vector<PauliString>& strings, int shots,
                                 std::uint64_t seed);

}  // namespace dhlab

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dhlab/pauli.hpp"
#include "dhlab/topology.hpp"

namespace dhlab {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Ordered dissipation channels L_n. The first 3l entries are always the
/// one-body strings; two-body sets append 9 strings per topology edge.
class LindbladSet {
 public:
  int sites() const { return sites_; }
  int size() const { return static_cast<int>(ops_.size()); }
  int one_body_count() const { return 3 * sites_; }
  const std::vector<PauliString>& operators() const { return ops_; }
  const PauliString& operator[](int n) const { return ops_[static_cast<std::size_t>(n)]; }
  const std::optional<Topology>& topology() const { return topology_; }
  int body_order() const { return topology_ ? 2 : 1; }
  std::string label() const;

  friend LindbladSet build_one_body_set(int sites);
  friend LindbladSet build_two_body_set(const Topology& topo);

 private:
  int sites_ = 0;
  std::vector<PauliString> ops_;
  std::optional<Topology> topology_;
};

LindbladSet build_one_body_set(int sites);
LindbladSet build_two_body_set(const Topology& topo);

/// Distribution of the nonnegative eigenvalues d_i of K before the trace
/// rescale. Text forms: "uniform", "uniform:lo:hi", "exponential",
/// "constant" (K = dI exactly).
struct SpectrumSpec {
  enum class Kind { Uniform, Exponential, Constant };
  Kind kind = Kind::Uniform;
  double lo = 0.0;
  double hi = 1.0;

  static SpectrumSpec parse(std::string_view text);
  std::string str() const;
};

/// Hermitian positive-semidefinite channel coupling, normalized to Tr K = 2^l.
class KossakowskiMatrix {
 public:
  KossakowskiMatrix() = default;
  /// Validates Hermiticity and positivity; does not rescale.
  explicit KossakowskiMatrix(ComplexMatrix entries);

  /// d * identity with d = 2^l / count.
  static KossakowskiMatrix scaled_identity(int count, int sites);

  int size() const { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& entries() const { return entries_; }
  std::complex<double> operator()(int n, int m) const { return entries_(n, m); }
  double trace() const { return entries_.trace().real(); }

 private:
  ComplexMatrix entries_;
};

/// Haar (CUE) unitary: QR of a complex Ginibre matrix with the phases of
/// diag(R) absorbed into Q.
ComplexMatrix haar_unitary(int dim, std::uint64_t seed);

KossakowskiMatrix sample_kossakowski(int count, int sites, std::uint64_t seed,
                                     const SpectrumSpec& spectrum = {});

/// Mean diagonal weight on one-body channels (d1) and on two-body channels
/// (d2; equals d1 for one-body sets).
struct ChannelWeights {
  double one_body = 0.0;
  double two_body = 0.0;
};
ChannelWeights mean_channel_weights(const LindbladSet& set, const KossakowskiMatrix& k);

inline constexpr int kMaxDenseSites = 6;

/// Dense adjoint generator in the normalized Pauli basis:
/// entry (y, x) = Tr(S_y^dagger L^dagger[S_x]), indices in canonical order.
class LiouvillianMatrix {
 public:
  LiouvillianMatrix() = default;
  LiouvillianMatrix(int sites, ComplexMatrix entries);

  int sites() const { return sites_; }
  Eigen::Index dim() const { return entries_.rows(); }
  const ComplexMatrix& entries() const { return entries_; }
  std::complex<double> operator()(Eigen::Index row, Eigen::Index col) const { return entries_(row, col); }

 private:
  int sites_ = 0;
  ComplexMatrix entries_;
};

LiouvillianMatrix build_adjoint_superoperator(const LindbladSet& set, const KossakowskiMatrix& k);

/// Matrix-free action of the same generator on a Pauli-coefficient vector.
/// Precomputes the nonzero channel pairs once; usable for l up to kMaxSites.
class AdjointOperator {
 public:
  AdjointOperator(const LindbladSet& set, const KossakowskiMatrix& k);

  int sites() const { return sites_; }
  std::size_t dim() const { return std::size_t{1} << (2 * sites_); }
  ComplexVector apply(const ComplexVector& coeffs) const;
  /// Upper bound on the induced 1-norm, used for step-size control.
  double norm_bound() const { return norm_bound_; }

  /// Calls visit(row, col, value) for every contribution to column `col`.
  template <typename Visit>
  void for_each_in_column(std::uint32_t col, Visit&& visit) const;

 private:
  struct PairTerm {
    std::uint32_t x;  // symplectic bits of L_m L_n
    std::uint32_t z;
    std::uint16_t m;
    std::uint16_t n;
    std::complex<double> coeff;  // K_nm * i^{phase(L_m L_n)}
  };

  int sites_ = 0;
  std::vector<std::uint32_t> op_x_;
  std::vector<std::uint32_t> op_z_;
  std::vector<PairTerm> terms_;
  std::vector<std::uint32_t> index_of_bits_;  // (x << l | z) -> canonical index
  std::vector<std::uint32_t> x_of_index_;
  std::vector<std::uint32_t> z_of_index_;
  double norm_bound_ = 0.0;
};

ComplexVector apply_adjoint(const LindbladSet& set, const KossakowskiMatrix& k, const ComplexVector& coeffs);

template <typename Visit>
void AdjointOperator::for_each_in_column(std::uint32_t col, Visit&& visit) const {
  const std::uint32_t sx = x_of_index_[col];
  const std::uint32_t sz = z_of_index_[col];
  // For Pauli channels, L_m S L_n - {L_m L_n, S}/2 = w * (L_m L_n S) with
  // w = s_n - 1/2 - s_m s_n / 2, where s_j = +1 (-1) if S commutes
  // (anticommutes) with L_j.
  std::uint64_t anti = 0;
  for (std::size_t j = 0; j < op_x_.size(); ++j) {
    if (anticommute_bits(op_x_[j], op_z_[j], sx, sz)) anti |= std::uint64_t{1} << (j & 63);
  }
  const bool small = op_x_.size() <= 64;
  constexpr std::complex<double> kPowers[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (const auto& t : terms_) {
    const bool am = small ? ((anti >> t.m) & 1u) : anticommute_bits(op_x_[t.m], op_z_[t.m], sx, sz);
    const bool an = small ? ((anti >> t.n) & 1u) : anticommute_bits(op_x_[t.n], op_z_[t.n], sx, sz);
    if (!am && !an) continue;
    double w;
    if (am && an) {
      w = -2.0;
    } else if (an) {
      w = -1.0;
    } else {
      w = 1.0;
    }
    const int phase = product_phase_power(t.x, t.z, sx, sz);
    const std::uint32_t row = index_of_bits_[((t.x ^ sx) << sites_) | (t.z ^ sz)];
    visit(row, col, w * t.coeff * kPowers[phase]);
  }
}

}  // namespace dhlab

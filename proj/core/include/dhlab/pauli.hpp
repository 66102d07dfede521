#pragma once

#include <complex>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dhlab {

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline constexpr int kMaxSites = 8;

char to_char(Pauli p);

/// Tensor product of single-qubit Paulis on up to kMaxSites sites, stored in
/// symplectic form: bit i of x_bits/z_bits describes site i (0-based), with
/// X = (1,0), Y = (1,1), Z = (0,1).
///
/// Canonical index: base-4 number with site 0 as the most significant digit
/// and digit order I<X<Y<Z, so "IIX" < "IIY" < "IXI".
class PauliString {
 public:
  PauliString() = default;
  /// Identity string on `sites` sites.
  explicit PauliString(int sites);

  static PauliString parse(std::string_view text);
  static PauliString from_index(int sites, std::uint32_t index);
  static PauliString from_bits(int sites, std::uint32_t x_bits, std::uint32_t z_bits);

  int size() const { return sites_; }
  std::uint32_t x_bits() const { return x_; }
  std::uint32_t z_bits() const { return z_; }

  Pauli at(int site) const;
  void set(int site, Pauli p);

  std::uint32_t index() const;
  int order() const;
  bool is_identity() const { return (x_ | z_) == 0; }
  std::uint32_t support() const { return x_ | z_; }

  std::string str() const;

  friend bool operator==(const PauliString&, const PauliString&) = default;
  friend auto operator<=>(const PauliString& a, const PauliString& b) {
    if (auto c = a.sites_ <=> b.sites_; c != 0) return c;
    return a.index() <=> b.index();
  }

 private:
  int sites_ = 0;
  std::uint32_t x_ = 0;
  std::uint32_t z_ = 0;
};

/// a·b = i^phase_power · product
struct PauliProduct {
  int phase_power = 0;  // in {0,1,2,3}
  PauliString product;

  std::complex<double> phase() const;
};

bool commutes(const PauliString& a, const PauliString& b);
PauliProduct multiply(const PauliString& a, const PauliString& b);

/// Phase exponent (power of i) of the symplectic product, for raw bit words.
/// Shared by the superoperator kernels, which never materialize PauliString.
inline int product_phase_power(std::uint32_t x1, std::uint32_t z1, std::uint32_t x2,
                               std::uint32_t z2) {
  const std::uint32_t x3 = x1 ^ x2;
  const std::uint32_t z3 = z1 ^ z2;
  const int p = __builtin_popcount(x1 & z1) + __builtin_popcount(x2 & z2) +
                2 * __builtin_popcount(z1 & x2) - __builtin_popcount(x3 & z3);
  return ((p % 4) + 4) % 4;
}

inline bool anticommute_bits(std::uint32_t x1, std::uint32_t z1, std::uint32_t x2,
                             std::uint32_t z2) {
  return (__builtin_popcount((x1 & z2) ^ (z1 & x2)) & 1) != 0;
}

/// All strings (or all strings of order exactly k) in canonical index order.
std::vector<PauliString> enumerate_strings(int sites, std::optional<int> order = std::nullopt);

/// Dense 2^l x 2^l matrix of the unnormalized string, row-major. Site 0 is
/// the most significant qubit of the computational-basis index. Oracle use only.
std::vector<std::complex<double>> dense_matrix(const PauliString& s);

/// Number of strings of order k on `sites` sites: C(l,k) 3^k.
std::uint64_t count_of_order(int sites, int order);

}  // namespace dhlab

#include "dhlab/pauli.hpp"

#include <fmt/format.h>

#include "dhlab/error.hpp"

namespace dhlab {

namespace {

void check_sites(int sites) {
  if (sites < 1 || sites > kMaxSites) {
    throw InvalidArgument(fmt::format("number of sites must be in [1, {}], got {}", kMaxSites, sites));
  }
}

constexpr std::uint32_t x_of(Pauli p) { return (p == Pauli::X || p == Pauli::Y) ? 1u : 0u; }
constexpr std::uint32_t z_of(Pauli p) { return (p == Pauli::Z || p == Pauli::Y) ? 1u : 0u; }

}  // namespace

char to_char(Pauli p) {
  constexpr char kChars[] = {'I', 'X', 'Y', 'Z'};
  return kChars[static_cast<int>(p)];
}

PauliString::PauliString(int sites) : sites_(sites) { check_sites(sites); }

PauliString PauliString::parse(std::string_view text) {
  PauliString s(static_cast<int>(text.size()));
  for (int i = 0; i < s.sites_; ++i) {
    switch (text[i]) {
      case 'I': case 'i': break;
      case 'X': case 'x': s.set(i, Pauli::X); break;
      case 'Y': case 'y': s.set(i, Pauli::Y); break;
      case 'Z': case 'z': s.set(i, Pauli::Z); break;
      default:
        throw InvalidArgument(fmt::format("invalid Pauli symbol '{}' in \"{}\"", text[i], text));
    }
  }
  return s;
}

PauliString PauliString::from_index(int sites, std::uint32_t index) {
  PauliString s(sites);
  if (index >= (1u << (2 * sites))) {
    throw InvalidArgument(fmt::format("index {} out of range for {} sites", index, sites));
  }
  for (int i = sites - 1; i >= 0; --i) {
    s.set(i, static_cast<Pauli>(index & 3u));
    index >>= 2;
  }
  return s;
}

PauliString PauliString::from_bits(int sites, std::uint32_t x_bits, std::uint32_t z_bits) {
  PauliString s(sites);
  const std::uint32_t mask = (1u << sites) - 1u;
  if ((x_bits | z_bits) & ~mask) {
    throw InvalidArgument("symplectic bits exceed string length");
  }
  s.x_ = x_bits;
  s.z_ = z_bits;
  return s;
}

Pauli PauliString::at(int site) const {
  const std::uint32_t x = (x_ >> site) & 1u;
  const std::uint32_t z = (z_ >> site) & 1u;
  if (x && z) return Pauli::Y;
  if (x) return Pauli::X;
  if (z) return Pauli::Z;
  return Pauli::I;
}

void PauliString::set(int site, Pauli p) {
  if (site < 0 || site >= sites_) {
    throw InvalidArgument(fmt::format("site {} out of range for length {}", site, sites_));
  }
  const std::uint32_t bit = 1u << site;
  x_ = (x_ & ~bit) | (x_of(p) ? bit : 0u);
  z_ = (z_ & ~bit) | (z_of(p) ? bit : 0u);
}

std::uint32_t PauliString::index() const {
  std::uint32_t idx = 0;
  for (int i = 0; i < sites_; ++i) {
    idx = (idx << 2) | static_cast<std::uint32_t>(at(i));
  }
  return idx;
}

int PauliString::order() const { return __builtin_popcount(x_ | z_); }

std::string PauliString::str() const {
  std::string out(static_cast<std::size_t>(sites_), 'I');
  for (int i = 0; i < sites_; ++i) out[i] = to_char(at(i));
  return out;
}

std::complex<double> PauliProduct::phase() const {
  constexpr std::complex<double> kPowers[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return kPowers[phase_power & 3];
}

bool commutes(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument(fmt::format("length mismatch: {} vs {}", a.size(), b.size()));
  }
  return !anticommute_bits(a.x_bits(), a.z_bits(), b.x_bits(), b.z_bits());
}

PauliProduct multiply(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument(fmt::format("length mismatch: {} vs {}", a.size(), b.size()));
  }
  PauliProduct out;
  out.phase_power = product_phase_power(a.x_bits(), a.z_bits(), b.x_bits(), b.z_bits());
  out.product = PauliString::from_bits(a.size(), a.x_bits() ^ b.x_bits(), a.z_bits() ^ b.z_bits());
  return out;
}

std::uint64_t count_of_order(int sites, int order) {
  if (order < 0 || order > sites) return 0;
  std::uint64_t binom = 1;
  for (int i = 0; i < order; ++i) binom = binom * static_cast<std::uint64_t>(sites - i) / static_cast<std::uint64_t>(i + 1);
  std::uint64_t pow3 = 1;
  for (int i = 0; i < order; ++i) pow3 *= 3;
  return binom * pow3;
}

std::vector<PauliString> enumerate_strings(int sites, std::optional<int> order) {
  check_sites(sites);
  if (order && (*order < 0 || *order > sites)) {
    throw InvalidArgument(fmt::format("order {} out of range [0, {}]", *order, sites));
  }
  const std::uint32_t total = 1u << (2 * sites);
  std::vector<PauliString> out;
  out.reserve(order ? count_of_order(sites, *order) : total);
  for (std::uint32_t idx = 0; idx < total; ++idx) {
    auto s = PauliString::from_index(sites, idx);
    if (!order || s.order() == *order) out.push_back(s);
  }
  return out;
}

std::vector<std::complex<double>> dense_matrix(const PauliString& s) {
  using C = std::complex<double>;
  const int n = s.size();
  const std::size_t dim = std::size_t{1} << n;
  std::vector<C> m(dim * dim, C{0, 0});
  // sigma_x maps |b> -> |b ^ x>; sigma_z contributes (-1)^{b.z}; Y = i X Z.
  std::uint32_t xmask = 0;
  std::uint32_t zmask = 0;
  for (int site = 0; site < n; ++site) {
    const std::uint32_t qubit_bit = 1u << (n - 1 - site);
    if ((s.x_bits() >> site) & 1u) xmask |= qubit_bit;
    if ((s.z_bits() >> site) & 1u) zmask |= qubit_bit;
  }
  const int ny = __builtin_popcount(s.x_bits() & s.z_bits());
  const C yphase = PauliProduct{ny % 4, {}}.phase();
  for (std::uint32_t col = 0; col < dim; ++col) {
    const std::uint32_t row = col ^ xmask;
    const double sign = (__builtin_popcount(col & zmask) & 1) ? -1.0 : 1.0;
    m[row * dim + col] = yphase * sign;
  }
  return m;
}

}  // namespace dhlab

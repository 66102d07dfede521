#include "dhlab/product_state.hpp"

#include <fmt/format.h>

#include "dhlab/error.hpp"

namespace dhlab {

ProductState ProductState::all_zero(int n) {
  ProductState s;
  s.sites.resize(static_cast<std::size_t>(n));
  return s;
}

ProductState ProductState::parse(std::string_view text) {
  if (text.empty() || text.size() % 2 != 0) {
    throw InvalidArgument(fmt::format("state spec '{}' must be pairs like x0y1z0", text));
  }
  ProductState s;
  for (std::size_t i = 0; i < text.size(); i += 2) {
    Site site;
    switch (text[i]) {
      case 'x': case 'X': site.basis = Basis::X; break;
      case 'y': case 'Y': site.basis = Basis::Y; break;
      case 'z': case 'Z': site.basis = Basis::Z; break;
      default: throw InvalidArgument(fmt::format("invalid basis '{}' in state spec '{}'", text[i], text));
    }
    if (text[i + 1] != '0' && text[i + 1] != '1') {
      throw InvalidArgument(fmt::format("invalid quantum number '{}' in state spec '{}'", text[i + 1], text));
    }
    site.bit = text[i + 1] - '0';
    s.sites.push_back(site);
  }
  if (s.size() > kMaxSites) throw InvalidArgument("state spec longer than the supported number of sites");
  return s;
}

std::string ProductState::str() const {
  std::string out;
  for (const auto& site : sites) {
    out += "xyz"[static_cast<int>(site.basis)];
    out += static_cast<char>('0' + site.bit);
  }
  return out;
}

Pauli pauli_of(Basis b) {
  switch (b) {
    case Basis::X: return Pauli::X;
    case Basis::Y: return Pauli::Y;
    case Basis::Z: return Pauli::Z;
  }
  return Pauli::Z;
}

double expectation(const ProductState& state, const PauliString& s) {
  if (state.size() != s.size()) {
    throw InvalidArgument(fmt::format("state has {} sites, string has {}", state.size(), s.size()));
  }
  double value = 1.0;
  for (int i = 0; i < s.size(); ++i) {
    const Pauli p = s.at(i);
    if (p == Pauli::I) continue;
    const auto& site = state.sites[static_cast<std::size_t>(i)];
    if (p != pauli_of(site.basis)) return 0.0;
    if (site.bit) value = -value;
  }
  return value;
}

std::vector<double> pauli_coefficients(const ProductState& state) {
  const int n = state.size();
  const std::size_t total = std::size_t{1} << (2 * n);
  std::vector<double> out(total, 0.0);
  // Only strings built from I and each site's own basis Pauli survive.
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::uint32_t idx = 0;
    double value = 1.0;
    for (int i = 0; i < n; ++i) {
      idx <<= 2;
      if ((mask >> i) & 1u) {
        const auto& site = state.sites[static_cast<std::size_t>(i)];
        idx |= static_cast<std::uint32_t>(pauli_of(site.basis));
        if (site.bit) value = -value;
      }
    }
    out[idx] = value;
  }
  return out;
}

}  // namespace dhlab

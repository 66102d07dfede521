#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dhlab/pauli.hpp"

namespace dhlab {

enum class Basis : std::uint8_t { X, Y, Z };

/// Product state |sigma_1^{gamma_1} ... sigma_l^{gamma_l}>: each site is the
/// eigenstate of the Pauli `basis` with eigenvalue (-1)^{bit}.
/// Text form: one "<basis><bit>" pair per site, e.g. "x0y1z0".
struct ProductState {
  struct Site {
    Basis basis = Basis::Z;
    int bit = 0;
    friend bool operator==(const Site&, const Site&) = default;
  };
  std::vector<Site> sites;

  int size() const { return static_cast<int>(sites.size()); }
  static ProductState all_zero(int n);
  static ProductState parse(std::string_view text);
  std::string str() const;

  friend bool operator==(const ProductState&, const ProductState&) = default;
};

Pauli pauli_of(Basis b);

/// Tr(rho_0 sigma_s) for the unnormalized string s; factorizes over sites.
double expectation(const ProductState& state, const PauliString& s);

/// Tr(rho_0 sigma_y) for every canonical index y.
std::vector<double> pauli_coefficients(const ProductState& state);

}  // namespace dhlab

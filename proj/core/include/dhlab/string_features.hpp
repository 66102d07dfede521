#pragma once

#include <compare>

#include "dhlab/pauli.hpp"
#include "dhlab/topology.hpp"

namespace dhlab {

/// (k, p, e): operator order, number of topology edges with non-identities on
/// both endpoints, and number of non-identities on boundary sites.
struct StringFeatures {
  int order = 0;
  int adjacent_pairs = 0;
  int edge_nonidentities = 0;

  friend auto operator<=>(const StringFeatures&, const StringFeatures&) = default;
};

StringFeatures classify_string(const PauliString& s, const Topology& topo);

}  // namespace dhlab

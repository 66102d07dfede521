#include "dhlab/string_features.hpp"

#include <fmt/format.h>

#include "dhlab/error.hpp"

namespace dhlab {

StringFeatures classify_string(const PauliString& s, const Topology& topo) {
  if (s.size() != topo.sites()) {
    throw InvalidArgument(fmt::format("string of length {} on topology with {} sites", s.size(), topo.sites()));
  }
  const std::uint32_t support = s.support();
  StringFeatures f;
  f.order = s.order();
  for (auto [a, b] : topo.edges()) {
    if (((support >> a) & 1u) && ((support >> b) & 1u)) ++f.adjacent_pairs;
  }
  f.edge_nonidentities = __builtin_popcount(support & topo.edge_site_mask());
  return f;
}

}  // namespace dhlab

#include "dhlab/perturbation.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dhlab/error.hpp"

namespace dhlab {

namespace {

void check_params(const HierarchyParams& p) {
  if (p.sites < 2) throw InvalidArgument("hierarchy needs at least 2 sites");
  if (p.alpha < 0 || p.beta < 0) throw InvalidArgument("alpha and beta must be nonnegative");
  if (p.alpha == 0 && p.beta == 0) throw InvalidArgument("alpha and beta cannot both be zero");
}

// Exact -diagonal/2 weighted by channel class, for any topology.
double weighted_anticommutations(const PauliString& s, const Topology* topo, double d1, double d2) {
  const int k = s.order();
  double total = d1 * 2.0 * k;
  if (topo) {
    const std::uint32_t sup = s.support();
    int single = 0;
    int both = 0;
    for (auto [a, b] : topo->edges()) {
      const int hits = static_cast<int>((sup >> a) & 1u) + static_cast<int>((sup >> b) & 1u);
      if (hits == 1) ++single;
      if (hits == 2) ++both;
    }
    total += d2 * (6.0 * single + 4.0 * both);
  }
  return total;
}

}  // namespace

int count_anticommuting(const PauliString& s, const LindbladSet& set) {
  if (s.size() != set.sites()) {
    throw InvalidArgument(fmt::format("string of length {} vs channel set on {} sites", s.size(), set.sites()));
  }
  int count = 0;
  for (const auto& op : set.operators()) {
    if (!commutes(s, op)) ++count;
  }
  return count;
}

double diagonal_element(const PauliString& s, const LindbladSet& set, double d) {
  return -2.0 * d * count_anticommuting(s, set);
}

double diagonal_element(const PauliString& s, const LindbladSet& set, const KossakowskiMatrix& k) {
  if (k.size() != set.size()) throw InvalidArgument("Kossakowski dimension does not match channel count");
  if (s.size() != set.sites()) throw InvalidArgument("string length does not match channel set");
  double acc = 0.0;
  for (int n = 0; n < set.size(); ++n) {
    if (!commutes(s, set[n])) acc += k(n, n).real();
  }
  return -2.0 * acc;
}

double predicted_rate(int k, const HierarchyParams& params) {
  check_params(params);
  const int l = params.sites;
  if (k < 0 || k > l) throw InvalidArgument(fmt::format("order {} out of range [0, {}]", k, l));
  const double two_body = params.alpha / (9.0 * (l - 1)) * (3.0 * l * k - 2.0 * k * k - k);
  const double one_body = params.beta / (3.0 * l) * k;
  return two_body + one_body;
}

double turnback_k(const HierarchyParams& params) {
  check_params(params);
  if (params.alpha == 0.0) throw InvalidArgument("alpha = 0: rates grow monotonically in k, no turnback");
  const double l = params.sites;
  return (3.0 * (l - 1) * params.beta + l * (3.0 * l - 1) * params.alpha) / (4.0 * l * params.alpha);
}

HierarchyParams hierarchy_from_weights(const LindbladSet& set, double d1, double d2) {
  HierarchyParams p;
  p.sites = set.sites();
  p.beta = 12.0 * p.sites * d1;
  if (set.topology()) {
    const double edges = static_cast<double>(set.topology()->edges().size());
    p.alpha = 72.0 * edges * d2 / p.sites;
  }
  return p;
}

double subcluster_center(const StringFeatures& f, const Topology& topo, double d1, double d2) {
  if (!topo.chain_like()) throw InvalidArgument(fmt::format("topology {} has no chain-like boundary", topo.str()));
  const int k = f.order;
  const int p = f.adjacent_pairs;
  const int e = f.edge_nonidentities;
  const int edge_count = static_cast<int>(topo.edge_sites().size());
  if (k < 0 || k > topo.sites() || p < 0 || e < 0 || e > std::min(k, edge_count) ||
      p > std::min(static_cast<int>(topo.edges().size()), std::max(k - 1, 0)) || 2 * k - e - 2 * p < 0) {
    throw InvalidArgument(fmt::format("features (k={}, p={}, e={}) inconsistent with {}", k, p, e, topo.str()));
  }
  return -2.0 * (d1 * 2.0 * k + d2 * (6.0 * (2 * k - e - 2 * p) + 4.0 * p));
}

std::map<StringFeatures, ClusterEntry> cluster_table(const Topology& topo, double d1, double d2) {
  std::map<StringFeatures, ClusterEntry> table;
  std::map<StringFeatures, double> sums;
  for (const auto& s : enumerate_strings(topo.sites())) {
    const auto f = classify_string(s, topo);
    auto& e = table[f];
    ++e.count;
    sums[f] += -2.0 * weighted_anticommutations(s, &topo, d1, d2);
  }
  for (auto& [f, e] : table) e.center = sums[f] / e.count;
  return table;
}

std::map<StringFeatures, ClusterEntry> cluster_table(const Topology& topo) {
  const int count = 3 * topo.sites() + 9 * static_cast<int>(topo.edges().size());
  const double d = std::ldexp(1.0, topo.sites()) / count;
  return cluster_table(topo, d, d);
}

}  // namespace dhlab

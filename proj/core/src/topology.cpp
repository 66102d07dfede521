#include "dhlab/topology.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <set>

#include <fmt/format.h>

#include "dhlab/error.hpp"
#include "dhlab/pauli.hpp"

namespace dhlab {

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw InvalidArgument(fmt::format("invalid {} '{}' in topology string", what, text));
  }
  return value;
}

void check_size(int sites) {
  if (sites < 2) throw InvalidArgument(fmt::format("topology needs at least 2 sites, got {}", sites));
  if (sites > kMaxSites) throw InvalidArgument(fmt::format("topology supports at most {} sites", kMaxSites));
}

}  // namespace

Topology::Topology(int sites, Kind kind, std::vector<Edge> edges)
    : sites_(sites), kind_(kind), edges_(std::move(edges)), degree_(static_cast<std::size_t>(sites), 0) {
  std::sort(edges_.begin(), edges_.end());
  for (auto [a, b] : edges_) {
    ++degree_[a];
    ++degree_[b];
  }
  if (kind_ == Kind::Chain) {
    edge_sites_ = {0, sites_ - 1};
  } else if (kind_ == Kind::Custom) {
    const auto [lo, hi] = std::minmax_element(degree_.begin(), degree_.end());
    if (*lo != *hi) {
      for (int i = 0; i < sites_; ++i) {
        if (degree_[i] == *lo) edge_sites_.push_back(i);
      }
    }
  }
  for (int s : edge_sites_) edge_mask_ |= 1u << s;
}

Topology Topology::chain(int sites) {
  check_size(sites);
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < sites; ++i) edges.emplace_back(i, i + 1);
  return Topology(sites, Kind::Chain, std::move(edges));
}

Topology Topology::complete(int sites) {
  check_size(sites);
  std::vector<Edge> edges;
  for (int i = 0; i < sites; ++i) {
    for (int j = i + 1; j < sites; ++j) edges.emplace_back(i, j);
  }
  return Topology(sites, Kind::Complete, std::move(edges));
}

Topology Topology::custom(int sites, std::vector<Edge> one_based_edges) {
  if (sites < 1 || sites > kMaxSites) {
    throw InvalidArgument(fmt::format("topology sites must be in [1, {}], got {}", kMaxSites, sites));
  }
  std::set<Edge> seen;
  std::vector<Edge> edges;
  for (auto [a, b] : one_based_edges) {
    if (a < 1 || a > sites || b < 1 || b > sites) {
      throw InvalidArgument(fmt::format("edge {}-{} out of range for {} sites", a, b, sites));
    }
    if (a == b) throw InvalidArgument(fmt::format("self-loop {}-{} not allowed", a, b));
    Edge e{std::min(a, b) - 1, std::max(a, b) - 1};
    if (!seen.insert(e).second) throw InvalidArgument(fmt::format("duplicate edge {}-{}", a, b));
    edges.push_back(e);
  }
  return Topology(sites, Kind::Custom, std::move(edges));
}

Topology Topology::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument(fmt::format("topology '{}' must look like chain:N, complete:N or custom:N:a-b,...", text));
  }
  const auto kind = text.substr(0, colon);
  auto rest = text.substr(colon + 1);
  if (kind == "chain") return chain(parse_int(rest, "size"));
  if (kind == "complete") return complete(parse_int(rest, "size"));
  if (kind != "custom") throw InvalidArgument(fmt::format("unknown topology kind '{}'", kind));

  const auto colon2 = rest.find(':');
  const int sites = parse_int(rest.substr(0, colon2), "size");
  std::vector<Edge> edges;
  if (colon2 != std::string_view::npos) {
    auto list = rest.substr(colon2 + 1);
    while (!list.empty()) {
      const auto comma = list.find(',');
      const auto item = list.substr(0, comma);
      const auto dash = item.find('-');
      if (dash == std::string_view::npos) throw InvalidArgument(fmt::format("edge '{}' must look like a-b", item));
      edges.emplace_back(parse_int(item.substr(0, dash), "site"), parse_int(item.substr(dash + 1), "site"));
      if (comma == std::string_view::npos) break;
      list = list.substr(comma + 1);
    }
  }
  return custom(sites, std::move(edges));
}

bool Topology::has_edge(int a, int b) const {
  const Edge e{std::min(a, b), std::max(a, b)};
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

bool Topology::chain_like() const {
  if (edge_sites_.empty()) return false;
  for (int i = 0; i < sites_; ++i) {
    if (degree_[i] > 2) return false;
  }
  for (int s : edge_sites_) {
    if (degree_[s] != 1) return false;
  }
  return true;
}

std::string Topology::str() const {
  switch (kind_) {
    case Kind::Chain: return fmt::format("chain:{}", sites_);
    case Kind::Complete: return fmt::format("complete:{}", sites_);
    case Kind::Custom: break;
  }
  std::string out = fmt::format("custom:{}:", sites_);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (i) out += ',';
    out += fmt::format("{}-{}", edges_[i].first + 1, edges_[i].second + 1);
  }
  return out;
}

}  // namespace dhlab

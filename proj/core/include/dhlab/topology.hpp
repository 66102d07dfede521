#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dhlab {

/// Undirected qubit connectivity. Sites are 0-based internally and 1-based in
/// every text form ("chain:5", "complete:4", "custom:5:1-2,2-3").
class Topology {
 public:
  enum class Kind { Chain, Complete, Custom };
  using Edge = std::pair<int, int>;  // first < second

  static Topology chain(int sites);
  static Topology complete(int sites);
  static Topology custom(int sites, std::vector<Edge> one_based_edges);
  static Topology parse(std::string_view text);

  int sites() const { return sites_; }
  Kind kind() const { return kind_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int degree(int site) const { return degree_.at(static_cast<std::size_t>(site)); }
  bool has_edge(int a, int b) const;

  /// Boundary sites: chain endpoints; none for complete graphs; otherwise the
  /// sites of minimal degree when degrees are not all equal.
  const std::vector<int>& edge_sites() const { return edge_sites_; }
  std::uint32_t edge_site_mask() const { return edge_mask_; }

  /// True when every site has degree <= 2 and boundary sites have degree 1,
  /// which is what the (k, p, e) subcluster formulas assume.
  bool chain_like() const;

  std::string str() const;

  friend bool operator==(const Topology& a, const Topology& b) {
    return a.sites_ == b.sites_ && a.edges_ == b.edges_;
  }

 private:
  Topology(int sites, Kind kind, std::vector<Edge> edges);

  int sites_ = 0;
  Kind kind_ = Kind::Custom;
  std::vector<Edge> edges_;
  std::vector<int> degree_;
  std::vector<int> edge_sites_;
  std::uint32_t edge_mask_ = 0;
};

}  // namespace dhlab

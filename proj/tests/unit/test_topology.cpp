#include <gtest/gtest.h>

#include "dhlab/error.hpp"
#include "dhlab/topology.hpp"

namespace dhlab {
namespace {

TEST(Topology, Chain) {
  EXPECT_EQ(Topology::chain(5).edges().size(), 4u);
  EXPECT_EQ(Topology::chain(2).edges().size(), 1u);
  const auto c7 = Topology::chain(7);
  EXPECT_EQ(c7.edges().size(), 6u);
  EXPECT_EQ(c7.degree(0), 1);
  EXPECT_EQ(c7.degree(6), 1);
  EXPECT_THROW(Topology::chain(1), InvalidArgument);
}

TEST(Topology, ChainDegreeProfile) {
  for (int l = 3; l <= 8; ++l) {
    const auto t = Topology::chain(l);
    int ones = 0, twos = 0;
    for (int i = 0; i < l; ++i) {
      if (t.degree(i) == 1) ++ones;
      if (t.degree(i) == 2) ++twos;
    }
    EXPECT_EQ(ones, 2);
    EXPECT_EQ(twos, l - 2);
    EXPECT_TRUE(t.chain_like());
  }
}

TEST(Topology, Complete) {
  EXPECT_EQ(Topology::complete(5).edges().size(), 10u);
  EXPECT_EQ(Topology::complete(2).edges().size(), 1u);
  EXPECT_EQ(Topology::complete(4).edges().size(), 6u);
  for (int l = 2; l <= 8; ++l) {
    EXPECT_EQ(Topology::complete(l).edges().size(), static_cast<std::size_t>(l * (l - 1) / 2));
  }
  EXPECT_TRUE(Topology::complete(4).edge_sites().empty());
  EXPECT_FALSE(Topology::complete(4).chain_like());
  EXPECT_THROW(Topology::complete(1), InvalidArgument);
}

TEST(Topology, Custom) {
  EXPECT_EQ(Topology::custom(3, {{1, 2}, {2, 3}}), Topology::chain(3));
  const auto ring = Topology::custom(4, {{1, 2}, {2, 3}, {3, 4}, {4, 1}});
  EXPECT_EQ(ring.edges().size(), 4u);
  EXPECT_TRUE(ring.has_edge(0, 3));
  EXPECT_TRUE(ring.edge_sites().empty());
  EXPECT_THROW(Topology::custom(2, {{1, 1}}), InvalidArgument);
  EXPECT_THROW(Topology::custom(3, {{1, 2}, {2, 1}}), InvalidArgument);
  EXPECT_THROW(Topology::custom(3, {{1, 4}}), InvalidArgument);
}

TEST(Topology, TextForms) {
  EXPECT_EQ(Topology::parse("chain:5"), Topology::chain(5));
  EXPECT_EQ(Topology::parse("complete:4"), Topology::complete(4));
  const auto t = Topology::parse("custom:5:1-2,2-3,3-4,4-5");
  EXPECT_EQ(t, Topology::chain(5));
  EXPECT_EQ(t.str(), "custom:5:1-2,2-3,3-4,4-5");
  EXPECT_EQ(Topology::chain(5).str(), "chain:5");
  EXPECT_EQ(Topology::parse(Topology::complete(3).str()), Topology::complete(3));
  EXPECT_THROW(Topology::parse("ring:4"), InvalidArgument);
  EXPECT_THROW(Topology::parse("chain"), InvalidArgument);
  EXPECT_THROW(Topology::parse("chain:x"), InvalidArgument);
  EXPECT_THROW(Topology::parse("custom:3:1-2,2"), InvalidArgument);
}

}  // namespace
}  // namespace dhlab

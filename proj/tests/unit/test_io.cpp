#include <sstream>

#include <gtest/gtest.h>

#include "dhlab/error.hpp"
#include "dhlab/io.hpp"

using namespace dhlab;

TEST(MatrixFile, KossakowskiRoundTripIsExact) {
  const int l = 3;
  const auto set = build_one_body_set(l);
  const auto k = sample_kossakowski(set.size(), l, 42);
  const MatrixHeader h{"kossakowski", l, set.size(), 42, "", "uniform", 0, 0};
  std::stringstream ss;
  write_matrix(ss, h, k.entries());
  const auto f = read_matrix(ss);
  EXPECT_EQ(f.header.kind, "kossakowski");
  EXPECT_EQ(f.header.channels, 9);
  EXPECT_EQ(f.header.seed, 42u);
  EXPECT_EQ(f.header.rows, 9);
  EXPECT_EQ(f.matrix, k.entries());
  EXPECT_NO_THROW(KossakowskiMatrix{f.matrix});
}

TEST(MatrixFile, SparseLiouvillianKeepsZeros) {
  const auto set = build_two_body_set(Topology::chain(2));
  const auto lm = build_adjoint_superoperator(set, KossakowskiMatrix::scaled_identity(set.size(), 2));
  std::stringstream ss;
  write_matrix(ss, {"liouvillian", 2, set.size(), 0, "chain:2", "constant", 0, 0}, lm.entries(), 1e-15);
  const auto text = ss.str();
  // diagonal model: 15 nonzero entries after 9 header lines and the column line
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10 + 15);
  std::stringstream in(text);
  const auto f = read_matrix(in);
  EXPECT_EQ(f.header.topology, "chain:2");
  EXPECT_EQ(f.matrix, lm.entries());
}

TEST(MatrixFile, RejectsBadInput) {
  std::stringstream missing("# kind=x\nrow,col,re,im\n");
  EXPECT_THROW(read_matrix(missing), InvalidArgument);
  std::stringstream range("# kind=x\n# sites=1\n# channels=3\n# seed=0\n# rows=2\n# cols=2\nrow,col,re,im\n2,0,1,0\n");
  EXPECT_THROW(read_matrix(range), InvalidArgument);
  std::stringstream junk("# kind=x\n# sites=1\n# channels=3\n# seed=0\n# rows=2\n# cols=2\nrow,col,re,im\n0,0,abc,0\n");
  EXPECT_THROW(read_matrix(junk), InvalidArgument);
}

TEST(TraceFile, RoundTrip) {
  TimeTrace t;
  t.start = 0.5;
  t.dt = 0.25;
  t.meta = {"XZ", "x0z1", 100, 9};
  for (int n = 0; n < 7; ++n) t.values.emplace_back(std::exp(-0.3 * n), 0.1 * n);
  std::stringstream ss;
  write_trace(ss, t);
  const auto r = read_trace(ss);
  EXPECT_EQ(r.values, t.values);
  EXPECT_EQ(r.start, t.start);
  EXPECT_EQ(r.dt, t.dt);
  EXPECT_EQ(r.meta.observable, "XZ");
  EXPECT_EQ(r.meta.state, "x0z1");
  EXPECT_EQ(r.meta.shots, 100);
  EXPECT_EQ(r.meta.seed, 9u);
}

TEST(TraceFile, RejectsNonUniformGrid) {
  std::stringstream ss("t,re,im\n0,1,0\n1,0.5,0\n3,0.2,0\n");
  EXPECT_THROW(read_trace(ss), InvalidArgument);
}

TEST(ModeFile, RoundTrip) {
  const std::vector<Mode> m{{{-0.5, 0.2}, {0.7, -0.1}, 1e-9}, {{-2.0, 0.0}, {0.3, 0.0}, 0.01}};
  std::stringstream ss;
  write_modes(ss, m);
  const auto r = read_modes(ss);
  ASSERT_EQ(r.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r[i].lambda, m[i].lambda);
    EXPECT_EQ(r[i].amplitude, m[i].amplitude);
    EXPECT_EQ(r[i].error_metric, m[i].error_metric);
  }
}

TEST(SpectrumFile, ListsEveryEigenvalue) {
  const auto set = build_one_body_set(2);
  const auto spec = eigendecompose(build_adjoint_superoperator(set, KossakowskiMatrix::scaled_identity(set.size(), 2)));
  std::stringstream ss;
  write_spectrum(ss, spec);
  const auto text = ss.str();
  EXPECT_NE(text.find("re,im,average_order,dominant_order\n"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4 + 1 + 16);
}

TEST(ClusterTableFile, OneLinePerClass) {
  const auto table = cluster_table(Topology::chain(3));
  std::stringstream ss;
  write_cluster_table(ss, table);
  const auto text = ss.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), table.size() + 1);
  EXPECT_EQ(text.substr(0, 17), "k,p,e,count,cente");
}

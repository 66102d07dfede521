#include <gtest/gtest.h>

#include <random>

#include "dhlab/error.hpp"
#include "dhlab/liouvillian.hpp"
#include "dhlab/spectral.hpp"
#include "oracles.hpp"

namespace dhlab {
namespace {

using C = std::complex<double>;

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

TEST(LindbladSet, OneBody) {
  EXPECT_EQ(build_one_body_set(2).size(), 6);
  EXPECT_EQ(build_one_body_set(5).size(), 15);
  const auto one = build_one_body_set(1);
  ASSERT_EQ(one.size(), 3);
  EXPECT_EQ(one[0].str(), "X");
  EXPECT_EQ(one[1].str(), "Y");
  EXPECT_EQ(one[2].str(), "Z");
  const auto four = build_one_body_set(4);
  for (const auto& s : four.operators()) EXPECT_EQ(s.order(), 1);
  EXPECT_THROW(build_one_body_set(0), InvalidArgument);
  EXPECT_THROW(build_one_body_set(9), InvalidArgument);
}

TEST(LindbladSet, TwoBody) {
  EXPECT_EQ(build_two_body_set(Topology::chain(5)).size(), 51);
  EXPECT_EQ(build_two_body_set(Topology::complete(5)).size(), 105);
  const auto c2 = build_two_body_set(Topology::chain(2));
  ASSERT_EQ(c2.size(), 15);
  // Enumeration oracle: 6 order-1 strings followed by all 9 order-2 strings.
  for (int n = 0; n < 6; ++n) EXPECT_EQ(c2[n].order(), 1);
  std::vector<PauliString> pairs(c2.operators().begin() + 6, c2.operators().end());
  std::sort(pairs.begin(), pairs.end());
  EXPECT_EQ(pairs, enumerate_strings(2, 2));
}

TEST(Kossakowski, TraceAndMeanDiagonal) {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const auto k = sample_kossakowski(15, 5, seed);
    EXPECT_NEAR(k.trace(), 32.0, 1e-12);
    EXPECT_NEAR(k.entries().diagonal().real().mean(), 32.0 / 15.0, 1e-12);
    EXPECT_LT(max_abs_diff(k.entries(), k.entries().adjoint()), 1e-14);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(k.entries());
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * 32.0);
  }
}

TEST(Kossakowski, DeterministicUnderSeed) {
  const auto a = sample_kossakowski(6, 2, 17);
  const auto b = sample_kossakowski(6, 2, 17);
  const auto c = sample_kossakowski(6, 2, 18);
  EXPECT_EQ(a.entries(), b.entries());
  EXPECT_GT(max_abs_diff(a.entries(), c.entries()), 1e-3);
}

TEST(Kossakowski, DegenerateSpectrumIsScaledIdentity) {
  const auto k = sample_kossakowski(15, 5, 3, SpectrumSpec::parse("constant"));
  const ComplexMatrix expect = ComplexMatrix::Identity(15, 15) * (32.0 / 15.0);
  EXPECT_EQ(k.entries(), expect);
}

TEST(Kossakowski, Validation) {
  ComplexMatrix bad(2, 2);
  bad << 1, C(0, 1), C(0, 1), 1;  // not Hermitian
  EXPECT_THROW(KossakowskiMatrix{bad}, InvalidArgument);
  ComplexMatrix neg(2, 2);
  neg << 1, 2, 2, 1;  // eigenvalue -1
  EXPECT_THROW(KossakowskiMatrix{neg}, InvalidArgument);
  EXPECT_THROW(SpectrumSpec::parse("gaussian"), InvalidArgument);
  EXPECT_THROW(SpectrumSpec::parse("uniform:2:1"), InvalidArgument);
  EXPECT_EQ(SpectrumSpec::parse(SpectrumSpec::parse("uniform:0.5:2").str()).hi, 2.0);
}

TEST(HaarUnitary, IsUnitary) {
  const auto u = haar_unitary(9, 4);
  EXPECT_LT(max_abs_diff(u.adjoint() * u, ComplexMatrix::Identity(9, 9)), 1e-12);
}

TEST(Superoperator, SingleSiteDiagonal) {
  const auto set = build_one_body_set(1);
  const auto k = KossakowskiMatrix::scaled_identity(3, 1);
  const auto l = build_adjoint_superoperator(set, k);
  ComplexMatrix expect = ComplexMatrix::Zero(4, 4);
  for (int i = 1; i < 4; ++i) expect(i, i) = -8.0 / 3.0;
  EXPECT_LT(max_abs_diff(l.entries(), expect), 1e-12);
  EXPECT_LT(max_abs_diff(l.entries(), oracle::dense_adjoint_superoperator(set, k)), 1e-12);
}

TEST(Superoperator, OneBodyIdentityKIsDiagonal) {
  const auto set = build_one_body_set(3);
  const auto k = KossakowskiMatrix::scaled_identity(9, 3);
  const double d = 8.0 / 9.0;
  const auto l = build_adjoint_superoperator(set, k);
  for (const auto& s : enumerate_strings(3)) {
    const auto x = static_cast<Eigen::Index>(s.index());
    EXPECT_NEAR(l(x, x).real(), -4.0 * d * s.order(), 1e-12);
    EXPECT_NEAR(l(x, x).imag(), 0.0, 1e-12);
  }
  ComplexMatrix off = l.entries();
  off.diagonal().setZero();
  EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Superoperator, ExhaustiveTwoSiteAgainstDenseOracle) {
  const auto set = build_two_body_set(Topology::chain(2));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto k = sample_kossakowski(set.size(), 2, seed);
    const auto l = build_adjoint_superoperator(set, k);
    EXPECT_LT(max_abs_diff(l.entries(), oracle::dense_adjoint_superoperator(set, k)), 1e-12) << seed;
  }
}

TEST(Superoperator, ThreeSiteRandomAgainstDenseOracle) {
  const auto set = build_two_body_set(Topology::chain(3));
  const auto k = sample_kossakowski(set.size(), 3, 11);
  const auto l = build_adjoint_superoperator(set, k);
  EXPECT_LT(max_abs_diff(l.entries(), oracle::dense_adjoint_superoperator(set, k)), 1e-12);
}

TEST(Superoperator, IdentityColumnVanishes) {
  const auto set = build_two_body_set(Topology::complete(3));
  const auto l = build_adjoint_superoperator(set, sample_kossakowski(set.size(), 3, 5));
  EXPECT_LT(l.entries().col(0).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Superoperator, IdentityRowVanishesOnlyForUnitalK) {
  // Tr(L^dagger[S_x]) = Tr(S_x L[I]) and L[I] = 2i sum_{n<m} Im(K_nm) [L_n, L_m].
  const auto set = build_one_body_set(2);
  const auto unital = build_adjoint_superoperator(set, KossakowskiMatrix::scaled_identity(6, 2));
  EXPECT_LT(unital.entries().row(0).cwiseAbs().maxCoeff(), 1e-13);
  ComplexMatrix real_k = sample_kossakowski(6, 2, 9).entries().real().cast<C>();
  const auto symmetric = build_adjoint_superoperator(set, KossakowskiMatrix(real_k));
  EXPECT_LT(symmetric.entries().row(0).cwiseAbs().maxCoeff(), 1e-13);
  const auto generic = sample_kossakowski(6, 2, 9);
  const auto l = build_adjoint_superoperator(set, generic);
  EXPECT_GT(l.entries().row(0).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((l.entries() - oracle::dense_adjoint_superoperator(set, generic)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Superoperator, DimensionMismatch) {
  const auto set = build_one_body_set(2);
  EXPECT_THROW(build_adjoint_superoperator(set, KossakowskiMatrix::scaled_identity(5, 2)), InvalidArgument);
}

TEST(ApplyAdjoint, MatchesDenseProduct) {
  const auto set = build_two_body_set(Topology::chain(3));
  const auto k = sample_kossakowski(set.size(), 3, 21);
  const auto l = build_adjoint_superoperator(set, k);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  ComplexVector v(64);
  for (auto& x : v) x = C(g(rng), g(rng));
  const ComplexVector dense = l.entries() * v;
  const ComplexVector free = apply_adjoint(set, k, v);
  EXPECT_LT((dense - free).norm(), 1e-12 * dense.norm());
}

TEST(ApplyAdjoint, IdentityAndDiagonalAction) {
  const auto set = build_one_body_set(3);
  const auto k = KossakowskiMatrix::scaled_identity(9, 3);
  ComplexVector id = ComplexVector::Zero(64);
  id[0] = 1;
  EXPECT_LT(apply_adjoint(set, k, id).norm(), 1e-15);

  const auto s = PauliString::parse("IYI");
  ComplexVector e = ComplexVector::Zero(64);
  e[s.index()] = 1;
  const ComplexVector out = apply_adjoint(set, k, e);
  EXPECT_LT((out - (-4.0 * 8.0 / 9.0) * e).norm(), 1e-12);
  EXPECT_THROW(apply_adjoint(set, k, ComplexVector::Zero(10)), InvalidArgument);
}

TEST(ApplyAdjoint, WorksBeyondDenseCap) {
  const auto set = build_one_body_set(7);
  const auto k = KossakowskiMatrix::scaled_identity(21, 7);
  const AdjointOperator op(set, k);
  const auto s = PauliString::parse("XIIZIIY");
  ComplexVector e = ComplexVector::Zero(static_cast<Eigen::Index>(op.dim()));
  e[s.index()] = 1;
  const double d = 128.0 / 21.0;
  EXPECT_LT((op.apply(e) + 4.0 * d * 3 * e).norm(), 1e-10);
  EXPECT_THROW(build_adjoint_superoperator(set, k), InvalidArgument);
}

TEST(Spectrum, StructuralInvariantsOnRandomInstances) {
  for (int l = 1; l <= 3; ++l) {
    for (int bodies = 1; bodies <= 2; ++bodies) {
      if (bodies == 2 && l < 2) continue;
      const auto set = bodies == 1 ? build_one_body_set(l) : build_two_body_set(Topology::chain(l));
      const auto spec = eigendecompose(build_adjoint_superoperator(set, sample_kossakowski(set.size(), l, 40 + l)));
      const auto& ev = spec.eigenvalues();
      EXPECT_NEAR(std::abs(ev[0]), 0.0, 1e-10);
      for (const auto& lam : ev) {
        EXPECT_LE(lam.real(), 1e-10);
        if (std::abs(lam.imag()) > 1e-10) {
          EXPECT_LT((ev.array() - std::conj(lam)).abs().minCoeff(), 1e-8);
        }
      }
    }
  }
}

}  // namespace
}  // namespace dhlab

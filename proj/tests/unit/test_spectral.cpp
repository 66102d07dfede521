#include <gtest/gtest.h>

#include <map>

#include "dhlab/error.hpp"
#include "dhlab/spectral.hpp"
#include "oracles.hpp"

namespace dhlab {
namespace {

using C = std::complex<double>;

TEST(Eigendecompose, OneBodyIdentityKLevels) {
  const auto set = build_one_body_set(2);
  const double d = 4.0 / 6.0;
  const auto spec = eigendecompose(build_adjoint_superoperator(set, KossakowskiMatrix::scaled_identity(6, 2)));
  ASSERT_EQ(spec.size(), 16);
  // Multiplicities C(l,k) 3^k counted directly.
  std::map<int, int> expected;
  for (const auto& s : enumerate_strings(2)) ++expected[s.order()];
  std::map<int, int> seen;
  for (const auto& lam : spec.eigenvalues()) {
    const double k = -lam.real() / (4 * d);
    const int ki = static_cast<int>(std::lround(k));
    EXPECT_NEAR(k, ki, 1e-10);
    EXPECT_NEAR(lam.imag(), 0.0, 1e-10);
    ++seen[ki];
  }
  EXPECT_EQ(seen, expected);
  EXPECT_EQ(seen[1], 6);
  EXPECT_EQ(seen[2], 9);
}

TEST(Eigendecompose, SortedAndResiduals) {
  const auto set = build_two_body_set(Topology::chain(3));
  const auto l = build_adjoint_superoperator(set, sample_kossakowski(set.size(), 3, 8));
  const auto spec = eigendecompose(l);
  const auto& ev = spec.eigenvalues();
  for (Eigen::Index i = 1; i < ev.size(); ++i) EXPECT_GE(ev[i - 1].real(), ev[i].real() - 1e-12);
  EXPECT_NEAR(ev[0].real(), 0.0, 1e-10);
  const double scale = l.entries().norm();
  for (Eigen::Index n = 0; n < ev.size(); ++n) {
    const ComplexVector v = spec.eigenvectors().col(n);
    EXPECT_LE((l.entries() * v - ev[n] * v).norm(), 1e-8 * scale);
  }
  const ComplexMatrix id = spec.inverse_eigenvectors() * spec.eigenvectors();
  EXPECT_LT((id - ComplexMatrix::Identity(64, 64)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Eigendecompose, RandomOneBodyClusterMeansAreLinear) {
  const auto set = build_one_body_set(3);
  const auto spec = eigendecompose(build_adjoint_superoperator(set, sample_kossakowski(9, 3, 12)));
  std::map<int, std::pair<double, int>> acc;
  for (Eigen::Index n = 0; n < spec.size(); ++n) {
    auto& a = acc[spec.dominant_orders()[static_cast<std::size_t>(n)]];
    a.first += -spec.eigenvalues()[n].real();
    a.second += 1;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& [k, a] : acc) {
    if (k == 0) continue;
    const double y = a.first / a.second;
    sxy += k * y; sxx += double(k) * k; syy += y * y;
  }
  const double slope = sxy / sxx;
  double ss_res = 0;
  for (const auto& [k, a] : acc) {
    if (k == 0) continue;
    const double r = a.first / a.second - slope * k;
    ss_res += r * r;
  }
  // Uncentered R^2 for a line through the origin.
  EXPECT_GT(1.0 - ss_res / syy, 0.99);
}

TEST(AverageOrder, Examples) {
  ComplexVector v = ComplexVector::Zero(64);
  v[PauliString::parse("XIZ").index()] = 1;
  EXPECT_DOUBLE_EQ(average_operator_order(v, 3), 2.0);
  v.setZero();
  v[PauliString::parse("IYI").index()] = C(0, 1);
  v[PauliString::parse("XYZ").index()] = -1;
  EXPECT_DOUBLE_EQ(average_operator_order(v, 3), 2.0);
  v.setZero();
  v[0] = 3;
  EXPECT_DOUBLE_EQ(average_operator_order(v, 3), 0.0);
  EXPECT_THROW(average_operator_order(ComplexVector::Zero(64), 3), InvalidArgument);
}

TEST(Propagate, IdentityObservableIsConstant) {
  const auto set = build_two_body_set(Topology::chain(3));
  const auto k = sample_kossakowski(set.size(), 3, 2);
  const auto spec = eigendecompose(build_adjoint_superoperator(set, k));
  const auto state = ProductState::parse("x0y1z0");
  const auto tr = propagate_observable(spec, PauliString(3), state, {0, 1, 10}, 0.05);
  for (const auto& v : tr.values) EXPECT_NEAR(std::abs(v - C(1, 0)), 0.0, 1e-10);
}

TEST(Propagate, DiagonalCaseIsSingleExponentialOnBothPaths) {
  const auto set = build_one_body_set(3);
  const auto k = KossakowskiMatrix::scaled_identity(9, 3);
  const double d = 8.0 / 9.0;
  const auto spec = eigendecompose(build_adjoint_superoperator(set, k));
  const AdjointOperator op(set, k);
  const auto obs = PauliString::parse("XIZ");
  const auto state = ProductState::parse("x1z0z0");
  const double unit = 0.02;
  const TimeGrid grid{0, 1, 20};
  const auto dense = propagate_observable(spec, obs, state, grid, unit);
  const auto free = propagate_observable(op, obs, state, grid, unit);
  for (int n = 0; n < grid.count; ++n) {
    const double expect = -std::exp(-4 * d * 2 * unit * n);
    EXPECT_NEAR(dense.values[static_cast<std::size_t>(n)].real(), expect, 1e-10);
    EXPECT_NEAR(free.values[static_cast<std::size_t>(n)].real(), expect, 1e-10);
  }
}

TEST(Propagate, TimeZeroIsInitialExpectation) {
  const auto set = build_two_body_set(Topology::chain(3));
  const auto spec = eigendecompose(build_adjoint_superoperator(set, sample_kossakowski(set.size(), 3, 3)));
  const auto state = ProductState::parse("y0x1z1");
  for (const auto& s : enumerate_strings(3)) {
    const auto tr = propagate_observable(spec, s, state, {0, 1, 1});
    EXPECT_NEAR(tr.values[0].real(), expectation(state, s), 1e-10) << s.str();
  }
}

class RandomInstance : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomInstance, DenseMatrixFreeAndModeSumAgree) {
  const auto set = build_two_body_set(Topology::chain(3));
  const auto k = sample_kossakowski(set.size(), 3, GetParam());
  const auto spec = eigendecompose(build_adjoint_superoperator(set, k));
  const AdjointOperator op(set, k);
  const auto state = ProductState::parse("x0z1y0");
  const TimeGrid grid{0, 1, 30};
  const double unit = 0.02;
  for (const char* o : {"XII", "ZZI", "YXZ", "IIY"}) {
    const auto obs = PauliString::parse(o);
    const auto a = propagate_observable(spec, obs, state, grid, unit);
    const auto b = propagate_observable(op, obs, state, grid, unit);
    const auto modes = spec.trace_modes(obs, state);
    for (int n = 0; n < grid.count; ++n) {
      const auto i = static_cast<std::size_t>(n);
      const double scale = std::max(std::abs(a.values[i]), 1e-3);
      EXPECT_LT(std::abs(a.values[i] - b.values[i]) / scale, 1e-6) << o << " t=" << n;
      EXPECT_LT(std::abs(a.values[i].imag()), 1e-10);
      C sum{0, 0};
      for (const auto& m : modes) sum += m.amplitude * std::exp(m.lambda * (unit * n));
      EXPECT_LT(std::abs(sum - a.values[i]), 1e-8);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomInstance, ::testing::Values(1, 2, 3));

TEST(Propagate, RejectsBadGrid) {
  const auto set = build_one_body_set(2);
  const auto k = KossakowskiMatrix::scaled_identity(6, 2);
  const AdjointOperator op(set, k);
  EXPECT_THROW(propagate_observable(op, PauliString(2), ProductState::all_zero(2), {0, 0, 3}), InvalidArgument);
  EXPECT_THROW(propagate_observable(op, PauliString(3), ProductState::all_zero(2), {0, 1, 3}), InvalidArgument);
}

TEST(ProductStateSpec, ExpectationsFactorize) {
  const auto st = ProductState::parse("x0y1z0");
  EXPECT_EQ(st.str(), "x0y1z0");
  EXPECT_DOUBLE_EQ(expectation(st, PauliString::parse("XII")), 1.0);
  EXPECT_DOUBLE_EQ(expectation(st, PauliString::parse("IYI")), -1.0);
  EXPECT_DOUBLE_EQ(expectation(st, PauliString::parse("XYZ")), -1.0);
  EXPECT_DOUBLE_EQ(expectation(st, PauliString::parse("ZII")), 0.0);
  EXPECT_THROW(ProductState::parse("q0"), InvalidArgument);
  EXPECT_THROW(ProductState::parse("x2"), InvalidArgument);

  // Dense oracle: rho_0 as a Kronecker product of single-site projectors.
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(1, 1);
  for (const auto& site : st.sites) {
    const Eigen::Matrix2cd p = 0.5 * (Eigen::Matrix2cd::Identity() +
                                      (site.bit ? -1.0 : 1.0) * oracle::single_pauli(pauli_of(site.basis)));
    Eigen::MatrixXcd next = Eigen::kroneckerProduct(rho, p).eval();
    rho = next;
  }
  const auto coeffs = pauli_coefficients(st);
  for (const auto& s : enumerate_strings(3)) {
    const double ref = (rho * oracle::kron_matrix(s)).trace().real();
    EXPECT_NEAR(coeffs[s.index()], ref, 1e-14) << s.str();
  }
}

}  // namespace
}  // namespace dhlab

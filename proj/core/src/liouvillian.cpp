#include "dhlab/liouvillian.hpp"

#include <charconv>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "dhlab/error.hpp"

namespace dhlab {

namespace {

double parse_double(std::string_view text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(text), &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(fmt::format("invalid number '{}' in spectrum spec", text));
  }
}

}  // namespace

std::string LindbladSet::label() const {
  if (!topology_) return fmt::format("one-body l={}", sites_);
  return fmt::format("two-body {}", topology_->str());
}

LindbladSet build_one_body_set(int sites) {
  if (sites < 1 || sites > kMaxSites) {
    throw InvalidArgument(fmt::format("number of sites must be in [1, {}], got {}", kMaxSites, sites));
  }
  LindbladSet set;
  set.sites_ = sites;
  for (int site = sites - 1; site >= 0; --site) {
    for (Pauli p : {Pauli::X, Pauli::Y, Pauli::Z}) {
      PauliString s(sites);
      s.set(site, p);
      set.ops_.push_back(s);
    }
  }
  return set;
}

LindbladSet build_two_body_set(const Topology& topo) {
  LindbladSet set = build_one_body_set(topo.sites());
  set.topology_ = topo;
  for (auto [a, b] : topo.edges()) {
    for (Pauli pa : {Pauli::X, Pauli::Y, Pauli::Z}) {
      for (Pauli pb : {Pauli::X, Pauli::Y, Pauli::Z}) {
        PauliString s(topo.sites());
        s.set(a, pa);
        s.set(b, pb);
        set.ops_.push_back(s);
      }
    }
  }
  return set;
}

SpectrumSpec SpectrumSpec::parse(std::string_view text) {
  SpectrumSpec spec;
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  if (name == "uniform") {
    spec.kind = Kind::Uniform;
    if (colon != std::string_view::npos) {
      const auto rest = text.substr(colon + 1);
      const auto c2 = rest.find(':');
      if (c2 == std::string_view::npos) throw InvalidArgument("uniform spectrum needs uniform:lo:hi");
      spec.lo = parse_double(rest.substr(0, c2));
      spec.hi = parse_double(rest.substr(c2 + 1));
    }
    if (!(spec.lo >= 0.0) || !(spec.hi > spec.lo)) {
      throw InvalidArgument(fmt::format("uniform spectrum needs 0 <= lo < hi, got {}:{}", spec.lo, spec.hi));
    }
  } else if (name == "exponential") {
    spec.kind = Kind::Exponential;
    if (colon != std::string_view::npos) throw InvalidArgument("exponential spectrum takes no parameters");
  } else if (name == "constant") {
    spec.kind = Kind::Constant;
    if (colon != std::string_view::npos) throw InvalidArgument("constant spectrum takes no parameters");
  } else {
    throw InvalidArgument(fmt::format("unknown spectrum distribution '{}'", text));
  }
  return spec;
}

std::string SpectrumSpec::str() const {
  switch (kind) {
    case Kind::Uniform:
      if (lo == 0.0 && hi == 1.0) return "uniform";
      return fmt::format("uniform:{}:{}", lo, hi);
    case Kind::Exponential: return "exponential";
    case Kind::Constant: return "constant";
  }
  return "uniform";
}

KossakowskiMatrix::KossakowskiMatrix(ComplexMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw InvalidArgument("Kossakowski matrix must be square and nonempty");
  }
  const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
  if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("Kossakowski matrix is not Hermitian");
  }
  entries_ = 0.5 * (entries_ + entries_.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(entries_, Eigen::EigenvaluesOnly);
  const double tr = std::abs(entries_.trace().real());
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, tr)) {
    throw InvalidArgument(fmt::format("Kossakowski matrix is not positive semidefinite (min eigenvalue {})",
                                      es.eigenvalues().minCoeff()));
  }
}

KossakowskiMatrix KossakowskiMatrix::scaled_identity(int count, int sites) {
  if (count < 1) throw InvalidArgument("channel count must be positive");
  const double d = std::ldexp(1.0, sites) / count;
  return KossakowskiMatrix(ComplexMatrix::Identity(count, count) * d);
}

ComplexMatrix haar_unitary(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix g(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) g(i, j) = {normal(rng), normal(rng)};
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (int j = 0; j < dim; ++j) {
    const double mag = std::abs(r(j, j));
    const std::complex<double> phase = mag > 0 ? r(j, j) / mag : std::complex<double>{1, 0};
    q.col(j) *= phase;
  }
  return q;
}

KossakowskiMatrix sample_kossakowski(int count, int sites, std::uint64_t seed, const SpectrumSpec& spectrum) {
  if (count < 1) throw InvalidArgument("channel count must be positive");
  if (sites < 1 || sites > kMaxSites) throw InvalidArgument("number of sites out of range");
  if (spectrum.kind == SpectrumSpec::Kind::Constant) return KossakowskiMatrix::scaled_identity(count, sites);

  // Eigenvalues from a stream independent of the unitary's.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Eigen::VectorXd d(count);
  if (spectrum.kind == SpectrumSpec::Kind::Uniform) {
    std::uniform_real_distribution<double> u(spectrum.lo, spectrum.hi);
    for (int i = 0; i < count; ++i) d(i) = u(rng);
  } else {
    std::exponential_distribution<double> e(1.0);
    for (int i = 0; i < count; ++i) d(i) = e(rng);
  }
  if (d.sum() <= 0) throw NumericalFault("sampled Kossakowski spectrum has zero trace");
  d *= std::ldexp(1.0, sites) / d.sum();

  const ComplexMatrix u = haar_unitary(count, seed);
  ComplexMatrix k = u.adjoint() * d.asDiagonal() * u;
  k = 0.5 * (k + k.adjoint()).eval();
  // Restore the trace exactly after rounding.
  k *= std::ldexp(1.0, sites) / k.trace().real();
  return KossakowskiMatrix(std::move(k));
}

ChannelWeights mean_channel_weights(const LindbladSet& set, const KossakowskiMatrix& k) {
  if (k.size() != set.size()) throw InvalidArgument("Kossakowski dimension does not match channel count");
  ChannelWeights w;
  const int n1 = set.one_body_count();
  for (int n = 0; n < n1; ++n) w.one_body += k(n, n).real();
  w.one_body /= n1;
  if (set.size() > n1) {
    for (int n = n1; n < set.size(); ++n) w.two_body += k(n, n).real();
    w.two_body /= (set.size() - n1);
  } else {
    w.two_body = w.one_body;
  }
  return w;
}

LiouvillianMatrix::LiouvillianMatrix(int sites, ComplexMatrix entries) : sites_(sites), entries_(std::move(entries)) {
  const Eigen::Index expected = Eigen::Index{1} << (2 * sites);
  if (entries_.rows() != expected || entries_.cols() != expected) {
    throw InvalidArgument(fmt::format("Liouvillian for {} sites must be {}x{}", sites, expected, expected));
  }
}

AdjointOperator::AdjointOperator(const LindbladSet& set, const KossakowskiMatrix& k) : sites_(set.sites()) {
  if (k.size() != set.size()) {
    throw InvalidArgument(fmt::format("Kossakowski dimension {} does not match {} channels", k.size(), set.size()));
  }
  const int count = set.size();
  for (const auto& op : set.operators()) {
    op_x_.push_back(op.x_bits());
    op_z_.push_back(op.z_bits());
  }
  constexpr std::complex<double> kPowers[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int m = 0; m < count; ++m) {
    for (int n = 0; n < count; ++n) {
      const auto knm = k(n, m);
      if (knm == std::complex<double>{0, 0}) continue;
      const int phase = product_phase_power(op_x_[m], op_z_[m], op_x_[n], op_z_[n]);
      terms_.push_back({op_x_[m] ^ op_x_[n], op_z_[m] ^ op_z_[n], static_cast<std::uint16_t>(m),
                        static_cast<std::uint16_t>(n), knm * kPowers[phase]});
      norm_bound_ += 2.0 * std::abs(knm);
    }
  }
  const std::uint32_t total = 1u << (2 * sites_);
  index_of_bits_.assign(total, 0);
  x_of_index_.resize(total);
  z_of_index_.resize(total);
  for (std::uint32_t idx = 0; idx < total; ++idx) {
    const auto s = PauliString::from_index(sites_, idx);
    x_of_index_[idx] = s.x_bits();
    z_of_index_[idx] = s.z_bits();
    index_of_bits_[(s.x_bits() << sites_) | s.z_bits()] = idx;
  }
}

ComplexVector AdjointOperator::apply(const ComplexVector& coeffs) const {
  if (static_cast<std::size_t>(coeffs.size()) != dim()) {
    throw InvalidArgument(fmt::format("coefficient vector has length {}, expected {}", coeffs.size(), dim()));
  }
  ComplexVector out = ComplexVector::Zero(coeffs.size());
  for (std::uint32_t col = 0; col < dim(); ++col) {
    const auto c = coeffs[col];
    if (c == std::complex<double>{0, 0}) continue;
    for_each_in_column(col, [&](std::uint32_t row, std::uint32_t, std::complex<double> v) { out[row] += v * c; });
  }
  return out;
}

LiouvillianMatrix build_adjoint_superoperator(const LindbladSet& set, const KossakowskiMatrix& k) {
  if (set.sites() > kMaxDenseSites) {
    throw InvalidArgument(fmt::format("dense Liouvillian limited to l <= {}; use AdjointOperator", kMaxDenseSites));
  }
  const AdjointOperator op(set, k);
  const auto dim = static_cast<Eigen::Index>(op.dim());
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (std::uint32_t col = 0; col < op.dim(); ++col) {
    op.for_each_in_column(col, [&](std::uint32_t row, std::uint32_t c, std::complex<double> v) { m(row, c) += v; });
  }
  return LiouvillianMatrix(set.sites(), std::move(m));
}

ComplexVector apply_adjoint(const LindbladSet& set, const KossakowskiMatrix& k, const ComplexVector& coeffs) {
  return AdjointOperator(set, k).apply(coeffs);
}

}  // namespace dhlab

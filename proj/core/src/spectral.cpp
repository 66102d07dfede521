#include "dhlab/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numeric>

#include <fmt/format.h>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "dhlab/error.hpp"

namespace dhlab {

std::vector<int> TimeGrid::values() const {
  std::vector<int> out(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) out[static_cast<std::size_t>(n)] = at(n);
  return out;
}

const std::vector<int>& orders_of_indices(int sites) {
  static std::array<std::vector<int>, kMaxSites + 1> cache;
  static std::once_flag flags[kMaxSites + 1];
  if (sites < 1 || sites > kMaxSites) throw InvalidArgument("number of sites out of range");
  std::call_once(flags[sites], [sites] {
    const std::uint32_t total = 1u << (2 * sites);
    auto& v = cache[sites];
    v.resize(total);
    for (std::uint32_t idx = 0; idx < total; ++idx) {
      int k = 0;
      for (std::uint32_t rest = idx; rest; rest >>= 2) k += (rest & 3u) ? 1 : 0;
      v[idx] = k;
    }
  });
  return cache[sites];
}

double average_operator_order(const ComplexVector& v, int sites) {
  const auto& orders = orders_of_indices(sites);
  if (static_cast<std::size_t>(v.size()) != orders.size()) {
    throw InvalidArgument(fmt::format("vector of length {} is not a {}-site coefficient vector", v.size(), sites));
  }
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double w = std::norm(v[i]);
    num += orders[static_cast<std::size_t>(i)] * w;
    den += w;
  }
  if (den == 0.0) throw InvalidArgument("average operator order of a zero vector");
  return num / den;
}

Spectrum eigendecompose(const LiouvillianMatrix& l) {
  const auto n = l.dim();
  ComplexMatrix a = l.entries();
  ComplexVector w(n);
  ComplexMatrix vr(n, n);
  std::complex<double> dummy;
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', static_cast<lapack_int>(n), a.data(),
                                        static_cast<lapack_int>(n), w.data(), &dummy, 1, vr.data(),
                                        static_cast<lapack_int>(n));
  if (info != 0) {
    Eigen::JacobiSVD<ComplexMatrix> svd(l.entries());
    const auto& sv = svd.singularValues();
    throw NumericalFault(fmt::format("zgeev failed (info={}); singular values range [{:.3e}, {:.3e}]", info,
                                     sv(sv.size() - 1), sv(0)));
  }

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](Eigen::Index i, Eigen::Index j) {
    if (w[i].real() != w[j].real()) return w[i].real() > w[j].real();
    return w[i].imag() < w[j].imag();
  });

  Spectrum s;
  s.sites_ = l.sites();
  s.eigenvalues_.resize(n);
  s.eigenvectors_.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    s.eigenvalues_[c] = w[perm[static_cast<std::size_t>(c)]];
    s.eigenvectors_.col(c) = vr.col(perm[static_cast<std::size_t>(c)]).normalized();
  }

  const double norm = l.entries().norm();
  const ComplexMatrix resid = l.entries() * s.eigenvectors_ - s.eigenvectors_ * s.eigenvalues_.asDiagonal();
  s.max_residual_ = resid.colwise().norm().maxCoeff();
  if (s.max_residual_ > 1e-8 * std::max(norm, 1.0)) {
    throw NumericalFault(fmt::format("eigenpair residual {:.3e} exceeds 1e-8 * ||L|| = {:.3e}", s.max_residual_,
                                     1e-8 * norm));
  }

  Eigen::PartialPivLU<ComplexMatrix> lu(s.eigenvectors_);
  s.inverse_ = lu.inverse();

  const auto& orders = orders_of_indices(l.sites());
  s.average_orders_.resize(static_cast<std::size_t>(n));
  s.dominant_orders_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < n; ++c) {
    std::array<double, kMaxSites + 1> weight{};
    double total = 0.0;
    double num = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double p = std::norm(s.eigenvectors_(r, c));
      weight[static_cast<std::size_t>(orders[static_cast<std::size_t>(r)])] += p;
      num += orders[static_cast<std::size_t>(r)] * p;
      total += p;
    }
    s.average_orders_[static_cast<std::size_t>(c)] = num / total;
    s.dominant_orders_[static_cast<std::size_t>(c)] =
        static_cast<int>(std::max_element(weight.begin(), weight.begin() + l.sites() + 1) - weight.begin());
  }
  return s;
}

std::vector<Mode> Spectrum::trace_modes(const PauliString& observable, const ProductState& state) const {
  if (observable.size() != sites_ || state.size() != sites_) {
    throw InvalidArgument("observable/state size does not match the spectrum");
  }
  const auto r = pauli_coefficients(state);
  const auto col = static_cast<Eigen::Index>(observable.index());
  std::vector<Mode> modes(static_cast<std::size_t>(size()));
  for (Eigen::Index nidx = 0; nidx < size(); ++nidx) {
    std::complex<double> proj{0, 0};
    for (Eigen::Index y = 0; y < size(); ++y) {
      const double ry = r[static_cast<std::size_t>(y)];
      if (ry != 0.0) proj += ry * eigenvectors_(y, nidx);
    }
    modes[static_cast<std::size_t>(nidx)] = {eigenvalues_[nidx], proj * inverse_(nidx, col), 0.0};
  }
  return modes;
}

TimeTrace propagate_observable(const Spectrum& spectrum, const PauliString& observable, const ProductState& state,
                               const TimeGrid& grid, double unit) {
  if (grid.count < 1 || grid.t0 < 0 || grid.step < 1) throw InvalidArgument("time grid must be nonnegative and increasing");
  const auto modes = spectrum.trace_modes(observable, state);
  TimeTrace trace;
  trace.start = grid.t0 * unit;
  trace.dt = grid.step * unit;
  trace.meta.observable = observable.str();
  trace.meta.state = state.str();
  trace.values.resize(static_cast<std::size_t>(grid.count));
  for (int n = 0; n < grid.count; ++n) {
    const double t = grid.at(n) * unit;
    std::complex<double> v{0, 0};
    for (const auto& m : modes) v += m.amplitude * std::exp(m.lambda * t);
    trace.values[static_cast<std::size_t>(n)] = v;
  }
  return trace;
}

namespace {

// v <- exp(L h) v by substepping so that each substep has ||L|| h_sub <= 1
// and summing Taylor terms until they fall below 1e-16 relative.
void taylor_step(const AdjointOperator& op, ComplexVector& v, double h) {
  if (h == 0.0) return;
  const int substeps = std::max(1, static_cast<int>(std::ceil(op.norm_bound() * h)));
  const double hs = h / substeps;
  for (int s = 0; s < substeps; ++s) {
    ComplexVector term = v;
    ComplexVector sum = v;
    bool converged = false;
    for (int j = 1; j <= 80; ++j) {
      term = op.apply(term) * (hs / j);
      sum += term;
      if (term.norm() <= 1e-16 * std::max(sum.norm(), 1e-300)) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericalFault("Taylor propagation did not converge within 80 terms");
    v = std::move(sum);
  }
}

}  // namespace

TimeTrace propagate_observable(const AdjointOperator& op, const PauliString& observable, const ProductState& state,
                               const TimeGrid& grid, double unit) {
  if (observable.size() != op.sites() || state.size() != op.sites()) {
    throw InvalidArgument("observable/state size does not match the generator");
  }
  if (grid.count < 1 || grid.t0 < 0 || grid.step < 1) throw InvalidArgument("time grid must be nonnegative and increasing");
  const auto r = pauli_coefficients(state);
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(op.dim()));
  v[observable.index()] = 1.0;
  auto overlap = [&] {
    std::complex<double> acc{0, 0};
    for (std::size_t y = 0; y < r.size(); ++y) {
      if (r[y] != 0.0) acc += r[y] * v[static_cast<Eigen::Index>(y)];
    }
    return acc;
  };
  TimeTrace trace;
  trace.start = grid.t0 * unit;
  trace.dt = grid.step * unit;
  trace.meta.observable = observable.str();
  trace.meta.state = state.str();
  taylor_step(op, v, grid.t0 * unit);
  for (int n = 0; n < grid.count; ++n) {
    if (n > 0) taylor_step(op, v, grid.step * unit);
    trace.values.push_back(overlap());
  }
  return trace;
}

}  // namespace dhlab

#include "dhlab/density_matrix.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "dhlab/error.hpp"

namespace dhlab {

using C = std::complex<double>;

namespace {

void check_sites(int sites) {
  if (sites < 1 || sites > kMaxSites) {
    throw InvalidArgument(fmt::format("number of qubits must be in [1, {}], got {}", kMaxSites, sites));
  }
}

Eigen::Index mask_of(int sites, int q) { return Eigen::Index{1} << (sites - 1 - q); }

// Qubit i of a PauliString lives at basis bit (l - 1 - i).
std::uint32_t to_basis_mask(std::uint32_t site_bits, int sites) {
  std::uint32_t out = 0;
  for (int i = 0; i < sites; ++i) {
    if ((site_bits >> i) & 1u) out |= 1u << (sites - 1 - i);
  }
  return out;
}

}  // namespace

DensityMatrix::DensityMatrix(int sites) : sites_(sites) {
  check_sites(sites);
  const Eigen::Index dim = Eigen::Index{1} << sites;
  rho_ = Eigen::MatrixXcd::Zero(dim, dim);
  rho_(0, 0) = 1;
}

DensityMatrix::DensityMatrix(int sites, Eigen::MatrixXcd rho) : sites_(sites), rho_(std::move(rho)) {
  check_sites(sites);
  const Eigen::Index dim = Eigen::Index{1} << sites;
  if (rho_.rows() != dim || rho_.cols() != dim) {
    throw InvalidArgument(fmt::format("density matrix for {} qubits must be {}x{}", sites, dim, dim));
  }
  try {
    validate();
  } catch (const NumericalFault& e) {
    throw InvalidArgument(e.what());
  }
}

DensityMatrix DensityMatrix::maximally_mixed(int sites) {
  DensityMatrix d(sites);
  d.rho_ = Eigen::MatrixXcd::Identity(d.dim(), d.dim()) / static_cast<double>(d.dim());
  return d;
}

double DensityMatrix::trace_deviation() const { return std::abs(rho_.trace() - C(1, 0)); }

double DensityMatrix::hermiticity_error() const { return (rho_ - rho_.adjoint()).norm(); }

double DensityMatrix::min_eigenvalue() const {
  const Eigen::MatrixXcd herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void DensityMatrix::validate() const {
  const double herm = hermiticity_error();
  if (herm > 1e-10) throw NumericalFault(fmt::format("density matrix not Hermitian (||rho - rho^+|| = {:.3e})", herm));
  const double tr = trace_deviation();
  if (tr > 1e-10) throw NumericalFault(fmt::format("density matrix trace deviates from 1 by {:.3e}", tr));
  const double lo = min_eigenvalue();
  if (lo < -1e-8) throw NumericalFault(fmt::format("density matrix has eigenvalue {:.3e}", lo));
}

void DensityMatrix::conjugate(const Eigen::MatrixXcd& a, const std::vector<int>& qubits) {
  for (int q : qubits) {
    if (q < 0 || q >= sites_) throw InvalidArgument(fmt::format("qubit {} out of range for {} qubits", q, sites_));
  }
  const Eigen::Index dim = this->dim();
  if (qubits.size() == 1 && a.rows() == 2 && a.cols() == 2) {
    const Eigen::Index m = mask_of(sites_, qubits[0]);
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (i & m) continue;
      const Eigen::RowVectorXcd r0 = rho_.row(i);
      const Eigen::RowVectorXcd r1 = rho_.row(i | m);
      rho_.row(i) = a(0, 0) * r0 + a(0, 1) * r1;
      rho_.row(i | m) = a(1, 0) * r0 + a(1, 1) * r1;
    }
    const C b00 = std::conj(a(0, 0)), b01 = std::conj(a(0, 1)), b10 = std::conj(a(1, 0)), b11 = std::conj(a(1, 1));
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (j & m) continue;
      const Eigen::VectorXcd c0 = rho_.col(j);
      const Eigen::VectorXcd c1 = rho_.col(j | m);
      rho_.col(j) = b00 * c0 + b01 * c1;
      rho_.col(j | m) = b10 * c0 + b11 * c1;
    }
    return;
  }
  if (qubits.size() == 2 && a.rows() == 4 && a.cols() == 4) {
    if (qubits[0] == qubits[1]) throw InvalidArgument("two-qubit operation needs distinct qubits");
    const Eigen::Index ma = mask_of(sites_, qubits[0]);
    const Eigen::Index mb = mask_of(sites_, qubits[1]);
    const Eigen::MatrixXcd conj_a = a.conjugate();
    std::array<Eigen::Index, 4> idx{};
    Eigen::MatrixXcd block(4, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      if ((i & ma) || (i & mb)) continue;
      idx = {i, i | mb, i | ma, i | ma | mb};
      for (int k = 0; k < 4; ++k) block.row(k) = rho_.row(idx[static_cast<std::size_t>(k)]);
      for (int k = 0; k < 4; ++k) rho_.row(idx[static_cast<std::size_t>(k)]) = a.row(k) * block;
    }
    Eigen::MatrixXcd cols(dim, 4);
    for (Eigen::Index j = 0; j < dim; ++j) {
      if ((j & ma) || (j & mb)) continue;
      idx = {j, j | mb, j | ma, j | ma | mb};
      for (int k = 0; k < 4; ++k) cols.col(k) = rho_.col(idx[static_cast<std::size_t>(k)]);
      for (int k = 0; k < 4; ++k) rho_.col(idx[static_cast<std::size_t>(k)]) = cols * conj_a.row(k).transpose();
    }
    return;
  }
  throw InvalidArgument("conjugate needs a 2x2 operator on one qubit or a 4x4 operator on two");
}

void DensityMatrix::apply_unitary(const Gate& g) {
  if (g.arity() == 1) {
    conjugate(g.unitary(), {g.targets[0]});
  } else {
    conjugate(g.unitary(), {g.targets[0], g.targets[1]});
  }
}

NoiseChannel NoiseChannel::depolarizing(int arity, double p) {
  if (arity != 1 && arity != 2) throw InvalidArgument("depolarizing channel acts on 1 or 2 qubits");
  if (!(p >= 0 && p <= 1)) throw InvalidArgument(fmt::format("depolarizing strength must be in [0, 1], got {}", p));
  NoiseChannel ch;
  ch.kind_ = Kind::Depolarizing;
  ch.arity_ = arity;
  ch.strength_ = p;
  const int terms = arity == 1 ? 4 : 16;
  for (const auto& s : enumerate_strings(arity)) {
    const double w = s.is_identity() ? 1 - p * (terms - 1) / terms : p / terms;
    const auto flat = dense_matrix(s);
    const Eigen::Index n = Eigen::Index{1} << arity;
    Eigen::MatrixXcd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) m(r, c) = flat[static_cast<std::size_t>(r * n + c)];
    }
    ch.kraus_.push_back(std::sqrt(w) * m);
  }
  return ch;
}

NoiseChannel NoiseChannel::amplitude_damping(double gamma) {
  if (!(gamma >= 0 && gamma <= 1)) throw InvalidArgument(fmt::format("damping must be in [0, 1], got {}", gamma));
  NoiseChannel ch;
  ch.kind_ = Kind::AmplitudeDamping;
  ch.arity_ = 1;
  ch.strength_ = gamma;
  Eigen::MatrixXcd k0(2, 2), k1(2, 2);
  k0 << 1, 0, 0, std::sqrt(1 - gamma);
  k1 << 0, std::sqrt(gamma), 0, 0;
  ch.kraus_ = {k0, k1};
  return ch;
}

NoiseChannel NoiseChannel::kraus(std::vector<Eigen::MatrixXcd> ops) {
  if (ops.empty()) throw InvalidArgument("Kraus channel needs at least one operator");
  const Eigen::Index n = ops.front().rows();
  if (n != 2 && n != 4) throw InvalidArgument("Kraus operators must be 2x2 or 4x4");
  for (const auto& k : ops) {
    if (k.rows() != n || k.cols() != n) throw InvalidArgument("Kraus operators must share one square shape");
  }
  NoiseChannel ch;
  ch.kind_ = Kind::Kraus;
  ch.arity_ = n == 2 ? 1 : 2;
  ch.kraus_ = std::move(ops);
  const double err = ch.completeness_error();
  if (err > 1e-10) throw InvalidArgument(fmt::format("Kraus operators violate completeness by {:.3e}", err));
  return ch;
}

double NoiseChannel::completeness_error() const {
  const Eigen::Index n = Eigen::Index{1} << arity_;
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& k : kraus_) sum += k.adjoint() * k;
  return (sum - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
}

void NoiseChannel::apply(DensityMatrix& state, const std::vector<int>& qubits) const {
  if (static_cast<int>(qubits.size()) != arity_) {
    throw InvalidArgument(fmt::format("{}-qubit channel applied to {} qubits", arity_, qubits.size()));
  }
  for (int q : qubits) {
    if (q < 0 || q >= state.sites()) throw InvalidArgument(fmt::format("qubit {} out of range", q));
  }
  auto& rho = state.rho_;
  const Eigen::Index dim = state.dim();
  if (kind_ == Kind::Depolarizing) {
    const double p = strength_;
    if (p == 0) return;
    if (arity_ == 1) {
      const Eigen::Index m = mask_of(state.sites(), qubits[0]);
      for (Eigen::Index c = 0; c < dim; ++c) {
        if (c & m) continue;
        for (Eigen::Index r = 0; r < dim; ++r) {
          if (r & m) continue;
          const C avg = 0.5 * (rho(r, c) + rho(r | m, c | m));
          rho(r, c) = (1 - p) * rho(r, c) + p * avg;
          rho(r | m, c | m) = (1 - p) * rho(r | m, c | m) + p * avg;
          rho(r | m, c) *= 1 - p;
          rho(r, c | m) *= 1 - p;
        }
      }
    } else {
      const Eigen::Index ma = mask_of(state.sites(), qubits[0]);
      const Eigen::Index mb = mask_of(state.sites(), qubits[1]);
      const std::array<Eigen::Index, 4> off{0, mb, ma, ma | mb};
      for (Eigen::Index c = 0; c < dim; ++c) {
        if ((c & ma) || (c & mb)) continue;
        for (Eigen::Index r = 0; r < dim; ++r) {
          if ((r & ma) || (r & mb)) continue;
          C avg{0, 0};
          for (auto o : off) avg += rho(r | o, c | o);
          avg *= 0.25;
          for (auto oc : off) {
            for (auto orow : off) {
              C& v = rho(r | orow, c | oc);
              v = orow == oc ? (1 - p) * v + p * avg : (1 - p) * v;
            }
          }
        }
      }
    }
    return;
  }
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
  const Eigen::MatrixXcd original = rho;
  for (const auto& k : kraus_) {
    rho = original;
    state.conjugate(k, qubits);
    acc += rho;
  }
  rho = std::move(acc);
}

NoiseModel NoiseModel::parse(std::string_view text) {
  NoiseModel m;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw InvalidArgument(fmt::format("noise config token '{}' is not key=value", tok));
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    try {
      std::size_t used = 0;
      if (key == "seed") {
        m.seed = std::stoull(val, &used);
      } else {
        const double v = std::stod(val, &used);
        if (key == "p1") {
          m.p1 = v;
        } else if (key == "p2") {
          m.p2 = v;
        } else if (key == "damping") {
          m.damping = v;
        } else {
          throw InvalidArgument(fmt::format("unknown noise key '{}'", key));
        }
      }
      if (used != val.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw InvalidArgument(fmt::format("invalid value '{}' for noise key '{}'", val, key));
    }
  }
  for (double v : {m.p1, m.p2, m.damping}) {
    if (!(v >= 0 && v <= 1)) throw InvalidArgument("noise strengths must lie in [0, 1]");
  }
  return m;
}

std::string NoiseModel::str() const {
  return fmt::format("p1={} p2={} damping={} seed={}", p1, p2, damping, seed);
}

void apply_gate(DensityMatrix& rho, const Gate& g, const NoiseChannel* noise) {
  rho.apply_unitary(g);
  if (!noise) return;
  if (noise->arity() == g.arity()) {
    noise->apply(rho, g.arity() == 1 ? std::vector<int>{g.targets[0]} : std::vector<int>{g.targets[0], g.targets[1]});
  } else if (noise->arity() == 1) {
    for (int i = 0; i < g.arity(); ++i) noise->apply(rho, {g.targets[static_cast<std::size_t>(i)]});
  } else {
    throw InvalidArgument("two-qubit noise cannot follow a one-qubit gate");
  }
}

void run_circuit(DensityMatrix& rho, const Circuit& c, const NoiseModel& model, bool validate) {
  if (c.sites != rho.sites()) throw InvalidArgument("circuit and state sizes differ");
  const auto dep1 = NoiseChannel::depolarizing(1, model.p1);
  const auto dep2 = NoiseChannel::depolarizing(2, model.p2);
  const auto damp = NoiseChannel::amplitude_damping(model.damping);
  for (const auto& layer : c.layers) {
    for (const auto& g : layer) {
      if (g.arity() == 1) {
        apply_gate(rho, g, model.p1 > 0 ? &dep1 : nullptr);
      } else {
        apply_gate(rho, g, model.p2 > 0 ? &dep2 : nullptr);
      }
      if (model.damping > 0) {
        for (int i = 0; i < g.arity(); ++i) damp.apply(rho, {g.targets[static_cast<std::size_t>(i)]});
      }
      if (validate) rho.validate();
    }
  }
}

std::vector<Gate> preparation_gates(const ProductState& state) {
  std::vector<Gate> gates;
  for (int q = 0; q < state.size(); ++q) {
    const auto& site = state.sites[static_cast<std::size_t>(q)];
    if (site.bit) gates.push_back(Gate::u3(q, std::numbers::pi, 0, std::numbers::pi));
    if (site.basis != Basis::Z) gates.push_back(Gate::h(q));
    if (site.basis == Basis::Y) gates.push_back(Gate::s(q));
  }
  return gates;
}

DensityMatrix prepare_product_state(const ProductState& state) {
  if (state.size() < 1) throw InvalidArgument("empty product state");
  DensityMatrix rho(state.size());
  for (const auto& g : preparation_gates(state)) rho.apply_unitary(g);
  return rho;
}

double expectation(const DensityMatrix& rho, const PauliString& s) {
  if (s.size() != rho.sites()) {
    throw InvalidArgument(fmt::format("state has {} qubits, string has {}", rho.sites(), s.size()));
  }
  const int l = s.size();
  const auto xm = static_cast<Eigen::Index>(to_basis_mask(s.x_bits(), l));
  const auto zm = to_basis_mask(s.z_bits(), l);
  const int ys = std::popcount(s.x_bits() & s.z_bits());
  constexpr C kPowers[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  // sigma |j> = i^{#Y} (-1)^{popcount(j & zmask)} |j ^ xmask>
  C acc{0, 0};
  const auto& m = rho.matrix();
  for (Eigen::Index j = 0; j < rho.dim(); ++j) {
    const double sign = (std::popcount(static_cast<std::uint32_t>(j) & zm) & 1) ? -1.0 : 1.0;
    acc += sign * m(j, j ^ xm);
  }
  return (kPowers[ys % 4] * acc).real();
}

std::vector<double> sample_shots(const DensityMatrix& rho, const std::vector<PauliString>& strings, int shots,
                                 std::uint64_t seed) {
  if (shots < 0) throw InvalidArgument("shot count must be nonnegative");
  const int l = rho.sites();
  std::vector<Pauli> basis(static_cast<std::size_t>(l), Pauli::I);
  for (const auto& s : strings) {
    if (s.size() != l) throw InvalidArgument("string length does not match the state");
    for (int q = 0; q < l; ++q) {
      const Pauli p = s.at(q);
      auto& b = basis[static_cast<std::size_t>(q)];
      if (p == Pauli::I) continue;
      if (b != Pauli::I && b != p) {
        throw InvalidArgument(fmt::format("strings need both {} and {} on qubit {}", to_char(b), to_char(p), q));
      }
      b = p;
    }
  }
  std::vector<double> out;
  out.reserve(strings.size());
  if (shots == 0) {
    for (const auto& s : strings) out.push_back(expectation(rho, s));
    return out;
  }
  DensityMatrix rotated = rho;
  for (int q = 0; q < l; ++q) {
    const Pauli b = basis[static_cast<std::size_t>(q)];
    if (b == Pauli::Y) rotated.apply_unitary(Gate::sdg(q));
    if (b == Pauli::X || b == Pauli::Y) rotated.apply_unitary(Gate::h(q));
  }
  std::vector<double> probs(static_cast<std::size_t>(rotated.dim()));
  for (Eigen::Index j = 0; j < rotated.dim(); ++j) {
    probs[static_cast<std::size_t>(j)] = std::max(0.0, rotated.matrix()(j, j).real());
  }
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> outcome(probs.begin(), probs.end());
  std::vector<int> counts(probs.size(), 0);
  for (int n = 0; n < shots; ++n) ++counts[outcome(rng)];
  for (const auto& s : strings) {
    const std::uint32_t support = to_basis_mask(s.support(), l);
    long long acc = 0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
      acc += (std::popcount(static_cast<std::uint32_t>(j) & support) & 1) ? -counts[j] : counts[j];
    }
    out.push_back(static_cast<double>(acc) / shots);
  }
  return out;
}

}  // namespace dhlab

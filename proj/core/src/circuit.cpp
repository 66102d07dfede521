#include "dhlab/circuit.hpp"

#include <charconv>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "dhlab/error.hpp"
#include "dhlab/pauli.hpp"

namespace dhlab {

using C = std::complex<double>;

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::U3: return "U3";
    case GateKind::CNOT: return "CNOT";
    case GateKind::H: return "H";
    case GateKind::S: return "S";
    case GateKind::Sdg: return "SDG";
  }
  return "?";
}

namespace {

void check_qubit(int q) {
  if (q < 0 || q >= kMaxSites) throw InvalidArgument(fmt::format("qubit index {} out of range", q));
}

Gate one_qubit(GateKind kind, int q) {
  check_qubit(q);
  Gate g;
  g.kind = kind;
  g.targets = {q, -1};
  return g;
}

}  // namespace

Gate Gate::u3(int q, double theta, double phi, double lambda) {
  Gate g = one_qubit(GateKind::U3, q);
  g.params = {theta, phi, lambda};
  return g;
}

Gate Gate::cnot(int control, int target) {
  check_qubit(control);
  check_qubit(target);
  if (control == target) throw InvalidArgument("CNOT control and target must differ");
  Gate g;
  g.kind = GateKind::CNOT;
  g.targets = {control, target};
  return g;
}

Gate Gate::h(int q) { return one_qubit(GateKind::H, q); }
Gate Gate::s(int q) { return one_qubit(GateKind::S, q); }
Gate Gate::sdg(int q) { return one_qubit(GateKind::Sdg, q); }

Eigen::MatrixXcd Gate::unitary() const {
  Eigen::MatrixXcd u;
  switch (kind) {
    case GateKind::U3: {
      const auto [theta, phi, lambda] = params;
      const double c = std::cos(theta / 2);
      const double s = std::sin(theta / 2);
      u.resize(2, 2);
      u << c, -std::polar(s, lambda), std::polar(s, phi), std::polar(c, phi + lambda);
      break;
    }
    case GateKind::H: {
      const double r = 1 / std::numbers::sqrt2;
      u.resize(2, 2);
      u << r, r, r, -r;
      break;
    }
    case GateKind::S:
      u.resize(2, 2);
      u << 1, 0, 0, C(0, 1);
      break;
    case GateKind::Sdg:
      u.resize(2, 2);
      u << 1, 0, 0, C(0, -1);
      break;
    case GateKind::CNOT:
      u = Eigen::MatrixXcd::Zero(4, 4);
      u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1;
      break;
  }
  return u;
}

Gate Gate::inverse() const {
  switch (kind) {
    case GateKind::U3: return u3(targets[0], -params[0], -params[2], -params[1]);
    case GateKind::S: return sdg(targets[0]);
    case GateKind::Sdg: return s(targets[0]);
    case GateKind::H:
    case GateKind::CNOT: return *this;
  }
  return *this;
}

std::size_t Circuit::gate_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.size();
  return n;
}

std::size_t Circuit::count(GateKind kind) const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    for (const auto& g : layer) n += g.kind == kind ? 1 : 0;
  }
  return n;
}

void Circuit::write(std::ostream& out) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (const auto& g : layers[i]) {
      out << i << ' ' << to_string(g.kind) << ' ' << g.targets[0];
      if (g.arity() == 2) out << ',' << g.targets[1];
      if (g.kind == GateKind::U3) out << fmt::format(" {:.17g} {:.17g} {:.17g}", g.params[0], g.params[1], g.params[2]);
      out << '\n';
    }
  }
}

std::string Circuit::str() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

Circuit Circuit::parse(std::string_view text, int sites, int depth) {
  Circuit c;
  c.sites = sites;
  c.depth = depth;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::size_t layer = 0;
    std::string kind, targets;
    if (!(ls >> layer >> kind >> targets)) throw InvalidArgument(fmt::format("circuit line {}: malformed", lineno));
    if (layer >= c.layers.size()) c.layers.resize(layer + 1);
    int a = -1, b = -1;
    const auto comma = targets.find(',');
    auto to_int = [&](std::string_view s) {
      int v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size() || v < 0 || v >= sites) {
        throw InvalidArgument(fmt::format("circuit line {}: bad target '{}'", lineno, s));
      }
      return v;
    };
    a = to_int(std::string_view(targets).substr(0, comma));
    if (comma != std::string::npos) b = to_int(std::string_view(targets).substr(comma + 1));
    Gate g;
    if (kind == "U3") {
      double t, p, l;
      if (!(ls >> t >> p >> l)) throw InvalidArgument(fmt::format("circuit line {}: U3 needs 3 angles", lineno));
      g = Gate::u3(a, t, p, l);
    } else if (kind == "CNOT") {
      if (b < 0) throw InvalidArgument(fmt::format("circuit line {}: CNOT needs two targets", lineno));
      g = Gate::cnot(a, b);
    } else if (kind == "H") {
      g = Gate::h(a);
    } else if (kind == "S") {
      g = Gate::s(a);
    } else if (kind == "SDG") {
      g = Gate::sdg(a);
    } else {
      throw InvalidArgument(fmt::format("circuit line {}: unknown gate '{}'", lineno, kind));
    }
    if (g.arity() == 1 && b >= 0) throw InvalidArgument(fmt::format("circuit line {}: too many targets", lineno));
    c.layers[layer].push_back(g);
  }
  return c;
}

namespace {

void check_waiting_args(int sites, int t) {
  if (sites < 1 || sites > kMaxSites) throw InvalidArgument("number of sites out of range");
  if (t < 0) throw InvalidArgument(fmt::format("waiting depth must be nonnegative, got {}", t));
}

}  // namespace

Circuit build_waiting_circuit_w1(int sites, int t, std::uint64_t seed) {
  check_waiting_args(sites, t);
  std::mt19937_64 rng(seed);
  Circuit c;
  c.sites = sites;
  c.depth = t;
  c.layers.resize(static_cast<std::size_t>(2 * t));
  for (int i = 0; i < t; ++i) {
    auto& fwd = c.layers[static_cast<std::size_t>(i)];
    for (int q = 0; q < sites; ++q) fwd.push_back(haar_u3(q, rng));
    auto& inv = c.layers[static_cast<std::size_t>(2 * t - 1 - i)];
    for (auto it = fwd.rbegin(); it != fwd.rend(); ++it) inv.push_back(it->inverse());
  }
  return c;
}

Circuit build_waiting_circuit_w2(int sites, int t, const Topology& topo, std::uint64_t seed) {
  check_waiting_args(sites, t);
  if (topo.sites() != sites) throw InvalidArgument("topology size does not match the number of qubits");
  if (topo.edges().empty()) throw InvalidArgument("W2 needs a topology with at least one edge");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, topo.edges().size() - 1);
  std::bernoulli_distribution flip(0.5);
  Circuit c;
  c.sites = sites;
  c.depth = t;
  c.layers.resize(static_cast<std::size_t>(2 * t));
  for (int i = 0; i < t; ++i) {
    auto& fwd = c.layers[static_cast<std::size_t>(i)];
    for (int q = 0; q < sites; ++q) fwd.push_back(haar_u3(q, rng));
    auto [a, b] = topo.edges()[pick(rng)];
    if (flip(rng)) std::swap(a, b);
    fwd.push_back(Gate::cnot(a, b));
    auto& inv = c.layers[static_cast<std::size_t>(2 * t - 1 - i)];
    for (auto it = fwd.rbegin(); it != fwd.rend(); ++it) inv.push_back(it->inverse());
  }
  return c;
}

}  // namespace dhlab

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dhlab/topology.hpp"

namespace dhlab {

enum class GateKind : std::uint8_t { U3, CNOT, H, S, Sdg };

std::string_view to_string(GateKind kind);

struct Gate {
  GateKind kind = GateKind::H;
  std::array<int, 2> targets{0, -1};  // CNOT: {control, target}
  std::array<double, 3> params{0, 0, 0};  // U3: theta, phi, lambda

  static Gate u3(int q, double theta, double phi, double lambda);
  static Gate cnot(int control, int target);
  static Gate h(int q);
  static Gate s(int q);
  static Gate sdg(int q);

  int arity() const { return kind == GateKind::CNOT ? 2 : 1; }
  /// 2x2 for one-qubit gates; 4x4 in (control, target) order for CNOT.
  Eigen::MatrixXcd unitary() const;
  Gate inverse() const;

  friend bool operator==(const Gate&, const Gate&) = default;
};

/// Haar-random one-qubit unitary up to global phase.
template <typename Rng>
Gate haar_u3(int q, Rng& rng);

/// Layered circuit. For waiting circuits `depth` is t and `layers` holds the
/// t forward layers followed by the t inverse layers. Gates inside a layer
/// run in list order.
struct Circuit {
  int sites = 0;
  int depth = 0;
  std::vector<std::vector<Gate>> layers;

  std::size_t gate_count() const;
  std::size_t count(GateKind kind) const;

  /// One line per gate: "layer_index gate_kind targets params", with
  /// targets comma separated and angles printed round-trip exact.
  void write(std::ostream& out) const;
  std::string str() const;
  static Circuit parse(std::string_view text, int sites, int depth = 0);
};

/// C^(t) of per-qubit Haar U3 layers followed by its exact inverse.
Circuit build_waiting_circuit_w1(int sites, int t, std::uint64_t seed);

/// As W1, each layer ending with one CNOT on a uniformly drawn edge of
/// `topo` with uniformly drawn orientation; the inverse layer starts with
/// that CNOT and then undoes the U3 gates.
Circuit build_waiting_circuit_w2(int sites, int t, const Topology& topo, std::uint64_t seed);

template <typename Rng>
Gate haar_u3(int q, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double phi = 2 * std::numbers::pi * unit(rng);
  const double lambda = 2 * std::numbers::pi * unit(rng);
  return Gate::u3(q, 2 * std::asin(std::sqrt(u)), phi, lambda);
}

}  // namespace dhlab

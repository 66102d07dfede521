#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace dhlab {

struct TraceMeta {
  std::string observable;
  std::string state;
  int shots = 0;  // 0 = exact expectation values
  std::uint64_t seed = 0;
};

/// Uniformly sampled signal; sample n sits at time start + n * dt.
struct TimeTrace {
  std::vector<std::complex<double>> values;
  double start = 0.0;
  double dt = 1.0;
  TraceMeta meta;

  std::size_t size() const { return values.size(); }
  double time(std::size_t n) const { return start + static_cast<double>(n) * dt; }
};

/// Integer time grid in units of circuit layers: t0, t0 + step, ...
struct TimeGrid {
  int t0 = 0;
  int step = 1;
  int count = 1;

  int at(int n) const { return t0 + n * step; }
  std::vector<int> values() const;
};

}  // namespace dhlab

#include "dhlab/harmonic_inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "dhlab/error.hpp"

namespace dhlab {

using std::numbers::pi;

HinvResult harmonic_inversion(const TimeTrace& trace, const HinvParams& params) {
  const int n = static_cast<int>(trace.size());
  if (n < 8) throw InvalidArgument(fmt::format("harmonic inversion needs at least 8 samples, got {}", n));
  if (!(trace.dt > 0)) throw InvalidArgument("sample spacing must be positive");
  const int limit = n / 4;
  const int basis = params.max_modes > 0 ? params.max_modes : limit;
  if (basis > limit) {
    throw InvalidArgument(fmt::format("max_modes {} exceeds the information bound length/4 = {}", basis, limit));
  }
  const double nyquist = pi / trace.dt;
  const double wmin = params.omega_min.value_or(-0.5 * nyquist);
  const double wmax = params.omega_max.value_or(0.5 * nyquist);
  if (!(wmin < wmax) || wmin < -nyquist * (1 + 1e-12) || wmax > nyquist * (1 + 1e-12)) {
    throw InvalidArgument(fmt::format("window [{}, {}] must be nonempty and inside [-{}, {}]", wmin, wmax, nyquist, nyquist));
  }

  HinvResult result;
  result.basis_size = basis;

  const auto& c = trace.values;
  double cmax = 0.0;
  for (const auto& v : c) cmax = std::max(cmax, std::abs(v));
  if (cmax == 0.0) return result;

  // Uses c_0 .. c_{2K+2}: U0, U1 and the U2 consistency check.
  const int kdim = (n - 3) / 2 + 1;
  ComplexMatrix z(kdim, basis);
  for (int j = 0; j < basis; ++j) {
    const double phi = (wmin + (j + 0.5) * (wmax - wmin) / basis) * trace.dt;
    for (int r = 0; r < kdim; ++r) z(r, j) = std::polar(1.0, -phi * r);
  }
  auto hankel = [&](int shift) {
    ComplexMatrix h(kdim, kdim);
    for (int a = 0; a < kdim; ++a) {
      for (int b = 0; b < kdim; ++b) h(a, b) = c[static_cast<std::size_t>(a + b + shift)];
    }
    return h;
  };
  const ComplexMatrix h0 = hankel(0);
  const ComplexMatrix u0 = z.transpose() * h0 * z;
  const ComplexMatrix u1 = z.transpose() * hankel(1) * z;
  const ComplexMatrix u2 = z.transpose() * hankel(2) * z;
  ComplexVector head(kdim);
  for (int r = 0; r < kdim; ++r) head[r] = c[static_cast<std::size_t>(r)];
  const ComplexVector g = z.transpose() * head;

  Eigen::JacobiSVD<ComplexMatrix> svd(u0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  if (smax <= 1e-300) return result;
  int rank = 0;
  while (rank < sv.size() && sv(rank) > params.svd_cutoff * smax) ++rank;
  if (rank == 0) throw NumericalFault("harmonic inversion overlap matrix has no usable singular values");
  if (params.noise_rank) {
    // Hard threshold 2.858 * median singular value of the square data matrix
    // (Gavish-Donoho, unknown noise level) bounds the number of resolvable
    // components; on clean signals the median sits at roundoff.
    Eigen::JacobiSVD<ComplexMatrix> hsvd(h0);
    Eigen::VectorXd hs = hsvd.singularValues();
    std::vector<double> sorted(hs.data(), hs.data() + hs.size());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double threshold = 2.858 * sorted[sorted.size() / 2];
    int signal = 0;
    while (signal < hs.size() && hs(signal) > threshold) ++signal;
    rank = std::min(rank, std::max(signal, 1));
  }
  result.rank = rank;
  result.condition = smax / sv(rank - 1);

  const ComplexMatrix a = svd.matrixU().leftCols(rank);
  const ComplexMatrix b = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd inv_s = sv.head(rank).cwiseInverse();
  const ComplexMatrix reduced = inv_s.asDiagonal() * (a.adjoint() * u1 * b);
  Eigen::ComplexEigenSolver<ComplexMatrix> es(reduced);
  if (es.info() != Eigen::Success) throw NumericalFault("harmonic inversion eigenproblem did not converge");

  for (int k = 0; k < rank; ++k) {
    const std::complex<double> u = es.eigenvalues()[k];
    if (!(std::abs(u) > 0) || !std::isfinite(std::abs(u))) continue;
    const ComplexVector vec = b * es.eigenvectors().col(k);
    const std::complex<double> lambda = std::log(u) / trace.dt;
    if (lambda.imag() < wmin || lambda.imag() > wmax) continue;

    const ComplexVector u0b = u0 * vec;
    const double denom = std::norm(u) * u0b.norm();
    const double err = denom > 0 ? (u2 * vec - u * u * u0b).norm() / denom : std::numeric_limits<double>::infinity();

    const std::complex<double> s = vec.transpose() * u0b;
    std::complex<double> amp{0, 0};
    if (std::abs(s) > 0) {
      const std::complex<double> proj = vec.transpose() * g;
      amp = proj * proj / s;
    }
    Mode m;
    m.lambda = lambda;
    m.amplitude = amp * std::exp(-lambda * trace.start);
    m.error_metric = err;
    result.modes.push_back(m);
  }
  std::sort(result.modes.begin(), result.modes.end(),
            [](const Mode& x, const Mode& y) { return std::abs(x.amplitude) > std::abs(y.amplitude); });
  return result;
}

std::vector<Mode> filter_spurious(const std::vector<Mode>& modes, double amp_floor, double err_ceiling,
                                  double positivity_tolerance) {
  if (amp_floor < 0 || err_ceiling < 0) throw InvalidArgument("filter thresholds must be nonnegative");
  std::vector<Mode> out;
  for (const auto& m : modes) {
    if (std::abs(m.amplitude) < amp_floor) continue;
    if (!(m.error_metric <= err_ceiling)) continue;
    if (m.lambda.real() > positivity_tolerance) continue;
    out.push_back(m);
  }
  return out;
}

std::vector<Mode> filter_spurious(const std::vector<Mode>& modes, const FilterParams& params) {
  double largest = 0.0;
  for (const auto& m : modes) largest = std::max(largest, std::abs(m.amplitude));
  return filter_spurious(modes, params.amp_floor_fraction * largest, params.err_ceiling, params.positivity_tolerance);
}

std::vector<Mode> refit_amplitudes(const TimeTrace& trace, std::vector<Mode> modes) {
  if (modes.empty() || trace.size() == 0) return modes;
  const auto rows = static_cast<Eigen::Index>(trace.size());
  const auto cols = static_cast<Eigen::Index>(modes.size());
  ComplexMatrix v(rows, cols);
  ComplexVector y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double t = trace.time(static_cast<std::size_t>(r));
    y[r] = trace.values[static_cast<std::size_t>(r)];
    for (Eigen::Index k = 0; k < cols; ++k) v(r, k) = std::exp(modes[static_cast<std::size_t>(k)].lambda * t);
  }
  const ComplexVector amp = v.completeOrthogonalDecomposition().solve(y);
  for (Eigen::Index k = 0; k < cols; ++k) modes[static_cast<std::size_t>(k)].amplitude = amp[k];
  return modes;
}

TimeTrace reconstruct(const std::vector<Mode>& modes, const std::vector<double>& times) {
  TimeTrace out;
  if (times.size() >= 2) out.dt = times[1] - times[0];
  if (!times.empty()) out.start = times.front();
  out.values.reserve(times.size());
  for (double t : times) {
    std::complex<double> v{0, 0};
    for (const auto& m : modes) v += m.amplitude * std::exp(m.lambda * t);
    out.values.push_back(v);
  }
  return out;
}

TimeTrace reconstruct(const std::vector<Mode>& modes, const TimeTrace& like) {
  std::vector<double> times(like.size());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = like.time(i);
  TimeTrace out = reconstruct(modes, times);
  out.start = like.start;
  out.dt = like.dt;
  out.meta = like.meta;
  return out;
}

ExponentialFit fit_single_exponential(const TimeTrace& trace) {
  const std::size_t n = trace.size();
  if (n < 2) throw InvalidArgument("exponential fit needs at least 2 samples");
  std::vector<double> t(n), y(n);
  std::size_t positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = trace.time(i);
    y[i] = trace.values[i].real();
    if (y[i] > 0) ++positive;
  }
  if (2 * positive <= n) throw InvalidArgument("exponential fit needs a mostly positive signal");

  // Start from a weighted log-linear regression over positive samples.
  double sw = 0, st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] <= 0) continue;
    const double w = y[i] * y[i];
    const double l = std::log(y[i]);
    sw += w; st += w * t[i]; sl += w * l; stt += w * t[i] * t[i]; stl += w * t[i] * l;
  }
  const double det = sw * stt - st * st;
  double lambda = det > 0 ? (sw * stl - st * sl) / det : 0.0;
  double amp = std::exp(det > 0 ? (sl - lambda * st) / sw : sl / sw);

  auto cost = [&](double c, double lam) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - c * std::exp(lam * t[i]);
      s += r * r;
    }
    return s;
  };

  // Levenberg-Marquardt on (c, lambda).
  double mu = 1e-3;
  double current = cost(amp, lambda);
  for (int iter = 0; iter < 500; ++iter) {
    double a11 = 0, a12 = 0, a22 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(lambda * t[i]);
      const double r = y[i] - amp * e;
      const double j1 = e;
      const double j2 = amp * t[i] * e;
      a11 += j1 * j1; a12 += j1 * j2; a22 += j2 * j2;
      g1 += j1 * r; g2 += j2 * r;
    }
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      const double b11 = a11 * (1 + mu);
      const double b22 = a22 * (1 + mu);
      const double d = b11 * b22 - a12 * a12;
      if (d == 0) { mu *= 10; continue; }
      const double dc = (b22 * g1 - a12 * g2) / d;
      const double dl = (b11 * g2 - a12 * g1) / d;
      const double next = cost(amp + dc, lambda + dl);
      if (next <= current) {
        amp += dc;
        lambda += dl;
        const bool tiny = std::abs(dl) <= 1e-15 * std::max(1.0, std::abs(lambda)) &&
                          std::abs(dc) <= 1e-15 * std::max(1.0, std::abs(amp));
        current = next;
        mu = std::max(mu / 10, 1e-12);
        accepted = true;
        if (tiny) iter = 1000;
      } else {
        mu *= 10;
      }
    }
    if (!accepted) break;
  }

  ExponentialFit fit;
  fit.mode.lambda = {lambda, 0.0};
  fit.mode.amplitude = {amp, 0.0};
  fit.rms_residual = std::sqrt(current / static_cast<double>(n));
  fit.non_decaying = lambda > 1e-8;
  return fit;
}

}  // namespace dhlab

#pragma once

#include <optional>
#include <vector>

#include "dhlab/spectral.hpp"
#include "dhlab/time_trace.hpp"

namespace dhlab {

struct HinvParams {
  /// Angular-frequency window for Im(lambda); defaults to [-pi/(2dt), pi/(2dt)].
  std::optional<double> omega_min;
  std::optional<double> omega_max;
  /// Basis size inside the window; 0 means floor(length / 4).
  int max_modes = 0;
  /// Singular values of the overlap matrix below this fraction of the
  /// largest are discarded.
  double svd_cutoff = 1e-12;
  /// Also cap the rank at the number of data-matrix singular values above
  /// the noise threshold estimated from their median.
  bool noise_rank = true;
};

struct HinvResult {
  std::vector<Mode> modes;  // amplitudes referenced to t = 0
  int basis_size = 0;
  int rank = 0;             // retained singular values of the overlap matrix
  double condition = 0.0;   // sigma_max / smallest retained sigma
};

/// Filter diagonalization: Fourier-filtered Krylov basis on the window, SVD
/// regularized generalized eigenproblem U1 b = u U0 b, u = exp(lambda dt).
/// error_metric is the relative residual ||U2 b - u^2 U0 b|| / (|u|^2 ||U0 b||).
/// Throws InvalidArgument when max_modes exceeds length/4 or the window leaves
/// the Nyquist band; a signal without content in the window yields no modes.
HinvResult harmonic_inversion(const TimeTrace& trace, const HinvParams& params = {});

struct FilterParams {
  double amp_floor_fraction = 0.02;  // of the largest |c|
  double err_ceiling = 0.3;
  double positivity_tolerance = 1e-6;  // largest admissible Re(lambda)
};

/// Keeps modes with |c| >= amp_floor, error_metric <= err_ceiling and
/// Re(lambda) <= positivity_tolerance.
std::vector<Mode> filter_spurious(const std::vector<Mode>& modes, double amp_floor, double err_ceiling,
                                  double positivity_tolerance = 1e-6);

/// filter_spurious with amp_floor relative to the largest amplitude.
std::vector<Mode> filter_spurious(const std::vector<Mode>& modes, const FilterParams& params = {});

/// Least-squares amplitudes for fixed lambdas over the whole trace.
std::vector<Mode> refit_amplitudes(const TimeTrace& trace, std::vector<Mode> modes);

/// sum_n c_n e^{lambda_n t} at the given times.
TimeTrace reconstruct(const std::vector<Mode>& modes, const std::vector<double>& times);
/// Same on the sampling grid of `like`.
TimeTrace reconstruct(const std::vector<Mode>& modes, const TimeTrace& like);

struct ExponentialFit {
  Mode mode;             // real lambda and amplitude
  bool non_decaying = false;
  double rms_residual = 0.0;
};

/// Least-squares fit of y(t) ~ c e^{lambda t} with real lambda, c.
/// Throws InvalidArgument if most samples are not positive.
ExponentialFit fit_single_exponential(const TimeTrace& trace);

}  // namespace dhlab

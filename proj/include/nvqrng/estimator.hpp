#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nvqrng/timestamps.hpp"

namespace nvqrng {

/// 50/50 beamsplitter: every event goes to exactly one arm by a fair coin.
std::pair<TimestampStream, TimestampStream> hbt_split(const TimestampStream& stream,
                                                      std::uint64_t seed);

/// Normalized coincidence histogram over signed delays tau = t_b - t_a.
struct G2Histogram {
  std::vector<double> tau_ns;
  std::vector<double> g2;
  std::vector<std::uint64_t> counts;
  double window_ns = 1.0;
  double total_time_s = 0.0;
  std::uint64_t counts_det0 = 0;
  std::uint64_t counts_det1 = 0;

  /// Coincidences expected per window for uncorrelated arms: C0 C1 dt / T.
  double expected_uncorrelated() const noexcept;
};

/// Multi-start multi-stop coincidence counts: every pair (a_i, b_j) whose
/// delay falls in a window [k W - W/2, k W + W/2), k = -half_bins..half_bins.
std::vector<std::uint64_t> coincidence_counts(std::span<const std::uint64_t> a,
                                              std::span<const std::uint64_t> b,
                                              std::uint64_t window_ps, int half_bins);

namespace reference {
std::vector<std::uint64_t> coincidence_counts(std::span<const std::uint64_t> a,
                                              std::span<const std::uint64_t> b,
                                              std::uint64_t window_ps, int half_bins);
}  // namespace reference

/// Throws InputError for an empty or unsorted stream.
G2Histogram g2_histogram(const TimestampStream& a, const TimestampStream& b, double window_ns,
                         double max_tau_ns, double total_time_s);

enum class AverageMode {
  normalized,  // equal-weight mean of g2 values
  raw_counts,  // summed counts renormalized with summed C0, C1, T
};

/// Histograms must share the same delay grid.
G2Histogram average_histograms(std::span<const G2Histogram> runs, AverageMode mode);

/// ρ = S / (S + B) with S = total - background.
double estimate_rho(double signal_plus_background_rate, double background_rate);

/// Fixed-shelving-ratio model fitted per emitter count:
/// g2 = 1 - (rho^2/N) (beta e^{-gamma|tau|} - (beta-1) e^{-gamma|tau|/20}).
double g2_fit_model(double tau_ns, int n_emitters, double gamma, double beta, double rho);

struct FitOptions {
  int n_max = 128;
  double fit_range_ns = 200.0;
  int max_iterations = 500;
};

struct FitResult {
  int n_emitters = 0;
  double gamma = 0.0;
  double beta = 1.0;
  double rho_used = 1.0;
  double residual_sum_squares = 0.0;
  double gamma_stderr = 0.0;
  double beta_stderr = 0.0;
  /// Residual for N = 1..n_max (index N-1); +inf where the fit failed.
  std::vector<double> residual_by_n;
};

/// Damped Gauss-Newton over (gamma, beta) for each N in [1, n_max]; returns
/// the N with the smallest residual, ties to the smaller N. Throws FitError
/// with per-N diagnostics when no N converges.
FitResult fit_g2(const G2Histogram& hist, double rho, const FitOptions& options = {});
FitResult fit_g2(const G2Histogram& hist, double rho, int n_max);

/// "tau_ns<TAB>g2<TAB>raw_count" rows after '#' header lines holding the
/// normalization inputs.
void write_histogram(std::ostream& out, const G2Histogram& hist);
G2Histogram read_histogram(std::istream& in);

/// key=value lines.
std::string format_fit_report(const FitResult& fit);

}  // namespace nvqrng

#pragma once

#include <cstdint>
#include <vector>

#include "nvqrng/model.hpp"

namespace nvqrng {

/// Periodic reference interval split into equal bins; all times in ps.
struct BinningConfig {
  std::int64_t period_ps;
  std::uint32_t n_bins;
  std::int64_t bin_width_ps;

  /// Throws ConfigError unless n_bins is a power of two >= 2 and divides the
  /// period exactly.
  static BinningConfig make(std::int64_t period_ps, std::uint32_t n_bins);

  /// 12.8 ns period, 256 bins of 50 ps.
  static BinningConfig default_preset() { return make(12800, 256); }

  int bits_per_symbol() const noexcept;
  double bin_width_ns() const noexcept { return static_cast<double>(bin_width_ps) * 1e-3; }
  double period_ns() const noexcept { return static_cast<double>(period_ps) * 1e-3; }
};

struct BinDistribution {
  std::vector<double> probabilities;
};

/// Probability that the first photon of a period falls in bin i; geometric in
/// i with ratio P^(N)(0) over one bin width.
BinDistribution bin_distribution(const EmitterParams& params, const FluxSpec& flux,
                                 const BinningConfig& cfg);

/// -log_M(p_1) for N identical emitters.
double min_entropy(const EmitterParams& params, const FluxSpec& flux, const BinningConfig& cfg);

/// Single-emitter closed form -log_M((P(1)+P(2)) / (1 - P(0)^M)); ignores N in params.
double min_entropy_single_emitter(const EmitterParams& params, const FluxSpec& flux,
                                  const BinningConfig& cfg);

/// Coherent-source min-entropy for total flux lambda (ns^-1).
double min_entropy_coherent(double lambda_per_ns, const BinningConfig& cfg);

/// Bin distribution of the only photon in a period when bins are independent
/// with empty probability p_empty and single-photon probability p_one. The
/// unsimplified ratio is evaluated; the result is uniform for any inputs.
BinDistribution conditional_single_photon_bins(double p_empty, double p_one,
                                               std::uint32_t n_bins);

}  // namespace nvqrng

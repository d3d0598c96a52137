#include "nvqrng/entropy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nvqrng/errors.hpp"
#include "numeric.hpp"

namespace nvqrng {

BinningConfig BinningConfig::make(std::int64_t period_ps, std::uint32_t n_bins) {
  if (n_bins < 2 || !std::has_single_bit(n_bins)) {
    throw ConfigError("binning: number of bins must be a power of two >= 2");
  }
  if (period_ps <= 0 || period_ps % static_cast<std::int64_t>(n_bins) != 0) {
    throw ConfigError("binning: period must be a positive multiple of the bin count");
  }
  return BinningConfig{period_ps, n_bins, period_ps / static_cast<std::int64_t>(n_bins)};
}

int BinningConfig::bits_per_symbol() const noexcept { return std::countr_zero(n_bins); }

namespace {

// log P^(N)(0) and the multi-photon mass over one bin.
struct BinOccupancy {
  double log_empty;
  double occupied;
};

BinOccupancy bin_occupancy(const EmitterParams& params, const FluxSpec& flux,
                           const BinningConfig& cfg) {
  const PhotonNumberDist single = photon_number_single(cfg.bin_width_ns(), flux, params);
  const int n = params.n_emitters();
  return {n * std::log1p(-single.p_any), photon_number_multi_nonzero(n, single)};
}

// log of 1 - P0^M given log P0.
double log_not_all_empty(double log_empty, std::uint32_t n_bins) {
  return std::log(-std::expm1(static_cast<double>(n_bins) * log_empty));
}

}  // namespace

BinDistribution bin_distribution(const EmitterParams& params, const FluxSpec& flux,
                                 const BinningConfig& cfg) {
  const BinOccupancy occ = bin_occupancy(params, flux, cfg);
  const double log_first = std::log(occ.occupied) - log_not_all_empty(occ.log_empty, cfg.n_bins);
  BinDistribution out;
  out.probabilities.resize(cfg.n_bins);
  for (std::uint32_t i = 0; i < cfg.n_bins; ++i) {
    out.probabilities[i] = std::exp(log_first + static_cast<double>(i) * occ.log_empty);
  }
  return out;
}

double min_entropy(const EmitterParams& params, const FluxSpec& flux, const BinningConfig& cfg) {
  const BinOccupancy occ = bin_occupancy(params, flux, cfg);
  const double log_p1 = std::log(occ.occupied) - log_not_all_empty(occ.log_empty, cfg.n_bins);
  return -log_p1 / std::log(static_cast<double>(cfg.n_bins));
}

double min_entropy_single_emitter(const EmitterParams& params, const FluxSpec& flux,
                                  const BinningConfig& cfg) {
  const PhotonNumberDist d = photon_number_single(cfg.bin_width_ns(), flux, params);
  const double log_p1 =
      std::log(d.p1 + d.p2) - log_not_all_empty(std::log1p(-d.p_any), cfg.n_bins);
  return -log_p1 / std::log(static_cast<double>(cfg.n_bins));
}

double min_entropy_coherent(double lambda_per_ns, const BinningConfig& cfg) {
  if (!(lambda_per_ns > 0.0)) {
    throw std::domain_error("min_entropy_coherent: lambda must be positive");
  }
  const double x = lambda_per_ns * cfg.period_ns();
  const double log_m = std::log(static_cast<double>(cfg.n_bins));
  return 1.0 + std::log(-std::expm1(-x)) / log_m - std::log(x) / log_m;
}

BinDistribution conditional_single_photon_bins(double p_empty, double p_one,
                                               std::uint32_t n_bins) {
  if (!(p_empty > 0.0 && p_empty < 1.0)) {
    throw std::domain_error("conditional_single_photon_bins: p_empty must lie in (0, 1)");
  }
  if (!(p_one > 0.0 && p_one <= 1.0 - p_empty)) {
    throw std::domain_error("conditional_single_photon_bins: need 0 < p_one <= 1 - p_empty");
  }
  if (n_bins < 1) {
    throw std::domain_error("conditional_single_photon_bins: need at least one bin");
  }
  // Numerator of bin i: empty bins before, one photon in i, empty bins after.
  const double log_empty = std::log(p_empty);
  const double log_one = std::log(p_one);
  std::vector<double> log_num(n_bins);
  for (std::uint32_t i = 0; i < n_bins; ++i) {
    const double before = static_cast<double>(i);
    const double after = static_cast<double>(n_bins - 1 - i);
    log_num[i] = before * log_empty + log_one + after * log_empty;
  }
  const double peak = *std::max_element(log_num.begin(), log_num.end());
  detail::CompensatedSum denom;
  for (double l : log_num) {
    denom.add(std::exp(l - peak));
  }
  BinDistribution out;
  out.probabilities.resize(n_bins);
  for (std::uint32_t i = 0; i < n_bins; ++i) {
    out.probabilities[i] = std::exp(log_num[i] - peak) / denom.value();
  }
  return out;
}

}  // namespace nvqrng

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nvqrng/model.hpp"
#include "nvqrng/rng.hpp"
#include "nvqrng/timestamps.hpp"

namespace nvqrng {

/// Microscopic rates (ns^-1) of the ground / excited / shelving chain. A photon
/// is emitted on every excited -> ground transition.
struct CtmcRates {
  double r_excite;    // ground -> excited
  double r_radiate;   // excited -> ground
  double r_shelve;    // excited -> shelf; zero is the two-level limit
  double r_deshelve;  // shelf -> ground

  /// Throws std::invalid_argument unless r_excite, r_radiate, r_deshelve > 0,
  /// 0 <= r_shelve < r_radiate.
  void validate() const;
};

/// Biexponential parameters of the chain's normalized emission correlation,
/// g2(tau) = 1 - beta e^{-gamma1 tau} + (beta - 1) e^{-gamma2 tau}.
struct LumpedG2 {
  double gamma1;
  double gamma2;
  double beta;
};

/// Closed-form eigen-decomposition of the 3-state generator.
LumpedG2 ctmc_lumped(const CtmcRates& rates);

/// Probability of being excited in steady state.
double ctmc_excited_population(const CtmcRates& rates);

/// Mean photon emission rate in ns^-1.
double ctmc_emission_rate(const CtmcRates& rates);

/// p_excited(tau | ground at 0) / p_excited(steady state). Uses the
/// repeated-eigenvalue limit when the two decay rates coincide.
double ctmc_g2(const CtmcRates& rates, double tau_ns);

/// Rates whose emission correlation has exactly the requested (gamma1,
/// gamma2, beta), under the convention r_excite = r_radiate. Throws
/// InfeasibleError carrying the nearest achievable beta when no valid chain
/// exists.
CtmcRates calibrate_rates(double gamma1, double gamma2, double beta);
CtmcRates calibrate_rates(const EmitterParams& target);

struct DetectorModel {
  std::uint64_t dead_time_ps = 24000;
  double jitter_fwhm_ps = 350.0;
  double dark_rate_per_s = 50.0;
  /// Extra detection loss applied to signal and background alike.
  double efficiency = 1.0;
  std::uint64_t resolution_ps = 25;

  void validate() const;
  double jitter_sigma_ps() const noexcept;
};

/// Exact jump-by-jump simulation of one emitter started in the ground state;
/// every emission is recorded. Reference path for the thinned sampler.
TimestampStream simulate_emitter(const CtmcRates& rates, std::uint64_t duration_ps,
                                 std::uint64_t seed);

/// Emissions of one emitter, each kept independently with probability
/// keep_probability. Skips unrecorded emission and shelving cycles in
/// aggregate (gamma / binomial / geometric draws), so cost scales with the
/// number of kept photons; the output law matches Bernoulli thinning of
/// simulate_emitter.
std::vector<std::uint64_t> simulate_emitter_thinned(const CtmcRates& rates,
                                                    double keep_probability,
                                                    std::uint64_t duration_ps, Rng& rng);

/// Homogeneous Poisson arrivals.
TimestampStream simulate_poisson(double rate_per_s, std::uint64_t duration_ps,
                                 std::uint64_t seed);

/// Poisson light switched by a stationary on/off telegraph process: a
/// strongly bunched, stationary test source.
TimestampStream simulate_blinking(double on_rate_per_s, double mean_on_ps, double mean_off_ps,
                                  std::uint64_t duration_ps, std::uint64_t seed);

/// Gaussian jitter, removal of events outside [0, duration], flooring to the
/// resolution grid, sort.
std::vector<std::uint64_t> jitter_and_quantize(std::vector<std::uint64_t> ts,
                                               const DetectorModel& detector,
                                               std::uint64_t duration_ps, Rng& rng);

/// Drops every event closer than dead_time_ps to the last accepted one.
/// Identical timestamps always collapse to one event.
std::vector<std::uint64_t> apply_dead_time(std::span<const std::uint64_t> sorted,
                                           std::uint64_t dead_time_ps);

/// Per-origin event counts before dead-time censoring.
struct RegionCounts {
  std::uint64_t signal = 0;
  std::uint64_t background = 0;
  std::uint64_t dark = 0;
};

struct RegionSimulation {
  TimestampStream stream;
  RegionCounts counts;
  CtmcRates rates;
  double keep_probability;
  double background_rate_per_s;
};

/// Background rate making signal / (signal + background) = rho, in counts/s.
double background_rate_per_s(const EmitterParams& params, const FluxSpec& flux,
                             double efficiency);

/// N thinned emitters + background + dark counts through the detector model.
/// Per-emitter sub-streams use seeds derived from the master seed and may be
/// generated concurrently; the result does not depend on the thread count.
/// Throws InfeasibleError when lambda exceeds the emitter's emission rate.
RegionSimulation simulate_region_detailed(const EmitterParams& params, const FluxSpec& flux,
                                          const DetectorModel& detector,
                                          std::uint64_t duration_ps, std::uint64_t seed);

TimestampStream simulate_region(const EmitterParams& params, const FluxSpec& flux,
                                const DetectorModel& detector, std::uint64_t duration_ps,
                                std::uint64_t seed);

}  // namespace nvqrng

#include "nvqrng/simulator.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nvqrng/errors.hpp"

namespace nvqrng {

void CtmcRates::validate() const {
  if (!(r_excite > 0.0) || !(r_radiate > 0.0) || !(r_deshelve > 0.0) || !(r_shelve >= 0.0)) {
    throw std::invalid_argument("CtmcRates: rates must be positive (shelving may be zero)");
  }
  if (!(r_shelve < r_radiate)) {
    throw std::invalid_argument("CtmcRates: shelving must be slower than radiative decay");
  }
}

namespace {

struct Spectrum {
  double sum;      // a + b + c + d, the trace of -Q
  double product;  // product of the two non-zero decay rates
  double disc;     // sum^2 - 4 product
};

Spectrum spectrum(const CtmcRates& r) {
  const double a = r.r_excite;
  const double b = r.r_radiate;
  const double c = r.r_shelve;
  const double d = r.r_deshelve;
  const double sum = a + b + c + d;
  const double product = a * c + a * d + b * d + c * d;
  return {sum, product, sum * sum - 4.0 * product};
}

}  // namespace

double ctmc_excited_population(const CtmcRates& r) {
  r.validate();
  return 1.0 / (1.0 + (r.r_radiate + r.r_shelve) / r.r_excite + r.r_shelve / r.r_deshelve);
}

double ctmc_emission_rate(const CtmcRates& r) {
  return r.r_radiate * ctmc_excited_population(r);
}

LumpedG2 ctmc_lumped(const CtmcRates& r) {
  const double pss = ctmc_excited_population(r);
  const Spectrum s = spectrum(r);
  if (s.disc < 0.0) {
    throw std::domain_error("ctmc_lumped: oscillating chain has no biexponential form");
  }
  const double root = std::sqrt(s.disc);
  const double g1 = 0.5 * (s.sum + root);
  // Vieta form avoids cancellation when the slow rate is tiny.
  const double g2 = s.product / g1;
  if (g1 - g2 <= 1e-12 * g1) {
    throw std::domain_error("ctmc_lumped: repeated decay rate");
  }
  return {g1, g2, (r.r_excite / pss - g2) / (g1 - g2)};
}

double ctmc_g2(const CtmcRates& r, double tau_ns) {
  if (!(tau_ns >= 0.0)) {
    throw std::domain_error("ctmc_g2: tau must be >= 0");
  }
  const double pss = ctmc_excited_population(r);
  const double slope = r.r_excite / pss;  // d g2 / d tau at 0
  const Spectrum s = spectrum(r);
  const double half = 0.5 * s.sum;
  const double scale = std::max(s.sum * s.sum, 1e-300);
  if (std::abs(s.disc) <= 1e-12 * scale) {
    const double e = std::exp(-half * tau_ns);
    return 1.0 - e + (slope - half) * tau_ns * e;
  }
  if (s.disc < 0.0) {
    const double omega = 0.5 * std::sqrt(-s.disc);
    const double e = std::exp(-half * tau_ns);
    return 1.0 - e * std::cos(omega * tau_ns) +
           e * (slope - half) / omega * std::sin(omega * tau_ns);
  }
  const LumpedG2 l = ctmc_lumped(r);
  return 1.0 - l.beta * std::exp(-l.gamma1 * tau_ns) +
         (l.beta - 1.0) * std::exp(-l.gamma2 * tau_ns);
}

namespace {

// Newton solve for (a, c, d) with b = a. Returns false when no valid chain
// was reached.
bool solve_rates(double gamma1, double gamma2, double beta, CtmcRates& out) {
  const double target_sum = gamma1 + gamma2;
  const double target_product = gamma1 * gamma2;
  const double k = beta * (gamma1 - gamma2) + gamma2;

  const auto residual = [&](const Eigen::Vector3d& x) {
    const double a = x(0), c = x(1), d = x(2);
    return Eigen::Vector3d((2 * a + c + d - target_sum) / gamma1,
                           (a * c + 2 * a * d + c * d - target_product) / target_product,
                           (2 * a + c + a * c / d - k) / gamma1);
  };

  // Weak-shelving approximation as the starting point.
  Eigen::Vector3d x(0.0, 2.0 * gamma2 * (beta - 1.0) / beta, gamma2 / beta);
  x(0) = 0.5 * (gamma1 - x(1));
  Eigen::Vector3d f = residual(x);
  for (int iter = 0; iter < 200 && f.norm() > 1e-15; ++iter) {
    const double a = x(0), c = x(1), d = x(2);
    Eigen::Matrix3d jac;
    jac << 2.0 / gamma1, 1.0 / gamma1, 1.0 / gamma1,
        (c + 2 * d) / target_product, (a + d) / target_product, (2 * a + c) / target_product,
        (2.0 + c / d) / gamma1, (1.0 + a / d) / gamma1, (-a * c / (d * d)) / gamma1;
    const Eigen::Vector3d step = jac.fullPivLu().solve(-f);
    double t = 1.0;
    bool improved = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const Eigen::Vector3d trial = x + t * step;
      if (trial(0) <= 0.0 || trial(1) < 0.0 || trial(2) <= 0.0) continue;
      const Eigen::Vector3d ft = residual(trial);
      if (ft.norm() < f.norm()) {
        x = trial;
        f = ft;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  out = CtmcRates{x(0), x(0), x(1), x(2)};
  if (!(f.norm() < 1e-12) || !(out.r_shelve < out.r_radiate)) {
    return false;
  }
  try {
    const LumpedG2 l = ctmc_lumped(out);
    return std::abs(l.gamma1 - gamma1) <= 1e-9 * gamma1 &&
           std::abs(l.gamma2 - gamma2) <= 1e-9 * gamma2 &&
           std::abs(l.beta - beta) <= 1e-9 * beta;
  } catch (const std::domain_error&) {
    return false;
  }
}

}  // namespace

CtmcRates calibrate_rates(double gamma1, double gamma2, double beta) {
  if (!(gamma2 > 0.0) || !(gamma1 > gamma2) || !(beta >= 1.0)) {
    throw std::invalid_argument("calibrate_rates: need gamma1 > gamma2 > 0 and beta >= 1");
  }
  if (beta == 1.0) {
    if (!(gamma2 < gamma1)) {
      throw InfeasibleError("calibrate_rates: degenerate two-level target", 1.0);
    }
    return CtmcRates{0.5 * gamma1, 0.5 * gamma1, 0.0, gamma2};
  }
  CtmcRates rates{};
  if (solve_rates(gamma1, gamma2, beta, rates)) {
    return rates;
  }
  // Largest feasible beta below the target, by bisection.
  double lo = 1.0;
  double hi = beta;
  CtmcRates probe{};
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (solve_rates(gamma1, gamma2, mid, probe) ? lo : hi) = mid;
  }
  std::ostringstream msg;
  msg << "calibrate_rates: no chain with r_excite = r_radiate reproduces gamma1=" << gamma1
      << ", gamma2=" << gamma2 << ", beta=" << beta << "; nearest achievable beta is " << lo;
  throw InfeasibleError(msg.str(), lo);
}

CtmcRates calibrate_rates(const EmitterParams& target) {
  return calibrate_rates(target.gamma1(), target.gamma2(), target.beta());
}

void DetectorModel::validate() const {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw ConfigError("detector: efficiency must lie in (0, 1]");
  }
  if (!(jitter_fwhm_ps >= 0.0) || !(dark_rate_per_s >= 0.0)) {
    throw ConfigError("detector: jitter and dark rate must be >= 0");
  }
  if (resolution_ps == 0) {
    throw ConfigError("detector: resolution must be >= 1 ps");
  }
}

double DetectorModel::jitter_sigma_ps() const noexcept {
  return jitter_fwhm_ps / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

namespace {

std::uint64_t ns_to_ps(double t_ns) { return static_cast<std::uint64_t>(t_ns * 1000.0); }

}  // namespace

TimestampStream simulate_emitter(const CtmcRates& rates, std::uint64_t duration_ps,
                                 std::uint64_t seed) {
  rates.validate();
  TimestampStream out;
  out.duration_ps = duration_ps;
  out.origin = StreamOrigin::signal;
  Rng rng(seed);
  std::exponential_distribution<double> unit_exp(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double end_ns = static_cast<double>(duration_ps) * 1e-3;
  const double leave_excited = rates.r_radiate + rates.r_shelve;
  const double p_radiate = rates.r_radiate / leave_excited;
  double t = 0.0;
  while (true) {
    t += unit_exp(rng) / rates.r_excite;
    t += unit_exp(rng) / leave_excited;
    if (t > end_ns) break;
    if (unit(rng) < p_radiate) {
      out.timestamps.push_back(ns_to_ps(t));
    } else {
      t += unit_exp(rng) / rates.r_deshelve;
    }
  }
  return out;
}

std::vector<std::uint64_t> simulate_emitter_thinned(const CtmcRates& rates,
                                                    double keep_probability,
                                                    std::uint64_t duration_ps, Rng& rng) {
  rates.validate();
  if (!(keep_probability > 0.0 && keep_probability <= 1.0)) {
    throw std::invalid_argument("simulate_emitter_thinned: keep probability must lie in (0, 1]");
  }
  const double a = rates.r_excite;
  const double b = rates.r_radiate;
  const double c = rates.r_shelve;
  const double d = rates.r_deshelve;
  // Each ground -> excited -> {ground, shelf} cycle ends the wait with
  // probability p_stop (a kept emission); a non-final cycle visits the shelf
  // with probability p_shelf.
  const double p_stop = b * keep_probability / (b + c);
  const double p_shelf = c / (c + b * (1.0 - keep_probability));

  std::geometric_distribution<std::uint64_t> cycles(p_stop);
  std::binomial_distribution<std::uint64_t> shelvings;
  std::gamma_distribution<double> gamma;
  using GammaParam = std::gamma_distribution<double>::param_type;
  using BinomialParam = std::binomial_distribution<std::uint64_t>::param_type;

  const double end_ns = static_cast<double>(duration_ps) * 1e-3;
  std::vector<std::uint64_t> out;
  double t = 0.0;
  while (true) {
    const std::uint64_t skipped = cycles(rng);
    const double full = static_cast<double>(skipped + 1);
    t += gamma(rng, GammaParam(full, 1.0 / a));
    t += gamma(rng, GammaParam(full, 1.0 / (b + c)));
    if (skipped > 0 && c > 0.0) {
      const std::uint64_t shelved =
          p_shelf >= 1.0 ? skipped : shelvings(rng, BinomialParam(skipped, p_shelf));
      if (shelved > 0) {
        t += gamma(rng, GammaParam(static_cast<double>(shelved), 1.0 / d));
      }
    }
    if (t > end_ns) break;
    out.push_back(ns_to_ps(t));
  }
  return out;
}

namespace {

std::vector<std::uint64_t> poisson_arrivals(double rate_per_s, std::uint64_t duration_ps,
                                            Rng& rng) {
  std::vector<std::uint64_t> out;
  if (rate_per_s <= 0.0 || duration_ps == 0) {
    return out;
  }
  const double mean_gap_ps = 1e12 / rate_per_s;
  out.reserve(static_cast<std::size_t>(static_cast<double>(duration_ps) / mean_gap_ps * 1.05) + 16);
  std::exponential_distribution<double> gap(1.0 / mean_gap_ps);
  const double end = static_cast<double>(duration_ps);
  double t = gap(rng);
  while (t <= end) {
    out.push_back(static_cast<std::uint64_t>(t));
    t += gap(rng);
  }
  return out;
}

}  // namespace

TimestampStream simulate_poisson(double rate_per_s, std::uint64_t duration_ps,
                                 std::uint64_t seed) {
  if (!(rate_per_s >= 0.0)) {
    throw std::invalid_argument("simulate_poisson: rate must be >= 0");
  }
  Rng rng(seed);
  return {poisson_arrivals(rate_per_s, duration_ps, rng), duration_ps, StreamOrigin::background};
}

TimestampStream simulate_blinking(double on_rate_per_s, double mean_on_ps, double mean_off_ps,
                                  std::uint64_t duration_ps, std::uint64_t seed) {
  if (!(on_rate_per_s > 0.0) || !(mean_on_ps > 0.0) || !(mean_off_ps > 0.0)) {
    throw std::invalid_argument("simulate_blinking: rates and dwell times must be positive");
  }
  Rng rng(seed);
  std::exponential_distribution<double> on_dwell(1.0 / mean_on_ps);
  std::exponential_distribution<double> off_dwell(1.0 / mean_off_ps);
  std::exponential_distribution<double> gap(on_rate_per_s * 1e-12);
  std::bernoulli_distribution start_on(mean_on_ps / (mean_on_ps + mean_off_ps));

  TimestampStream out;
  out.duration_ps = duration_ps;
  out.origin = StreamOrigin::signal;
  const double end = static_cast<double>(duration_ps);
  bool on = start_on(rng);
  double t = 0.0;
  while (t < end) {
    const double switch_at = t + (on ? on_dwell(rng) : off_dwell(rng));
    if (on) {
      // Memoryless arrivals restart cleanly inside each on-window.
      double s = t + gap(rng);
      while (s < switch_at && s <= end) {
        out.timestamps.push_back(static_cast<std::uint64_t>(s));
        s += gap(rng);
      }
    }
    t = switch_at;
    on = !on;
  }
  return out;
}

std::vector<std::uint64_t> jitter_and_quantize(std::vector<std::uint64_t> ts,
                                               const DetectorModel& detector,
                                               std::uint64_t duration_ps, Rng& rng) {
  const double sigma = detector.jitter_sigma_ps();
  const auto grid = static_cast<std::int64_t>(detector.resolution_ps);
  const auto end = static_cast<std::int64_t>(duration_ps);
  std::normal_distribution<double> noise(0.0, sigma);
  std::size_t kept = 0;
  for (std::uint64_t raw : ts) {
    double t = static_cast<double>(raw);
    if (sigma > 0.0) t += noise(rng);
    const auto ti = static_cast<std::int64_t>(std::floor(t));
    if (ti < 0 || ti > end) continue;
    ts[kept++] = static_cast<std::uint64_t>(ti - ti % grid);
  }
  ts.resize(kept);
  std::sort(ts.begin(), ts.end());
  return ts;
}

std::vector<std::uint64_t> apply_dead_time(std::span<const std::uint64_t> sorted,
                                           std::uint64_t dead_time_ps) {
  const std::uint64_t gap = std::max<std::uint64_t>(dead_time_ps, 1);
  std::vector<std::uint64_t> out;
  out.reserve(sorted.size());
  for (std::uint64_t t : sorted) {
    if (out.empty() || t - out.back() >= gap) {
      out.push_back(t);
    }
  }
  return out;
}

double background_rate_per_s(const EmitterParams& params, const FluxSpec& flux,
                             double efficiency) {
  const double signal_per_s = params.n_emitters() * flux.lambda_per_emitter * efficiency * 1e9;
  return signal_per_s * (1.0 - params.rho()) / params.rho();
}

RegionSimulation simulate_region_detailed(const EmitterParams& params, const FluxSpec& flux,
                                          const DetectorModel& detector,
                                          std::uint64_t duration_ps, std::uint64_t seed) {
  detector.validate();
  flux.check_against(params);
  const CtmcRates rates = calibrate_rates(params);
  const double emission = ctmc_emission_rate(rates);
  const double keep = flux.lambda_per_emitter * detector.efficiency / emission;
  if (keep > 1.0) {
    std::ostringstream msg;
    msg << "simulate_region: detected flux " << flux.lambda_per_emitter * detector.efficiency
        << " ns^-1 exceeds the emitter's emission rate " << emission << " ns^-1";
    throw InfeasibleError(msg.str());
  }
  const double bg_rate = background_rate_per_s(params, flux, detector.efficiency);

  const int n = params.n_emitters();
  const int n_streams = n + 2;  // emitters, background, dark
  std::vector<std::vector<std::uint64_t>> parts(static_cast<std::size_t>(n_streams));

#pragma omp parallel for schedule(dynamic, 1)
  for (int s = 0; s < n_streams; ++s) {
    std::vector<std::uint64_t> raw;
    Rng rng;
    if (s < n) {
      rng.seed(derive_seed(seed, static_cast<std::uint64_t>(s), seed_purpose::emission));
      raw = simulate_emitter_thinned(rates, keep, duration_ps, rng);
    } else if (s == n) {
      rng.seed(derive_seed(seed, 0, seed_purpose::background));
      raw = poisson_arrivals(bg_rate, duration_ps, rng);
    } else {
      rng.seed(derive_seed(seed, 0, seed_purpose::dark));
      raw = poisson_arrivals(detector.dark_rate_per_s, duration_ps, rng);
    }
    parts[static_cast<std::size_t>(s)] = jitter_and_quantize(std::move(raw), detector,
                                                             duration_ps, rng);
  }

  RegionSimulation sim{{}, {}, rates, keep, bg_rate};
  std::size_t total = 0;
  for (int s = 0; s < n_streams; ++s) {
    const std::size_t m = parts[static_cast<std::size_t>(s)].size();
    total += m;
    if (s < n) {
      sim.counts.signal += m;
    } else if (s == n) {
      sim.counts.background += m;
    } else {
      sim.counts.dark += m;
    }
  }

  // Pairwise merge of sorted runs.
  std::vector<std::uint64_t> merged;
  merged.reserve(total);
  std::vector<std::size_t> bounds{0};
  for (auto& p : parts) {
    merged.insert(merged.end(), p.begin(), p.end());
    bounds.push_back(merged.size());
    std::vector<std::uint64_t>().swap(p);
  }
  while (bounds.size() > 2) {
    std::vector<std::size_t> next{0};
    for (std::size_t i = 0; i + 2 < bounds.size(); i += 2) {
      std::inplace_merge(merged.begin() + static_cast<std::ptrdiff_t>(bounds[i]),
                         merged.begin() + static_cast<std::ptrdiff_t>(bounds[i + 1]),
                         merged.begin() + static_cast<std::ptrdiff_t>(bounds[i + 2]));
      next.push_back(bounds[i + 2]);
    }
    if (bounds.size() % 2 == 0) {
      next.push_back(bounds.back());
    }
    bounds = std::move(next);
  }

  sim.stream.timestamps = apply_dead_time(merged, detector.dead_time_ps);
  sim.stream.duration_ps = duration_ps;
  sim.stream.origin = StreamOrigin::merged;
  return sim;
}

TimestampStream simulate_region(const EmitterParams& params, const FluxSpec& flux,
                                const DetectorModel& detector, std::uint64_t duration_ps,
                                std::uint64_t seed) {
  return simulate_region_detailed(params, flux, detector, duration_ps, seed).stream;
}

}  // namespace nvqrng

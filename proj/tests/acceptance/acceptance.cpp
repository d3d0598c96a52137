// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria (0 when everything passes).

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nvqrng/cli.hpp"
#include "nvqrng/entropy.hpp"
#include "nvqrng/estimator.hpp"
#include "nvqrng/extractor.hpp"
#include "nvqrng/model.hpp"
#include "nvqrng/presets.hpp"
#include "nvqrng/quality.hpp"
#include "nvqrng/simulator.hpp"
#include "oracles.hpp"

using namespace nvqrng;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

int failures = 0;

void run(const char* id, double time_limit_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto start = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (time_limit_s > 0.0) o.require(secs < time_limit_s, "runtime");
  if (!o.pass) ++failures;
  std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << " (" << std::fixed
            << std::setprecision(2) << secs << " s)" << std::defaultfloat << std::setprecision(6)
            << o.detail.str() << std::endl;
}

double chi2_uniform(const std::vector<std::uint32_t>& sym, std::size_t m) {
  std::vector<double> c(m, 0.0);
  for (auto v : sym) c[v] += 1.0;
  const double e = static_cast<double>(sym.size()) / static_cast<double>(m);
  double chi2 = 0.0;
  for (double x : c) chi2 += (x - e) * (x - e) / e;
  return chi2;
}

void ac1(Outcome& o) {
  const auto cfg = BinningConfig::default_preset();
  for (const auto& pr : kRegionPresets) {
    const double h = min_entropy(pr.params(), pr.flux(), cfg);
    const double tol = pr.region <= 3 ? 2e-5 : 5e-5;
    o.detail << " R" << pr.region << "=" << std::setprecision(8) << h;
    o.require(std::abs(h - pr.min_entropy) <= tol, "region " + std::to_string(pr.region));
  }
}

void ac2(Outcome& o) {
  double worst = 0.0;
  for (const auto& pr : kRegionPresets) {
    const auto d = photon_number_single(0.05, pr.flux(), pr.params());
    for (int n_em = 1; n_em <= 8; ++n_em) {
      const auto conv = oracle::convolve_power({d.p0, d.p1, d.p2}, n_em);
      for (int n = 0; n <= 2 * n_em; ++n) {
        worst = std::max(worst, std::abs(photon_number_multi(n, n_em, d) -
                                         conv[static_cast<std::size_t>(n)]));
      }
    }
  }
  o.detail << " max_abs_error=" << worst;
  o.require(worst < 1e-12, "convolution mismatch");
}

void ac3(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> mdist(2, 64);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p_empty = 1e-6 + (1.0 - 2e-6) * u(rng);
    const double p_one = (1.0 - p_empty) * (1e-6 + (1.0 - 1e-6) * u(rng));
    const std::uint32_t m = mdist(rng);
    const auto d = conditional_single_photon_bins(p_empty, p_one, m);
    for (double p : d.probabilities) worst = std::max(worst, std::abs(p - 1.0 / m));
  }
  o.detail << " analytic_max_dev=" << worst;
  o.require(worst < 1e-12, "analytic uniformity");

  // Telegraph-switched light: 2 us on, 3 us off, g2(0) = 2.5.
  const auto stream = simulate_blinking(8e6, 2'000'000.0, 3'000'000.0, 400'000'000'000ull, 33);
  const auto [a, b] = hbt_split(stream, 1);
  const auto h = g2_histogram(a, b, 1.0, 5.0, static_cast<double>(stream.duration_ps) * 1e-12);
  const double g0 = h.g2[h.g2.size() / 2];
  o.detail << " stream_g2(0)=" << g0;
  o.require(g0 > 2.0, "stream is not bunched");

  const auto sym = single_arrival_symbols(stream.timestamps, BinningConfig::make(12800, 16));
  const double chi2 = chi2_uniform(sym, 16);
  const double p = oracle::chi2_sf(chi2, 15.0);
  o.detail << " symbols=" << sym.size() << " chi2=" << chi2 << " p=" << p;
  o.require(sym.size() >= 1'000'000, "fewer than 1e6 symbols");
  o.require(p > 0.001, "chi2 uniformity");
}

void ac4_region(Outcome& o, int region) {
  const RegionPreset& pr = region_preset(region);
  const EmitterParams params = pr.params();
  // Boosted flux so the run holds a few million detections.
  const double total_per_s = 1.2e6;
  const FluxSpec flux(total_per_s * 1e-9 / pr.n_emitters);
  DetectorModel merged;
  merged.dead_time_ps = 0;
  const std::uint64_t duration = 3'000'000'000'000ull;
  const auto sim = simulate_region(params, flux, merged, duration, 4000 + region);

  auto [a, b] = hbt_split(sim, 77);
  a.timestamps = apply_dead_time(a.timestamps, 24000);
  b.timestamps = apply_dead_time(b.timestamps, 24000);
  const auto h = g2_histogram(a, b, 1.0, 500.0, static_cast<double>(duration) * 1e-12);
  const FitResult f = fit_g2(h, pr.rho);

  const std::size_t c = h.g2.size() / 2;
  const double g0 = h.g2[c];
  const double sigma = g0 / std::sqrt(static_cast<double>(std::max<std::uint64_t>(h.counts[c], 1)));
  const double want0 = 1.0 - pr.rho * pr.rho / pr.n_emitters;
  o.detail << " R" << region << ": events=" << sim.size() << " N=" << f.n_emitters
           << " gamma=" << f.gamma << " beta=" << f.beta << " g2(0)=" << g0 << "+-" << sigma
           << " want " << want0;
  o.require(sim.size() >= 1'000'000, "R" + std::to_string(region) + " events");
  o.require(f.n_emitters == pr.n_emitters, "R" + std::to_string(region) + " N");
  o.require(std::abs(f.gamma / pr.gamma_per_ns - 1.0) <= 0.15, "R" + std::to_string(region) + " gamma");
  o.require(std::abs(f.beta / pr.beta - 1.0) <= 0.15, "R" + std::to_string(region) + " beta");
  o.require(std::abs(g0 - want0) <= 3.0 * sigma, "R" + std::to_string(region) + " g2(0)");
}

void ac5(Outcome& o) {
  const RegionPreset& pr = region_preset(1);
  const std::uint64_t duration = 470ull * 1'000'000'000'000ull;
  const auto sim = simulate_region(pr.params(), pr.flux(), DetectorModel{}, duration, 5);
  const auto ex = extract(sim, BinningConfig::default_preset());
  const auto& bytes = ex.bytes;
  o.detail << " bytes=" << bytes.size();
  o.require(bytes.size() >= 10'000'000, "fewer than 1e7 bytes");

  const auto ent = ent_report(bytes);
  const BitView bits(bytes, ex.bit_count);
  const auto freq = relative_frequency(bits);
  const auto lags = pearson_lag(bits, 15);
  const double lag_bound = 4.9 / std::sqrt(static_cast<double>(ex.bit_count));
  double worst_lag = 0.0;
  for (double r : lags.coefficients) worst_lag = std::max(worst_lag, std::abs(r));

  o.detail << std::setprecision(8) << " entropy=" << ent.entropy_per_byte << " f0=" << freq.f0
           << " mean=" << ent.arithmetic_mean << " pi=" << ent.monte_carlo_pi
           << " serial=" << ent.serial_correlation << " chi2_pct=" << ent.chi2_percentile
           << " max_lag=" << worst_lag << " bound=" << lag_bound << std::setprecision(6);
  o.require(ent.entropy_per_byte >= 7.9995, "entropy");
  o.require(std::abs(freq.f0 - 0.5) <= 5e-4, "f0");
  o.require(std::abs(ent.arithmetic_mean - 127.5) <= 0.1, "mean");
  o.require(std::abs(ent.monte_carlo_pi - std::numbers::pi) <= 0.01, "pi");
  o.require(std::abs(ent.serial_correlation) <= 0.002, "serial");
  o.require(ent.chi2_percentile >= 1.0 && ent.chi2_percentile <= 99.0, "chi2 percentile");
  o.require(worst_lag <= lag_bound, "lag correlation");
}

void ac6(Outcome& o) {
  const auto cfg = BinningConfig::default_preset();
  for (int region : {5, 1}) {
    const RegionPreset& pr = region_preset(region);
    const auto sim =
        simulate_region(pr.params(), pr.flux(), DetectorModel{}, 1'000'000'000'000ull, 600 + region);
    const double rate = static_cast<double>(sim.size());
    const double mbit = throughput(extract(sim, cfg), cfg) * 1e-6;
    o.detail << " R" << region << ": events/s=" << rate << " Mbit/s=" << mbit << " vs "
             << pr.throughput_mbit_s;
    o.require(std::abs(mbit / pr.throughput_mbit_s - 1.0) <= 0.05,
              "R" + std::to_string(region) + " throughput");
  }
}

void ac7(Outcome& o) {
  double worst_cal = 0.0, worst_quad = 0.0;
  for (const auto& pr : kRegionPresets) {
    const EmitterParams p = pr.params();
    const LumpedG2 back = ctmc_lumped(calibrate_rates(p));
    worst_cal = std::max({worst_cal, std::abs(back.gamma1 / p.gamma1() - 1.0),
                          std::abs(back.gamma2 / p.gamma2() - 1.0),
                          std::abs(back.beta / p.beta() - 1.0)});
    const EmitterParams one = p.with_n_emitters(1);
    for (double t : {0.05, 1.0, 10.0}) {
      const double q =
          oracle::g2_interval_quadrature(t, one.gamma1(), one.gamma2(), one.beta(), one.rho());
      worst_quad = std::max(worst_quad, std::abs(g2_detected_zero(t, one) - q));
    }
  }
  o.detail << " calibrate_rel=" << worst_cal << " quadrature_abs=" << worst_quad;
  o.require(worst_cal <= 1e-6, "calibrate round trip");
  o.require(worst_quad <= 1e-8, "quadrature");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void ac8(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "nvqrng_acceptance";
  fs::remove_all(root);
  std::vector<fs::path> dirs;
  for (const char* threads : {"1", "8"}) {
    const fs::path dir = root / (std::string("t") + threads);
    fs::create_directories(dir);
    std::ostringstream out, err;
    const int code = cli::run({"--threads", threads, "reproduce", "1", "--seed", "42",
                               "--out-dir", dir.string()},
                              out, err);
    o.require(code == 0, std::string("exit code at threads=") + threads + ": " + err.str());
    dirs.push_back(dir);
  }
  for (const char* f : {"region1.ts", "region1.bin"}) {
    const std::string x = slurp(dirs[0] / f), y = slurp(dirs[1] / f);
    o.detail << ' ' << f << '=' << x.size() << 'B';
    o.require(!x.empty() && x == y, std::string(f) + " differs");
  }
  omp_set_num_threads(1);
}

}  // namespace

int main() {
  run("AC1 region-min-entropy", 1.0, ac1);
  run("AC2 multi-emitter-convolution", 1.0, ac2);
  run("AC3 single-arrival-uniformity", 60.0, ac3);
  run("AC4 simulator-fidelity", 0.0, [](Outcome& o) {
    ac4_region(o, 1);
    ac4_region(o, 3);
  });
  run("AC5 end-to-end-randomness", 0.0, ac5);
  run("AC6 throughput", 60.0, ac6);
  run("AC7 analytic-cross-checks", 10.0, ac7);
  run("AC8 determinism", 0.0, ac8);
  std::cout << (failures == 0 ? "ALL PASS" : "FAILURES: " + std::to_string(failures)) << std::endl;
  return failures;
}

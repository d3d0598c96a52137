#include "nvqrng/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "nvqrng/config.hpp"
#include "nvqrng/entropy.hpp"
#include "nvqrng/errors.hpp"
#include "nvqrng/estimator.hpp"
#include "nvqrng/extractor.hpp"
#include "nvqrng/model.hpp"
#include "nvqrng/presets.hpp"
#include "nvqrng/quality.hpp"
#include "nvqrng/simulator.hpp"
#include "nvqrng/timestamps.hpp"

namespace nvqrng::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double x, int precision = 10) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

std::string flag_name(std::string_view key) {
  std::string f = "--";
  for (char c : key) f += c == '_' ? '-' : c;
  return f;
}

// Config-file settings overlaid by command-line flags of the same name.
struct ConfigSources {
  std::string config_file;
  ConfigMap flags;

  void attach(CLI::App* sub, const std::vector<std::string_view>& keys) {
    sub->add_option("--config", config_file, "key=value settings file")->check(CLI::ExistingFile);
    for (auto key : keys) {
      const std::string k(key);
      const std::string f = flag_name(key);
      sub->add_option_function<std::string>(
          f, [this, k, f](const std::string& v) { flags[k] = {v, f}; }, k);
    }
  }

  RunConfig resolve() const {
    ConfigMap merged;
    if (!config_file.empty()) merged = load_config_file(config_file);
    for (const auto& [k, v] : flags) merged[k] = v;
    return RunConfig::from_map(merged);
  }
};

const std::vector<std::string_view> kAllKeys{
    "region",      "n_emitters",      "gamma1_per_ns", "gamma2_per_ns", "beta",      "rho",
    "flux_per_s",  "period",          "bins",          "dead_time",     "jitter_fwhm",
    "dark_rate_per_s", "efficiency",  "resolution",    "duration",      "seed"};

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Timestamp file plus the duration recorded next to it. A zero-byte file is
// an empty stream.
TimestampStream load_stream(const fs::path& path, std::ostream& err) {
  TimestampStream s;
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw std::runtime_error(path.string() + ": " + ec.message());
  if (size > 0) s.timestamps = read_timestamp_file(path);
  const auto meta = read_meta(path);
  if (const auto it = meta.find("duration_ps"); it != meta.end()) {
    s.duration_ps = std::stoull(it->second);
  } else {
    s.duration_ps = s.empty() ? 0 : s.timestamps.back() + 1;
    err << "warning: " << meta_path(path).string()
        << " missing; duration taken from the last timestamp\n";
  }
  return s;
}

std::map<std::string, std::string> simulation_meta(const RunConfig& cfg,
                                                   const RegionSimulation& sim) {
  return {{"format", std::string(kTimestampMagic)},
          {"records", std::to_string(sim.stream.size())},
          {"duration_ps", std::to_string(sim.stream.duration_ps)},
          {"seed", std::to_string(cfg.seed)},
          {"config_hash", hex64(cfg.hash())},
          {"signal_events", std::to_string(sim.counts.signal)},
          {"background_events", std::to_string(sim.counts.background)},
          {"dark_events", std::to_string(sim.counts.dark)},
          {"background_rate_per_s", num(sim.background_rate_per_s, 17)},
          {"keep_probability", num(sim.keep_probability, 17)}};
}

RegionSimulation run_simulation(const RunConfig& cfg) {
  return simulate_region_detailed(cfg.params(), cfg.flux(), cfg.detector, cfg.duration_ps,
                                  cfg.seed);
}

struct ExtractOutcome {
  ExtractionResult result;
  std::uint64_t config_hash;
};

ExtractOutcome extract_to_file(const TimestampStream& stream, const BinningConfig& binning,
                               const std::string& source_hash, const fs::path& out_path) {
  ExtractOutcome o{extract(stream, binning), 0};
  const std::string binning_text = "period=" + std::to_string(binning.period_ps) +
                                   "\nbins=" + std::to_string(binning.n_bins) + "\n";
  o.config_hash = fnv1a64(binning_text + "source=" + source_hash + "\n");
  write_bytes(out_path, o.result.bytes);
  write_meta(out_path, {{"photons_used", std::to_string(o.result.photons_used)},
                        {"photons_discarded_same_period",
                         std::to_string(o.result.photons_discarded_same_period)},
                        {"bit_count", std::to_string(o.result.bit_count)},
                        {"bits_per_symbol", std::to_string(binning.bits_per_symbol())},
                        {"duration_ps", std::to_string(o.result.elapsed_ps)},
                        {"throughput_bit_s", num(throughput(o.result, binning), 17)},
                        {"config_hash", hex64(o.config_hash)},
                        {"source_config_hash", source_hash}});
  return o;
}

struct QualityOutcome {
  EntReport ent;
  BitFrequency freq;
  LagCorrelations lags;
  std::vector<QualityCheck> checks;
};

QualityOutcome assess(const std::vector<std::uint8_t>& bytes, std::uint64_t bit_count,
                      int max_lag) {
  QualityOutcome q;
  const BitView bits(bytes, bit_count);
  q.ent = ent_report(bytes);
  q.freq = relative_frequency(bits);
  q.lags = pearson_lag(bits, max_lag);
  q.checks = quality_checks(q.ent, q.freq, q.lags);
  return q;
}

std::string format_check(const QualityCheck& c) {
  std::ostringstream s;
  s << std::left << std::setw(22) << c.name << std::setprecision(10) << " value=" << c.value
    << " range=[" << c.lower << ", " << c.upper << "] " << (c.pass ? "PASS" : "FAIL");
  return s.str();
}

std::string theory_report(const RunConfig& cfg) {
  const EmitterParams p = cfg.params();
  const FluxSpec f = cfg.flux();
  const BinningConfig b = cfg.binning();
  std::ostringstream s;
  s << std::setprecision(10);
  if (cfg.region) s << "region=" << *cfg.region << '\n';
  s << "n_emitters=" << p.n_emitters() << '\n'
    << "gamma1_per_ns=" << p.gamma1() << '\n'
    << "gamma2_per_ns=" << p.gamma2() << '\n'
    << "beta=" << p.beta() << '\n'
    << "rho=" << p.rho() << '\n'
    << "flux_per_emitter_per_s=" << f.lambda_per_emitter * 1e9 << '\n'
    << "period_ns=" << b.period_ns() << '\n'
    << "bins=" << b.n_bins << '\n';
  const PhotonNumberDist d = photon_number_single(b.bin_width_ns(), f, p);
  s << "bin_p0=" << d.p0 << '\n' << "bin_p1=" << d.p1 << '\n' << "bin_p2=" << d.p2 << '\n';
  s << "g2_detected_zero_bin=" << g2_detected_zero(b.bin_width_ns(), p) << '\n';
  s << std::setprecision(8) << "min_entropy=" << min_entropy(p, f, b) << '\n';
  if (p.n_emitters() == 1) {
    s << "min_entropy_single_emitter=" << min_entropy_single_emitter(p, f, b) << '\n';
  }
  s << "min_entropy_coherent=" << min_entropy_coherent(f.lambda_per_emitter * p.n_emitters(), b)
    << '\n';
  if (cfg.region) {
    const RegionPreset& r = region_preset(*cfg.region);
    s << "reported_min_entropy=" << r.min_entropy << '\n'
      << "reported_throughput_mbit_s=" << r.throughput_mbit_s << '\n';
  }
  return s.str();
}

int cmd_simulate(const ConfigSources& src, const std::string& out_path, std::ostream& out) {
  const RunConfig cfg = src.resolve();
  const RegionSimulation sim = run_simulation(cfg);
  write_timestamp_file(out_path, sim.stream.timestamps);
  write_meta(out_path, simulation_meta(cfg, sim));
  out << "events=" << sim.stream.size() << '\n'
      << "duration_ps=" << sim.stream.duration_ps << '\n'
      << "rate_per_s=" << num(static_cast<double>(sim.stream.size()) / sim.stream.duration_s())
      << '\n'
      << "config_hash=" << hex64(cfg.hash()) << '\n';
  return kOk;
}

int cmd_extract(const ConfigSources& src, const std::string& in_path,
                const std::string& out_path, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = src.resolve();
  const TimestampStream stream = load_stream(in_path, err);
  if (stream.empty()) {
    err << "warning: " << in_path << " holds no timestamps; writing an empty bit file\n";
  }
  const auto meta = read_meta(in_path);
  const auto hash_it = meta.find("config_hash");
  const ExtractOutcome o = extract_to_file(
      stream, cfg.binning(), hash_it == meta.end() ? std::string("unknown") : hash_it->second,
      out_path);
  out << "photons_used=" << o.result.photons_used << '\n'
      << "bit_count=" << o.result.bit_count << '\n'
      << "bytes=" << o.result.bytes.size() << '\n'
      << "throughput_mbit_s=" << num(throughput(o.result, cfg.binning()) * 1e-6) << '\n';
  return kOk;
}

int cmd_g2(const std::string& in_a, const std::string& in_b, const std::string& out_path,
           const std::string& window, const std::string& max_tau, std::uint64_t seed,
           std::ostream& out, std::ostream& err) {
  const double window_ns = static_cast<double>(parse_duration_ps(window)) * 1e-3;
  const double max_tau_ns = static_cast<double>(parse_duration_ps(max_tau)) * 1e-3;
  TimestampStream a = load_stream(in_a, err);
  TimestampStream b;
  if (in_b.empty()) {
    std::tie(a, b) = hbt_split(a, seed);
  } else {
    b = load_stream(in_b, err);
  }
  const double total_s =
      static_cast<double>(std::max(a.duration_ps, b.duration_ps)) * 1e-12;
  const G2Histogram h = g2_histogram(a, b, window_ns, max_tau_ns, total_s);
  std::ofstream f(out_path, std::ios::trunc);
  if (!f) throw std::runtime_error(out_path + ": cannot open for writing");
  write_histogram(f, h);
  out << "windows=" << h.tau_ns.size() << '\n'
      << "g2_zero=" << num(h.g2[h.g2.size() / 2]) << '\n'
      << "coincidences_zero=" << h.counts[h.counts.size() / 2] << '\n';
  return kOk;
}

int cmd_fit(const std::vector<std::string>& inputs, double rho, int region, int n_max,
            const std::string& fit_range, std::ostream& out) {
  if (region > 0) rho = region_preset(region).rho;
  if (!(rho > 0.0)) throw ConfigError("fit: set --rho or --region");
  FitOptions opt;
  opt.n_max = n_max;
  opt.fit_range_ns = static_cast<double>(parse_duration_ps(fit_range)) * 1e-3;
  std::vector<G2Histogram> runs;
  for (const auto& path : inputs) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for reading");
    runs.push_back(read_histogram(f));
  }
  const G2Histogram avg = average_histograms(runs, AverageMode::normalized);
  const FitResult fit = fit_g2(avg, rho, opt);
  out << format_fit_report(fit);
  if (runs.size() > 1) {
    // Spread over repetitions.
    double sg = 0, sg2 = 0, sb = 0, sb2 = 0;
    for (const auto& h : runs) {
      const FitResult r = fit_g2(h, rho, opt);
      sg += r.gamma;
      sg2 += r.gamma * r.gamma;
      sb += r.beta;
      sb2 += r.beta * r.beta;
    }
    const double n = static_cast<double>(runs.size());
    out << "repetitions=" << runs.size() << '\n'
        << "gamma_repeat_sd=" << num(std::sqrt(std::max(0.0, (sg2 - sg * sg / n) / (n - 1))))
        << '\n'
        << "beta_repeat_sd=" << num(std::sqrt(std::max(0.0, (sb2 - sb * sb / n) / (n - 1))))
        << '\n';
  }
  return kOk;
}

int cmd_quality(const std::string& in_path, std::uint64_t bits_override, int max_lag,
                bool check, std::ostream& out) {
  const std::vector<std::uint8_t> bytes = read_bytes(in_path);
  std::uint64_t bit_count = bytes.size() * 8ull;
  const auto meta = read_meta(in_path);
  if (const auto it = meta.find("bit_count"); it != meta.end()) bit_count = std::stoull(it->second);
  if (bits_override > 0) bit_count = bits_override;
  const QualityOutcome q = assess(bytes, bit_count, max_lag);
  out << format_ent_report(q.ent) << "frequency_of_zero=" << num(q.freq.f0) << '\n'
      << "frequency_of_one=" << num(q.freq.f1) << '\n'
      << format_lags(q.lags);
  bool ok = true;
  if (check) {
    for (const auto& c : q.checks) {
      out << format_check(c) << '\n';
      ok = ok && c.pass;
    }
  }
  return ok ? kOk : kChecksFailed;
}

int cmd_reproduce(const ConfigSources& src, const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = src.resolve();
  if (!cfg.region) throw ConfigError("reproduce: region required");
  const RegionPreset& preset = region_preset(*cfg.region);
  fs::create_directories(out_dir);
  const std::string stem = "region" + std::to_string(*cfg.region);
  const fs::path ts_path = fs::path(out_dir) / (stem + ".ts");
  const fs::path bin_path = fs::path(out_dir) / (stem + ".bin");
  const fs::path report_path = fs::path(out_dir) / (stem + "_report.txt");

  const RegionSimulation sim = run_simulation(cfg);
  write_timestamp_file(ts_path, sim.stream.timestamps);
  write_meta(ts_path, simulation_meta(cfg, sim));
  const BinningConfig binning = cfg.binning();
  const ExtractOutcome ex = extract_to_file(sim.stream, binning, hex64(cfg.hash()), bin_path);

  std::ostringstream rep;
  rep << std::setprecision(10);
  rep << "region=" << preset.region << '\n'
      << "seed=" << cfg.seed << '\n'
      << "duration_ps=" << cfg.duration_ps << '\n'
      << "config_hash=" << hex64(cfg.hash()) << '\n'
      << "events=" << sim.stream.size() << '\n'
      << "photons_used=" << ex.result.photons_used << '\n'
      << "bytes=" << ex.result.bytes.size() << '\n';

  std::vector<QualityCheck> checks;
  const double h = min_entropy(cfg.params(), cfg.flux(), binning);
  const double h_tol = preset.region <= 3 ? 2e-5 : 5e-5;
  checks.push_back({"min_entropy", h, preset.min_entropy - h_tol, preset.min_entropy + h_tol,
                    std::abs(h - preset.min_entropy) <= h_tol});
  const double mbit = throughput(ex.result, binning) * 1e-6;
  checks.push_back({"throughput_mbit_s", mbit, 0.95 * preset.throughput_mbit_s,
                    1.05 * preset.throughput_mbit_s,
                    std::abs(mbit - preset.throughput_mbit_s) <= 0.05 * preset.throughput_mbit_s});

  bool ok = true;
  try {
    const QualityOutcome q = assess(ex.result.bytes, ex.result.bit_count, 15);
    rep << format_ent_report(q.ent) << "frequency_of_zero=" << q.freq.f0 << '\n'
        << format_lags(q.lags);
    rep << "reported_frequency_of_zero=" << preset.frequency_of_zero << '\n'
        << "reported_entropy_per_byte=" << preset.ent.entropy_per_byte << '\n'
        << "reported_chi2_percentile=" << preset.ent.chi2_percentile << '\n'
        << "reported_arithmetic_mean=" << preset.ent.arithmetic_mean << '\n'
        << "reported_monte_carlo_pi=" << preset.ent.monte_carlo_pi << '\n'
        << "reported_serial_correlation=" << preset.ent.serial_correlation << '\n';
    checks.insert(checks.end(), q.checks.begin(), q.checks.end());
  } catch (const InputError& e) {
    rep << "quality=unavailable (" << e.what() << ")\n";
    ok = false;
  }
  for (const auto& c : checks) {
    rep << format_check(c) << '\n';
    ok = ok && c.pass;
  }
  rep << "result=" << (ok ? "PASS" : "FAIL") << '\n';

  std::ofstream f(report_path, std::ios::trunc);
  if (!f) throw std::runtime_error(report_path.string() + ": cannot open for writing");
  f << rep.str();
  out << rep.str();
  return ok ? kOk : kChecksFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photon arrival-time random number generation toolkit", "nvqrng"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker thread bound")->check(CLI::PositiveNumber);

  ConfigSources sim_src, ext_src, theory_src, repro_src;
  std::string in_path, in2_path, out_path, out_dir = ".";
  std::string window = "1ns", max_tau = "500ns", fit_range = "200ns";
  std::vector<std::string> inputs;
  std::uint64_t split_seed = 1, bits_override = 0;
  double rho = 0.0;
  int region = 0, n_max = 128, max_lag = 15;
  bool no_check = false;

  auto* sim = app.add_subcommand("simulate", "simulate a detected timestamp stream");
  sim_src.attach(sim, kAllKeys);
  sim->add_option("--out", out_path, "timestamp file")->required();

  auto* ext = app.add_subcommand("extract", "timestamps to random bytes");
  ext_src.attach(ext, {"period", "bins"});
  ext->add_option("--in", in_path, "timestamp file")->required()->check(CLI::ExistingFile);
  ext->add_option("--out", out_path, "bit file")->required();

  auto* g2 = app.add_subcommand("g2", "coincidence histogram");
  g2->add_option("--in", in_path, "timestamp file (split 50/50 unless --in2)")
      ->required()
      ->check(CLI::ExistingFile);
  g2->add_option("--in2", in2_path, "second detector arm")->check(CLI::ExistingFile);
  g2->add_option("--out", out_path, "histogram file")->required();
  g2->add_option("--window", window, "coincidence window");
  g2->add_option("--max-tau", max_tau, "largest delay");
  g2->add_option("--seed", split_seed, "beamsplitter seed");

  auto* fit = app.add_subcommand("fit", "fit emitter count, gamma and beta");
  fit->add_option("--in", inputs, "histogram file(s); several are averaged")
      ->required()
      ->check(CLI::ExistingFile);
  auto* rho_opt = fit->add_option("--rho", rho, "background purity");
  fit->add_option("--region", region, "take rho from a region preset")
      ->check(CLI::Range(1, 5))
      ->excludes(rho_opt);
  fit->add_option("--n-max", n_max, "largest emitter count scanned")->check(CLI::PositiveNumber);
  fit->add_option("--fit-range", fit_range, "largest |tau| fitted");

  auto* th = app.add_subcommand("theory", "closed-form bin probabilities and min-entropy");
  theory_src.attach(th, kAllKeys);

  auto* qual = app.add_subcommand("quality", "ENT statistics, bit frequency and lag correlations");
  qual->add_option("--in", in_path, "bit file")->required()->check(CLI::ExistingFile);
  qual->add_option("--bits", bits_override, "bits to use (default: sidecar bit_count)");
  qual->add_option("--max-lag", max_lag, "largest bit lag")->check(CLI::Range(1, 64));
  qual->add_flag("--no-check", no_check, "report only");

  auto* rep = app.add_subcommand("reproduce", "simulate, extract and score one region");
  repro_src.attach(rep, kAllKeys);
  rep->add_option_function<std::string>(
      "region_id", [&](const std::string& v) { repro_src.flags["region"] = {v, "<region>"}; },
      "region 1..5")->required();
  rep->add_option("--out-dir", out_dir, "output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*sim) return cmd_simulate(sim_src, out_path, out);
    if (*ext) return cmd_extract(ext_src, in_path, out_path, out, err);
    if (*g2) return cmd_g2(in_path, in2_path, out_path, window, max_tau, split_seed, out, err);
    if (*fit) return cmd_fit(inputs, rho, region, n_max, fit_range, out);
    if (*th) {
      out << theory_report(theory_src.resolve());
      return kOk;
    }
    if (*qual) return cmd_quality(in_path, bits_override, max_lag, !no_check, out);
    if (*rep) return cmd_reproduce(repro_src, out_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what();
    if (e.nearest_beta() > 0.0) err << " (nearest beta " << e.nearest_beta() << ")";
    err << '\n';
    return kUsageError;
  } catch (const FitError& e) {
    err << "fit failed: " << e.what() << '\n';
    for (const auto& d : e.diagnostics()) err << "  " << d << '\n';
    return kFitFailed;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kUsageError;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace nvqrng::cli

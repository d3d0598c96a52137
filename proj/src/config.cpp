#include "nvqrng/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nvqrng/errors.hpp"
#include "nvqrng/presets.hpp"

namespace nvqrng {

namespace {

constexpr std::array<std::string_view, 16> kKeys{
    "region",    "n_emitters", "gamma1_per_ns", "gamma2_per_ns", "beta",
    "rho",       "flux_per_s", "period",        "bins",          "dead_time",
    "jitter_fwhm", "dark_rate_per_s", "efficiency", "resolution", "duration",
    "seed"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const ConfigValue& v, const std::string& key, const std::string& why) {
  throw ConfigError(v.origin + ": " + key + ": " + why + " (got '" + v.value + "')");
}

double to_double(const ConfigValue& v, const std::string& key) {
  double out = 0.0;
  const char* end = v.value.data() + v.value.size();
  const auto [ptr, ec] = std::from_chars(v.value.data(), end, out);
  if (ec != std::errc{} || ptr != end || !std::isfinite(out)) fail(v, key, "expected a number");
  return out;
}

std::uint64_t to_u64(const ConfigValue& v, const std::string& key) {
  std::uint64_t out = 0;
  const char* end = v.value.data() + v.value.size();
  const auto [ptr, ec] = std::from_chars(v.value.data(), end, out);
  if (ec != std::errc{} || ptr != end) fail(v, key, "expected a non-negative integer");
  return out;
}

std::uint64_t to_duration(const ConfigValue& v, const std::string& key) {
  try {
    return parse_duration_ps(v.value);
  } catch (const ConfigError& e) {
    fail(v, key, e.what());
  }
}

std::string fmt(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

}  // namespace

std::uint64_t parse_duration_ps(std::string_view text) {
  const std::string s(trim(text));
  double value = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || s.empty()) {
    throw ConfigError("bad duration '" + s + "'");
  }
  const std::string_view unit(ptr, static_cast<std::size_t>(end - ptr));
  double scale = 0.0;
  if (unit.empty() || unit == "ps") scale = 1.0;
  else if (unit == "ns") scale = 1e3;
  else if (unit == "us") scale = 1e6;
  else if (unit == "ms") scale = 1e9;
  else if (unit == "s") scale = 1e12;
  else throw ConfigError("unknown time unit '" + std::string(unit) + "' in '" + s + "'");
  const double ps = value * scale;
  if (!(ps >= 0.0) || ps > 1.8e19) {
    throw ConfigError("duration out of range '" + s + "'");
  }
  const double rounded = std::round(ps);
  if (std::abs(ps - rounded) > 1e-6 * std::max(1.0, ps)) {
    throw ConfigError("duration '" + s + "' is not a whole number of picoseconds");
  }
  return static_cast<std::uint64_t>(rounded);
}

bool is_config_key(std::string_view key) {
  for (auto k : kKeys) {
    if (k == key) return true;
  }
  return false;
}

ConfigMap parse_config_text(std::string_view text, const std::string& source) {
  ConfigMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!is_config_key(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
    if (value.empty()) {
      throw ConfigError(where + ": " + key + ": empty value");
    }
    if (out.count(key)) {
      throw ConfigError(where + ": " + key + " already set at " + out[key].origin);
    }
    out[key] = {value, where};
  }
  return out;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path.string() + ": cannot open config file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

RunConfig RunConfig::from_map(const ConfigMap& values) {
  RunConfig c;
  for (const auto& [key, v] : values) {
    if (key == "region") {
      const auto r = to_u64(v, key);
      if (r < 1 || r > kRegionPresets.size()) fail(v, key, "region must be 1..5");
      c.region = static_cast<int>(r);
    } else if (key == "n_emitters") {
      const auto n = to_u64(v, key);
      if (n < 1 || n > 100000) fail(v, key, "must be in 1..100000");
      c.n_emitters = static_cast<int>(n);
    } else if (key == "gamma1_per_ns") {
      c.gamma1_per_ns = to_double(v, key);
    } else if (key == "gamma2_per_ns") {
      c.gamma2_per_ns = to_double(v, key);
    } else if (key == "beta") {
      c.beta = to_double(v, key);
    } else if (key == "rho") {
      c.rho = to_double(v, key);
    } else if (key == "flux_per_s") {
      c.flux_per_s = to_double(v, key);
      if (!(*c.flux_per_s > 0.0)) fail(v, key, "must be > 0");
    } else if (key == "period") {
      c.period_ps = static_cast<std::int64_t>(to_duration(v, key));
    } else if (key == "bins") {
      const auto m = to_u64(v, key);
      if (m < 2 || m > (1u << 20)) fail(v, key, "must be in 2..2^20");
      c.n_bins = static_cast<std::uint32_t>(m);
    } else if (key == "dead_time") {
      c.detector.dead_time_ps = to_duration(v, key);
    } else if (key == "jitter_fwhm") {
      c.detector.jitter_fwhm_ps = static_cast<double>(to_duration(v, key));
    } else if (key == "dark_rate_per_s") {
      c.detector.dark_rate_per_s = to_double(v, key);
    } else if (key == "efficiency") {
      c.detector.efficiency = to_double(v, key);
    } else if (key == "resolution") {
      c.detector.resolution_ps = to_duration(v, key);
    } else if (key == "duration") {
      c.duration_ps = to_duration(v, key);
      if (c.duration_ps == 0) fail(v, key, "must be > 0");
    } else if (key == "seed") {
      c.seed = to_u64(v, key);
    }
  }
  try {
    c.detector.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("detector: ") + e.what());
  }
  c.binning();
  return c;
}

bool RunConfig::has_emitter_source() const noexcept {
  return region.has_value() || n_emitters || gamma1_per_ns || gamma2_per_ns || beta || rho ||
         flux_per_s;
}

EmitterParams RunConfig::params() const {
  const bool any_explicit =
      n_emitters || gamma1_per_ns || gamma2_per_ns || beta || rho || flux_per_s;
  if (region && any_explicit) {
    throw ConfigError("region preset and explicit emitter parameters are mutually exclusive");
  }
  if (region) return region_preset(*region).params();
  if (!n_emitters || !gamma1_per_ns || !beta || !rho || !flux_per_s) {
    throw ConfigError(
        "emitter source incomplete: set region, or all of n_emitters, gamma1_per_ns, beta, rho, "
        "flux_per_s");
  }
  const double g2 = gamma2_per_ns ? *gamma2_per_ns : *gamma1_per_ns / EmitterParams::kShelvingRatio;
  try {
    return EmitterParams(*n_emitters, *gamma1_per_ns, g2, *beta, *rho);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("emitter parameters: ") + e.what());
  }
}

FluxSpec RunConfig::flux() const {
  if (region) return region_preset(*region).flux();
  params();
  return FluxSpec(*flux_per_s * 1e-9);
}

BinningConfig RunConfig::binning() const { return BinningConfig::make(period_ps, n_bins); }

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  if (region) {
    kv["region"] = std::to_string(*region);
  } else {
    if (n_emitters) kv["n_emitters"] = std::to_string(*n_emitters);
    if (gamma1_per_ns) kv["gamma1_per_ns"] = fmt(*gamma1_per_ns);
    if (gamma2_per_ns) kv["gamma2_per_ns"] = fmt(*gamma2_per_ns);
    if (beta) kv["beta"] = fmt(*beta);
    if (rho) kv["rho"] = fmt(*rho);
    if (flux_per_s) kv["flux_per_s"] = fmt(*flux_per_s);
  }
  kv["period"] = std::to_string(period_ps);
  kv["bins"] = std::to_string(n_bins);
  kv["dead_time"] = std::to_string(detector.dead_time_ps);
  kv["jitter_fwhm"] = fmt(detector.jitter_fwhm_ps);
  kv["dark_rate_per_s"] = fmt(detector.dark_rate_per_s);
  kv["efficiency"] = fmt(detector.efficiency);
  kv["resolution"] = std::to_string(detector.resolution_ps);
  kv["duration"] = std::to_string(duration_ps);
  kv["seed"] = std::to_string(seed);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

std::filesystem::path meta_path(const std::filesystem::path& file) {
  std::filesystem::path p = file;
  p += ".meta";
  return p;
}

void write_meta(const std::filesystem::path& file,
                const std::map<std::string, std::string>& meta) {
  const auto path = meta_path(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
  if (!out) {
    throw std::runtime_error(path.string() + ": write failed");
  }
}

std::map<std::string, std::string> read_meta(const std::filesystem::path& file) {
  const auto path = meta_path(file);
  std::map<std::string, std::string> meta;
  std::ifstream in(path, std::ios::binary);
  if (!in) return meta;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

}  // namespace nvqrng

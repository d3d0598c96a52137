#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "nvqrng/entropy.hpp"
#include "nvqrng/model.hpp"
#include "nvqrng/simulator.hpp"

namespace nvqrng {

/// "12800", "12.8ns", "2s": integer picoseconds. Accepted suffixes ps, ns,
/// us, ms, s; a bare number is ps. Throws ConfigError on anything else,
/// negative values, or values that do not land on a whole picosecond.
std::uint64_t parse_duration_ps(std::string_view text);

/// A raw setting and where it came from ("run.cfg:12" or "--seed").
struct ConfigValue {
  std::string value;
  std::string origin;
};
using ConfigMap = std::map<std::string, ConfigValue>;

/// Keys understood by RunConfig.
bool is_config_key(std::string_view key);

/// Flat key=value text; '#' starts a comment, blank lines are skipped.
/// Throws ConfigError naming source:line for malformed lines, unknown keys
/// and duplicates.
ConfigMap parse_config_text(std::string_view text, const std::string& source);
ConfigMap load_config_file(const std::filesystem::path& path);

/// Emitter source, binning, detector, duration and seed of one run.
struct RunConfig {
  std::optional<int> region;
  std::optional<int> n_emitters;
  std::optional<double> gamma1_per_ns;
  std::optional<double> gamma2_per_ns;
  std::optional<double> beta;
  std::optional<double> rho;
  std::optional<double> flux_per_s;  // per emitter

  std::int64_t period_ps = 12800;
  std::uint32_t n_bins = 256;
  DetectorModel detector;
  std::uint64_t duration_ps = 1'000'000'000'000ull;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the offending key's origin.
  static RunConfig from_map(const ConfigMap& values);

  bool has_emitter_source() const noexcept;
  /// Throws ConfigError unless exactly one of region / explicit parameters
  /// is set and the explicit set is complete.
  EmitterParams params() const;
  FluxSpec flux() const;
  BinningConfig binning() const;

  /// Canonical "key=value" lines, sorted by key, of every resolved field.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t value);

/// Sidecar metadata "<file>.meta": plain key=value lines.
std::filesystem::path meta_path(const std::filesystem::path& file);
void write_meta(const std::filesystem::path& file, const std::map<std::string, std::string>& meta);
/// Empty map when the sidecar does not exist; InputError when it is malformed.
std::map<std::string, std::string> read_meta(const std::filesystem::path& file);

}  // namespace nvqrng

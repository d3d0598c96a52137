#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nvqrng {

/// Read-only bit sequence over packed bytes, MSB first. bit_count may stop
/// inside the last byte.
struct BitView {
  std::span<const std::uint8_t> bytes;
  std::uint64_t bit_count;

  explicit BitView(std::span<const std::uint8_t> b) : bytes(b), bit_count(b.size() * 8ull) {}
  /// Throws std::invalid_argument when bit_count exceeds 8 * bytes.size().
  BitView(std::span<const std::uint8_t> b, std::uint64_t n_bits);

  bool operator[](std::uint64_t i) const noexcept {
    return (bytes[i >> 3] >> (7 - (i & 7))) & 1u;
  }
};

struct BitFrequency {
  double f0;
  double f1;
  std::uint64_t n_bits;
};

/// Throws InputError for an empty sequence.
BitFrequency relative_frequency(BitView bits);

struct LagCorrelations {
  /// coefficients[d-1] is the Pearson coefficient of (b_i, b_{i+d}).
  std::vector<double> coefficients;
  /// Set for lags whose overlap has zero variance; the coefficient reads 1.0.
  std::vector<bool> degenerate;
  std::uint64_t n_bits = 0;
};

/// Throws InputError unless bit_count > max_lag >= 1.
LagCorrelations pearson_lag(BitView bits, int max_lag);

struct EntReport {
  double entropy_per_byte = 0.0;
  double chi2_statistic = 0.0;
  double chi2_percentile = 0.0;
  double arithmetic_mean = 0.0;
  double monte_carlo_pi = 0.0;
  double serial_correlation = 0.0;
  bool serial_degenerate = false;
  std::uint64_t n_bytes = 0;
};

/// Throws InputError below 6 bytes.
EntReport ent_report(std::span<const std::uint8_t> bytes);

/// 100 * P(X <= statistic) for X ~ chi2(dof). Throws std::domain_error for
/// statistic < 0 or dof < 1.
double chi2_percentile(double statistic, double dof);

namespace reference {

LagCorrelations pearson_lag(BitView bits, int max_lag);
EntReport ent_report(std::span<const std::uint8_t> bytes);

}  // namespace reference

/// One pass/fail line of a quality check.
struct QualityCheck {
  std::string name;
  double value;
  double lower;
  double upper;
  bool pass;
};

/// Bounds sized to the sample: 5 sigma of the ideal-source sampling
/// distribution for each statistic, chi2 percentile inside [1, 99].
std::vector<QualityCheck> quality_checks(const EntReport& ent, const BitFrequency& freq,
                                         const LagCorrelations& lags);

/// key=value lines.
std::string format_ent_report(const EntReport& report);
std::string format_lags(const LagCorrelations& lags);

}  // namespace nvqrng

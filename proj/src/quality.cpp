#include "nvqrng/quality.hpp"

#include <omp.h>

#include <array>
#include <bit>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nvqrng/errors.hpp"

namespace nvqrng {

BitView::BitView(std::span<const std::uint8_t> b, std::uint64_t n_bits)
    : bytes(b), bit_count(n_bits) {
  if (n_bits > b.size() * 8ull) {
    throw std::invalid_argument("BitView: bit count exceeds the byte buffer");
  }
}

namespace {

__extension__ using i128 = __int128;

// Sequence bit i sits at word i/64, bit 63 - i%64; one zero word of padding.
std::vector<std::uint64_t> to_words(BitView bits) {
  const std::uint64_t n_words = (bits.bit_count + 63) / 64;
  std::vector<std::uint64_t> words(n_words + 1, 0);
  const std::uint64_t n_bytes = (bits.bit_count + 7) / 8;
  for (std::uint64_t i = 0; i < n_bytes; ++i) {
    words[i / 8] |= static_cast<std::uint64_t>(bits.bytes[i]) << (56 - 8 * (i % 8));
  }
  if (bits.bit_count % 64 != 0) {
    words[n_words - 1] &= ~0ull << (64 - bits.bit_count % 64);
  }
  return words;
}

inline std::uint64_t word_at(const std::vector<std::uint64_t>& w, std::uint64_t bit) {
  const std::uint64_t k = bit / 64;
  const unsigned s = bit % 64;
  if (s == 0) return w[k];
  return (w[k] << s) | (w[k + 1] >> (64 - s));
}

double pearson_from_counts(std::uint64_t m, std::uint64_t sx, std::uint64_t sy, std::uint64_t sxy,
                           std::uint64_t sxx, std::uint64_t syy, bool* degenerate) {
  const i128 num = static_cast<i128>(m) * sxy - static_cast<i128>(sx) * sy;
  const i128 vx = static_cast<i128>(m) * sxx - static_cast<i128>(sx) * sx;
  const i128 vy = static_cast<i128>(m) * syy - static_cast<i128>(sy) * sy;
  if (vx == 0 || vy == 0) {
    *degenerate = true;
    return 1.0;
  }
  *degenerate = false;
  const long double den =
      std::sqrt(static_cast<long double>(vx)) * std::sqrt(static_cast<long double>(vy));
  return static_cast<double>(static_cast<long double>(num) / den);
}

void check_lag_input(BitView bits, int max_lag) {
  if (max_lag < 1 || bits.bit_count <= static_cast<std::uint64_t>(max_lag)) {
    throw InputError("pearson_lag: need 1 <= max_lag < number of bits");
  }
}

struct EntAccumulator {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t inside = 0;
  std::uint64_t groups = 0;
  std::uint64_t pair_sum = 0;  // sum of x_i x_{i+1}
};

EntReport finalize(std::span<const std::uint8_t> bytes, const EntAccumulator& acc) {
  EntReport r;
  const std::uint64_t n = bytes.size();
  r.n_bytes = n;
  const double nd = static_cast<double>(n);
  const double expected = nd / 256.0;
  std::uint64_t sum = 0, sum_sq = 0;
  for (int v = 0; v < 256; ++v) {
    const std::uint64_t c = acc.counts[static_cast<std::size_t>(v)];
    sum += c * static_cast<std::uint64_t>(v);
    sum_sq += c * static_cast<std::uint64_t>(v * v);
    if (c > 0) {
      const double p = static_cast<double>(c) / nd;
      r.entropy_per_byte -= p * std::log2(p);
    }
    const double diff = static_cast<double>(c) - expected;
    r.chi2_statistic += diff * diff / expected;
  }
  r.entropy_per_byte = std::max(0.0, r.entropy_per_byte);
  r.chi2_percentile = chi2_percentile(r.chi2_statistic, 255.0);
  r.arithmetic_mean = static_cast<double>(sum) / nd;
  r.monte_carlo_pi = 4.0 * static_cast<double>(acc.inside) / static_cast<double>(acc.groups);

  // Pairs (x_i, x_{i+1}) for i < n-1.
  const std::uint64_t first = bytes.front(), last = bytes.back();
  const std::uint64_t sx = sum - last, sy = sum - first;
  const std::uint64_t sxx = sum_sq - last * last, syy = sum_sq - first * first;
  r.serial_correlation =
      pearson_from_counts(n - 1, sx, sy, acc.pair_sum, sxx, syy, &r.serial_degenerate);
  return r;
}

constexpr std::uint64_t kRadiusSq = ((1ull << 24) - 1) * ((1ull << 24) - 1);

inline bool in_circle(const std::uint8_t* g) {
  const std::uint64_t x = (std::uint64_t{g[0]} << 16) | (std::uint64_t{g[1]} << 8) | g[2];
  const std::uint64_t y = (std::uint64_t{g[3]} << 16) | (std::uint64_t{g[4]} << 8) | g[5];
  return x * x + y * y <= kRadiusSq;
}

void check_ent_input(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6) {
    throw InputError("ent_report: need at least 6 bytes, got " + std::to_string(bytes.size()));
  }
}

}  // namespace

BitFrequency relative_frequency(BitView bits) {
  if (bits.bit_count == 0) {
    throw InputError("relative_frequency: empty bit sequence");
  }
  const std::uint64_t full = bits.bit_count / 8;
  std::uint64_t ones = 0;
#pragma omp parallel for reduction(+ : ones) schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(full); ++i) {
    ones += static_cast<std::uint64_t>(std::popcount(bits.bytes[static_cast<std::size_t>(i)]));
  }
  for (std::uint64_t i = full * 8; i < bits.bit_count; ++i) ones += bits[i];
  const double f1 = static_cast<double>(ones) / static_cast<double>(bits.bit_count);
  return {1.0 - f1, f1, bits.bit_count};
}

LagCorrelations pearson_lag(BitView bits, int max_lag) {
  check_lag_input(bits, max_lag);
  const std::uint64_t n = bits.bit_count;
  const std::vector<std::uint64_t> words = to_words(bits);
  std::vector<std::uint64_t> prefix(words.size() + 1, 0);
  for (std::size_t k = 0; k < words.size(); ++k) {
    prefix[k + 1] = prefix[k] + static_cast<std::uint64_t>(std::popcount(words[k]));
  }
  const auto ones_before = [&](std::uint64_t pos) {
    std::uint64_t c = prefix[pos / 64];
    if (pos % 64) c += static_cast<std::uint64_t>(std::popcount(words[pos / 64] >> (64 - pos % 64)));
    return c;
  };
  const std::uint64_t total = ones_before(n);

  LagCorrelations out;
  out.n_bits = n;
  out.coefficients.resize(static_cast<std::size_t>(max_lag));
  out.degenerate.resize(static_cast<std::size_t>(max_lag));
  for (int d = 1; d <= max_lag; ++d) {
    const std::uint64_t m = n - static_cast<std::uint64_t>(d);
    const std::uint64_t sx = ones_before(m);
    const std::uint64_t sy = total - ones_before(static_cast<std::uint64_t>(d));
    const std::uint64_t blocks = (m + 63) / 64;
    std::uint64_t sxy = 0;
#pragma omp parallel for reduction(+ : sxy) schedule(static)
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(blocks); ++j) {
      const auto k = static_cast<std::uint64_t>(j);
      std::uint64_t v = words[k] & word_at(words, 64 * k + static_cast<std::uint64_t>(d));
      if (k == blocks - 1 && m % 64 != 0) v &= ~0ull << (64 - m % 64);
      sxy += static_cast<std::uint64_t>(std::popcount(v));
    }
    bool deg = false;
    out.coefficients[static_cast<std::size_t>(d - 1)] =
        pearson_from_counts(m, sx, sy, sxy, sx, sy, &deg);
    out.degenerate[static_cast<std::size_t>(d - 1)] = deg;
  }
  return out;
}

EntReport ent_report(std::span<const std::uint8_t> bytes) {
  check_ent_input(bytes);
  const std::uint64_t n = bytes.size();
  const std::uint64_t groups = n / 6;
  EntAccumulator acc;
  acc.groups = groups;
  std::uint64_t inside = 0, pair_sum = 0;
#pragma omp parallel
  {
    std::array<std::uint64_t, 256> local{};
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      ++local[bytes[static_cast<std::size_t>(i)]];
    }
#pragma omp for reduction(+ : inside) schedule(static) nowait
    for (std::int64_t g = 0; g < static_cast<std::int64_t>(groups); ++g) {
      inside += in_circle(bytes.data() + 6 * g);
    }
#pragma omp for reduction(+ : pair_sum) schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n - 1); ++i) {
      pair_sum += std::uint64_t{bytes[static_cast<std::size_t>(i)]} *
                  bytes[static_cast<std::size_t>(i) + 1];
    }
#pragma omp critical
    for (std::size_t v = 0; v < 256; ++v) acc.counts[v] += local[v];
  }
  acc.inside = inside;
  acc.pair_sum = pair_sum;
  return finalize(bytes, acc);
}

double chi2_percentile(double statistic, double dof) {
  if (!(statistic >= 0.0) || !(dof >= 1.0)) {
    throw std::domain_error("chi2_percentile: need statistic >= 0 and dof >= 1");
  }
  if (statistic == 0.0) return 0.0;
  return 100.0 * boost::math::gamma_p(0.5 * dof, 0.5 * statistic);
}

namespace reference {

LagCorrelations pearson_lag(BitView bits, int max_lag) {
  check_lag_input(bits, max_lag);
  const std::uint64_t n = bits.bit_count;
  LagCorrelations out;
  out.n_bits = n;
  for (int d = 1; d <= max_lag; ++d) {
    const std::uint64_t m = n - static_cast<std::uint64_t>(d);
    std::uint64_t sx = 0, sy = 0, sxy = 0;
    for (std::uint64_t i = 0; i < m; ++i) {
      const bool x = bits[i];
      const bool y = bits[i + static_cast<std::uint64_t>(d)];
      sx += x;
      sy += y;
      sxy += x && y;
    }
    bool deg = false;
    out.coefficients.push_back(pearson_from_counts(m, sx, sy, sxy, sx, sy, &deg));
    out.degenerate.push_back(deg);
  }
  return out;
}

EntReport ent_report(std::span<const std::uint8_t> bytes) {
  check_ent_input(bytes);
  EntAccumulator acc;
  for (std::uint8_t b : bytes) ++acc.counts[b];
  acc.groups = bytes.size() / 6;
  for (std::uint64_t g = 0; g < acc.groups; ++g) acc.inside += in_circle(bytes.data() + 6 * g);
  for (std::size_t i = 0; i + 1 < bytes.size(); ++i) {
    acc.pair_sum += std::uint64_t{bytes[i]} * bytes[i + 1];
  }
  return finalize(bytes, acc);
}

}  // namespace reference

std::vector<QualityCheck> quality_checks(const EntReport& ent, const BitFrequency& freq,
                                         const LagCorrelations& lags) {
  std::vector<QualityCheck> checks;
  const auto add = [&](std::string name, double value, double lo, double hi) {
    checks.push_back({std::move(name), value, lo, hi, value >= lo && value <= hi});
  };
  const double n = static_cast<double>(ent.n_bytes);
  const double deficit = 255.0 / (2.0 * n * std::numbers::ln2);
  add("entropy_per_byte", ent.entropy_per_byte, 8.0 - 5.0 * deficit, 8.0);
  add("chi2_percentile", ent.chi2_percentile, 1.0, 99.0);
  const double mean_sd = std::sqrt((256.0 * 256.0 - 1.0) / 12.0);
  add("arithmetic_mean", ent.arithmetic_mean, 127.5 - 5.0 * mean_sd / std::sqrt(n),
      127.5 + 5.0 * mean_sd / std::sqrt(n));
  const double p = std::numbers::pi / 4.0;
  const double pi_sd = 4.0 * std::sqrt(p * (1.0 - p) / std::floor(n / 6.0));
  add("monte_carlo_pi", ent.monte_carlo_pi, std::numbers::pi - 5.0 * pi_sd,
      std::numbers::pi + 5.0 * pi_sd);
  const double serial_bound = 5.0 / std::sqrt(n - 1.0);
  add("serial_correlation", ent.serial_correlation, -serial_bound, serial_bound);
  const double f_bound = 2.5 / std::sqrt(static_cast<double>(freq.n_bits));
  add("frequency_of_zero", freq.f0, 0.5 - f_bound, 0.5 + f_bound);
  const double lag_bound = 4.9 / std::sqrt(static_cast<double>(lags.n_bits));
  for (std::size_t d = 0; d < lags.coefficients.size(); ++d) {
    add("pearson_lag_" + std::to_string(d + 1), lags.coefficients[d], -lag_bound, lag_bound);
  }
  return checks;
}

std::string format_ent_report(const EntReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << "n_bytes=" << r.n_bytes << '\n'
      << "entropy_per_byte=" << r.entropy_per_byte << '\n'
      << "chi2_statistic=" << r.chi2_statistic << '\n'
      << "chi2_percentile=" << r.chi2_percentile << '\n'
      << "arithmetic_mean=" << r.arithmetic_mean << '\n'
      << "monte_carlo_pi=" << r.monte_carlo_pi << '\n'
      << "serial_correlation=" << r.serial_correlation << '\n'
      << "serial_degenerate=" << (r.serial_degenerate ? "true" : "false") << '\n';
  return out.str();
}

std::string format_lags(const LagCorrelations& lags) {
  std::ostringstream out;
  out.precision(10);
  for (std::size_t d = 0; d < lags.coefficients.size(); ++d) {
    out << "pearson_lag_" << d + 1 << '=' << lags.coefficients[d]
        << (lags.degenerate[d] ? " degenerate" : "") << '\n';
  }
  return out.str();
}

}  // namespace nvqrng

#include "nvqrng/extractor.hpp"

#include <omp.h>

#include <algorithm>

#include "nvqrng/errors.hpp"

namespace nvqrng {

namespace {

void check_config(const BinningConfig& cfg) {
  if (cfg.bin_width_ps < kTimestampResolutionPs) {
    throw ConfigError("extract: bin width " + std::to_string(cfg.bin_width_ps) +
                      " ps is below the 25 ps timestamp resolution");
  }
}

// Appends symbols for timestamps[begin, end); the caller guarantees that no
// period straddles the range boundary.
std::uint64_t scan_range(std::span<const std::uint64_t> ts, std::size_t begin, std::size_t end,
                         const BinningConfig& cfg, std::vector<std::uint32_t>& out) {
  const auto period = static_cast<std::uint64_t>(cfg.period_ps);
  const auto width = static_cast<std::uint64_t>(cfg.bin_width_ps);
  std::uint64_t discarded = 0;
  bool have_last = false;
  std::uint64_t last_period = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const std::uint64_t p = ts[i] / period;
    if (have_last && p == last_period) {
      ++discarded;
      continue;
    }
    have_last = true;
    last_period = p;
    out.push_back(static_cast<std::uint32_t>((ts[i] % period) / width));
  }
  return discarded;
}

}  // namespace

namespace reference {

std::vector<std::uint32_t> first_arrival_symbols(std::span<const std::uint64_t> timestamps,
                                                 const BinningConfig& cfg,
                                                 std::uint64_t* discarded) {
  check_config(cfg);
  std::vector<std::uint32_t> out;
  out.reserve(timestamps.size());
  const std::uint64_t d = scan_range(timestamps, 0, timestamps.size(), cfg, out);
  if (discarded != nullptr) *discarded = d;
  return out;
}

}  // namespace reference

std::vector<std::uint32_t> first_arrival_symbols(std::span<const std::uint64_t> timestamps,
                                                 const BinningConfig& cfg,
                                                 std::uint64_t* discarded) {
  check_config(cfg);
  const std::size_t n = timestamps.size();
  constexpr std::size_t kMinChunk = 1 << 16;
  const int threads = omp_get_max_threads();
  const std::size_t chunks =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(threads) * 4,
                                                      n / kMinChunk));
  if (chunks == 1) {
    return reference::first_arrival_symbols(timestamps, cfg, discarded);
  }

  // Chunk starts moved forward to the first event of a new period.
  const auto period = static_cast<std::uint64_t>(cfg.period_ps);
  std::vector<std::size_t> starts(chunks + 1);
  starts[0] = 0;
  starts[chunks] = n;
  for (std::size_t c = 1; c < chunks; ++c) {
    std::size_t s = std::max(starts[c - 1], n * c / chunks);
    while (s > 0 && s < n && timestamps[s] / period == timestamps[s - 1] / period) ++s;
    starts[c] = s;
  }

  std::vector<std::vector<std::uint32_t>> parts(chunks);
  std::vector<std::uint64_t> dropped(chunks, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    parts[c].reserve(starts[c + 1] - starts[c]);
    dropped[c] = scan_range(timestamps, starts[c], starts[c + 1], cfg, parts[c]);
  }

  std::vector<std::uint32_t> out;
  out.reserve(n);
  std::uint64_t total_dropped = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    out.insert(out.end(), parts[c].begin(), parts[c].end());
    total_dropped += dropped[c];
  }
  if (discarded != nullptr) *discarded = total_dropped;
  return out;
}

std::vector<std::uint8_t> pack_symbols(std::span<const std::uint32_t> symbols,
                                       int bits_per_symbol) {
  if (bits_per_symbol == 8) {
    return {symbols.begin(), symbols.end()};
  }
  const std::uint64_t total_bits = symbols.size() * static_cast<std::uint64_t>(bits_per_symbol);
  std::vector<std::uint8_t> out((total_bits + 7) / 8, 0);
  std::uint64_t pos = 0;
  for (std::uint32_t s : symbols) {
    for (int b = bits_per_symbol - 1; b >= 0; --b, ++pos) {
      if ((s >> b) & 1u) {
        out[pos / 8] |= static_cast<std::uint8_t>(0x80u >> (pos % 8));
      }
    }
  }
  return out;
}

ExtractionResult extract(const TimestampStream& stream, const BinningConfig& cfg) {
  check_config(cfg);
  if (!is_non_decreasing(stream.timestamps)) {
    throw InputError("extract: timestamp stream is not sorted");
  }
  ExtractionResult r;
  const std::vector<std::uint32_t> symbols =
      first_arrival_symbols(stream.timestamps, cfg, &r.photons_discarded_same_period);
  r.photons_used = symbols.size();
  r.bit_count = r.photons_used * static_cast<std::uint64_t>(cfg.bits_per_symbol());
  r.bytes = pack_symbols(symbols, cfg.bits_per_symbol());
  r.elapsed_ps = stream.duration_ps;
  r.bits_per_second = throughput(r);
  return r;
}

double throughput(const ExtractionResult& result) {
  if (result.elapsed_ps == 0 || result.photons_used == 0) {
    return 0.0;
  }
  return static_cast<double>(result.bit_count) / (static_cast<double>(result.elapsed_ps) * 1e-12);
}

double throughput(const ExtractionResult& result, const BinningConfig& cfg) {
  if (result.elapsed_ps == 0 || result.photons_used == 0) {
    return 0.0;
  }
  return cfg.bits_per_symbol() * static_cast<double>(result.photons_used) /
         (static_cast<double>(result.elapsed_ps) * 1e-12);
}

std::vector<std::uint32_t> single_arrival_symbols(std::span<const std::uint64_t> timestamps,
                                                  const BinningConfig& cfg) {
  check_config(cfg);
  const auto period = static_cast<std::uint64_t>(cfg.period_ps);
  const auto width = static_cast<std::uint64_t>(cfg.bin_width_ps);
  std::vector<std::uint32_t> out;
  std::size_t i = 0;
  while (i < timestamps.size()) {
    const std::uint64_t p = timestamps[i] / period;
    std::size_t j = i + 1;
    while (j < timestamps.size() && timestamps[j] / period == p) ++j;
    if (j - i == 1) {
      out.push_back(static_cast<std::uint32_t>((timestamps[i] % period) / width));
    }
    i = j;
  }
  return out;
}

}  // namespace nvqrng

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace nvqrng {

enum class StreamOrigin { signal, background, dark, merged };

std::string_view to_string(StreamOrigin origin);

/// Photon arrival times in integer picoseconds over [0, duration_ps].
/// Generator output is non-decreasing; detector-processed streams are strictly
/// increasing and sit on the time-tagger grid.
struct TimestampStream {
  std::vector<std::uint64_t> timestamps;
  std::uint64_t duration_ps = 0;
  StreamOrigin origin = StreamOrigin::merged;

  std::size_t size() const noexcept { return timestamps.size(); }
  bool empty() const noexcept { return timestamps.empty(); }
  double duration_s() const noexcept { return static_cast<double>(duration_ps) * 1e-12; }
};

bool is_strictly_increasing(std::span<const std::uint64_t> ts) noexcept;
bool is_non_decreasing(std::span<const std::uint64_t> ts) noexcept;

/// Smallest gap between consecutive timestamps; UINT64_MAX for fewer than two.
std::uint64_t min_gap(std::span<const std::uint64_t> ts) noexcept;

/// Binary timestamp file: magic "NVQTS001", u64 LE record count, then one u64
/// LE timestamp per record, strictly increasing.
inline constexpr std::string_view kTimestampMagic = "NVQTS001";

void write_timestamp_file(const std::filesystem::path& path,
                          std::span<const std::uint64_t> timestamps);

/// Throws InputError on a bad magic, truncated body or non-increasing records.
std::vector<std::uint64_t> read_timestamp_file(const std::filesystem::path& path);

}  // namespace nvqrng

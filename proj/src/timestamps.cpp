#include "nvqrng/timestamps.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>

#include "nvqrng/errors.hpp"

namespace nvqrng {

std::string_view to_string(StreamOrigin origin) {
  switch (origin) {
    case StreamOrigin::signal:
      return "signal";
    case StreamOrigin::background:
      return "background";
    case StreamOrigin::dark:
      return "dark";
    case StreamOrigin::merged:
      return "merged";
  }
  return "unknown";
}

bool is_strictly_increasing(std::span<const std::uint64_t> ts) noexcept {
  return std::adjacent_find(ts.begin(), ts.end(),
                            [](std::uint64_t a, std::uint64_t b) { return b <= a; }) == ts.end();
}

bool is_non_decreasing(std::span<const std::uint64_t> ts) noexcept {
  return std::is_sorted(ts.begin(), ts.end());
}

std::uint64_t min_gap(std::span<const std::uint64_t> ts) noexcept {
  std::uint64_t gap = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t i = 1; i < ts.size(); ++i) {
    gap = std::min(gap, ts[i] - ts[i - 1]);
  }
  return gap;
}

namespace {

void put_u64_le(std::array<char, 8>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    buf[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffu);
  }
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | p[i];
  }
  return v;
}

}  // namespace

void write_timestamp_file(const std::filesystem::path& path,
                          std::span<const std::uint64_t> timestamps) {
  if (!is_strictly_increasing(timestamps)) {
    throw InputError("timestamp file " + path.string() + ": records must be strictly increasing");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out.write(kTimestampMagic.data(), static_cast<std::streamsize>(kTimestampMagic.size()));
  std::array<char, 8> buf{};
  put_u64_le(buf, timestamps.size());
  out.write(buf.data(), 8);

  constexpr std::size_t kChunk = 1 << 16;
  std::vector<char> block;
  block.reserve(kChunk * 8);
  for (std::size_t i = 0; i < timestamps.size(); i += kChunk) {
    block.clear();
    const std::size_t end = std::min(timestamps.size(), i + kChunk);
    for (std::size_t j = i; j < end; ++j) {
      put_u64_le(buf, timestamps[j]);
      block.insert(block.end(), buf.begin(), buf.end());
    }
    out.write(block.data(), static_cast<std::streamsize>(block.size()));
  }
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

std::vector<std::uint64_t> read_timestamp_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string() + " for reading");
  }
  std::array<unsigned char, 16> header{};
  in.read(reinterpret_cast<char*>(header.data()), 16);
  if (in.gcount() != 16 ||
      std::string_view(reinterpret_cast<const char*>(header.data()), 8) != kTimestampMagic) {
    throw InputError(path.string() + ": not a timestamp file (bad magic)");
  }
  const std::uint64_t count = get_u64_le(header.data() + 8);
  const auto file_size = std::filesystem::file_size(path);
  if (file_size != 16 + count * 8) {
    throw InputError(path.string() + ": header declares " + std::to_string(count) +
                     " records but file holds " + std::to_string(file_size) + " bytes");
  }
  std::vector<std::uint64_t> ts(count);
  std::vector<unsigned char> raw(count * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  for (std::uint64_t i = 0; i < count; ++i) {
    ts[i] = get_u64_le(raw.data() + 8 * i);
  }
  if (!is_strictly_increasing(ts)) {
    throw InputError(path.string() + ": records are not strictly increasing");
  }
  return ts;
}

}  // namespace nvqrng

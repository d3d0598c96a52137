#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "nvqrng/errors.hpp"
#include "nvqrng/timestamps.hpp"

using namespace nvqrng;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nvqrng_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_raw(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
}

std::string u64le(std::uint64_t v) {
  std::string s(8, '\0');
  for (int i = 0; i < 8; ++i) s[static_cast<std::size_t>(i)] = static_cast<char>(v >> (8 * i));
  return s;
}

}  // namespace

TEST_SUITE("timestamps") {

TEST_CASE("ordering helpers") {
  const std::vector<std::uint64_t> inc{1, 5, 9}, flat{1, 5, 5}, down{3, 2};
  CHECK(is_strictly_increasing(inc));
  CHECK_FALSE(is_strictly_increasing(flat));
  CHECK(is_non_decreasing(flat));
  CHECK_FALSE(is_non_decreasing(down));
  CHECK(min_gap(inc) == 4);
  CHECK(min_gap(std::vector<std::uint64_t>{7}) == UINT64_MAX);
  CHECK(to_string(StreamOrigin::background) == "background");
}

TEST_CASE("file layout") {
  const auto p = scratch("layout.ts");
  write_timestamp_file(p, std::vector<std::uint64_t>{1, 258});
  std::ifstream in(p, std::ios::binary);
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  CHECK(bytes == std::string("NVQTS001") + u64le(2) + u64le(1) + u64le(258));
}

TEST_CASE("round trip") {
  const auto p = scratch("round.ts");
  std::vector<std::uint64_t> ts;
  for (std::uint64_t i = 0; i < 300000; ++i) ts.push_back(i * 24025 + (i % 7));
  write_timestamp_file(p, ts);
  CHECK(read_timestamp_file(p) == ts);
  write_timestamp_file(p, std::vector<std::uint64_t>{});
  CHECK(read_timestamp_file(p).empty());
  CHECK(fs::file_size(p) == 16);
}

TEST_CASE("malformed files") {
  const auto p = scratch("bad.ts");
  CHECK_THROWS_AS(write_timestamp_file(p, std::vector<std::uint64_t>{5, 5}), InputError);
  write_raw(p, "NVQTS002" + u64le(0));
  CHECK_THROWS_AS(read_timestamp_file(p), InputError);
  write_raw(p, "NVQTS001" + u64le(3) + u64le(1));
  CHECK_THROWS_AS(read_timestamp_file(p), InputError);
  write_raw(p, "NVQTS001" + u64le(2) + u64le(9) + u64le(4));
  CHECK_THROWS_AS(read_timestamp_file(p), InputError);
  write_raw(p, "NVQ");
  CHECK_THROWS_AS(read_timestamp_file(p), InputError);
  CHECK_THROWS(read_timestamp_file(scratch("missing.ts")));
}

}  // TEST_SUITE

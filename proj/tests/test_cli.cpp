#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nvqrng/cli.hpp"
#include "nvqrng/config.hpp"
#include "nvqrng/errors.hpp"
#include "nvqrng/estimator.hpp"
#include "nvqrng/timestamps.hpp"

using namespace nvqrng;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nvqrng_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("durations") {
  CHECK(parse_duration_ps("12800") == 12800);
  CHECK(parse_duration_ps("12.8ns") == 12800);
  CHECK(parse_duration_ps("2s") == 2'000'000'000'000ull);
  CHECK(parse_duration_ps("3us") == 3'000'000);
  CHECK(parse_duration_ps("1.5ms") == 1'500'000'000);
  CHECK(parse_duration_ps("25ps") == 25);
  CHECK_THROWS_AS(parse_duration_ps("2 s"), ConfigError);
  CHECK_THROWS_AS(parse_duration_ps("2min"), ConfigError);
  CHECK_THROWS_AS(parse_duration_ps("-5ns"), ConfigError);
  CHECK_THROWS_AS(parse_duration_ps("0.5ps"), ConfigError);
  CHECK_THROWS_AS(parse_duration_ps("ns"), ConfigError);
}

TEST_CASE("config text") {
  const auto m = parse_config_text("# run\nregion = 2\n\nseed=9  # trailing\n", "a.cfg");
  CHECK(m.at("region").value == "2");
  CHECK(m.at("seed").origin == "a.cfg:4");
  const RunConfig c = RunConfig::from_map(m);
  CHECK(*c.region == 2);
  CHECK(c.seed == 9);
  CHECK(c.params().n_emitters() == 2);

  const auto error_of = [](const std::string& text) {
    try {
      RunConfig::from_map(parse_config_text(text, "b.cfg"));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("seed=1\nbogus=2\n").find("b.cfg:2") != std::string::npos);
  CHECK(error_of("seed=1\nseed=2\n").find("b.cfg:2") != std::string::npos);
  CHECK(error_of("seed\n").find("b.cfg:1") != std::string::npos);
  CHECK(error_of("dead_time=5 ns\n").find("b.cfg:1: dead_time") != std::string::npos);
  CHECK(error_of("efficiency=1.5\n").find("efficiency") != std::string::npos);
  CHECK(error_of("bins=100\n").find("power of two") != std::string::npos);
  CHECK(error_of("seed=abc\n").find("seed") != std::string::npos);
}

TEST_CASE("emitter source rules") {
  RunConfig both = RunConfig::from_map(parse_config_text("region=1\nbeta=1.2\n", "c"));
  CHECK_THROWS_AS(both.params(), ConfigError);
  RunConfig partial = RunConfig::from_map(parse_config_text("n_emitters=2\nbeta=1.2\n", "c"));
  CHECK_THROWS_AS(partial.params(), ConfigError);
  RunConfig full = RunConfig::from_map(parse_config_text(
      "n_emitters=2\ngamma1_per_ns=0.04\nbeta=1.2\nrho=0.9\nflux_per_s=10000\n", "c"));
  CHECK(full.params().gamma2() == doctest::Approx(0.002));
  CHECK(full.flux().lambda_per_emitter == doctest::Approx(1e-5));
}

TEST_CASE("config hash") {
  const RunConfig a = RunConfig::from_map(parse_config_text("region=1\nseed=4\n", "x"));
  const RunConfig b = RunConfig::from_map(parse_config_text("seed=4\nregion=1\n", "y"));
  const RunConfig c = RunConfig::from_map(parse_config_text("region=1\nseed=5\n", "z"));
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("theory") {
  const Run r = call({"theory", "--region", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("min_entropy=0.999975") != std::string::npos);
  const Run bad = call({"theory", "--region", "1", "--beta", "1.5"});
  CHECK(bad.code == cli::kUsageError);
  CHECK(bad.err.find("mutually exclusive") != std::string::npos);
  CHECK(call({"frobnicate"}).code == cli::kUsageError);
  CHECK(call({}).code == cli::kUsageError);
}

TEST_CASE("config file with flag override") {
  const fs::path dir = scratch_dir("override");
  const fs::path cfg = dir / "run.cfg";
  std::ofstream(cfg) << "region=2\nduration=10ms\nseed=3\n";
  const Run r = call({"simulate", "--config", cfg.string(), "--seed", "8", "--out",
                      (dir / "a.ts").string()});
  REQUIRE(r.code == 0);
  const RunConfig want =
      RunConfig::from_map(parse_config_text("region=2\nduration=10ms\nseed=8\n", "w"));
  CHECK(r.out.find("config_hash=" + hex64(want.hash())) != std::string::npos);
  std::ofstream(cfg) << "region=2\nduration=10 ms\n";
  const Run bad = call({"simulate", "--config", cfg.string(), "--out", (dir / "b.ts").string()});
  CHECK(bad.code == cli::kUsageError);
  CHECK(bad.err.find("run.cfg:2") != std::string::npos);
}

TEST_CASE("simulate, extract, quality pipeline") {
  const fs::path dir = scratch_dir("pipeline");
  const auto ts = (dir / "r5.ts").string(), bin = (dir / "r5.bin").string();
  REQUIRE(call({"simulate", "--region", "5", "--duration", "200ms", "--seed", "2", "--out", ts})
              .code == 0);
  const auto stamps = read_timestamp_file(ts);
  CHECK(stamps.size() > 100000);
  const auto meta = read_meta(ts);
  CHECK(meta.at("duration_ps") == "200000000000");
  CHECK(meta.at("records") == std::to_string(stamps.size()));

  const Run ex = call({"extract", "--in", ts, "--out", bin});
  REQUIRE(ex.code == 0);
  CHECK(fs::file_size(bin) == stamps.size());
  const auto bmeta = read_meta(bin);
  CHECK(bmeta.at("photons_used") == std::to_string(stamps.size()));
  CHECK(bmeta.at("bit_count") == std::to_string(8 * stamps.size()));
  CHECK(bmeta.at("source_config_hash") == meta.at("config_hash"));

  const Run q = call({"quality", "--in", bin});
  CHECK(q.code == 0);
  CHECK(q.out.find("pearson_lag_15=") != std::string::npos);
  CHECK(q.out.find("FAIL") == std::string::npos);

  const Run x = call({"extract", "--in", ts, "--out", (dir / "r5_16.bin").string(), "--bins",
                      "16"});
  REQUIRE(x.code == 0);
  CHECK(read_meta(dir / "r5_16.bin").at("bit_count") == std::to_string(4 * stamps.size()));
}

TEST_CASE("extract on empty input") {
  const fs::path dir = scratch_dir("empty");
  const auto zero = dir / "zero.ts";
  std::ofstream(zero).close();
  const Run r = call({"extract", "--in", zero.string(), "--out", (dir / "zero.bin").string()});
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  CHECK(fs::file_size(dir / "zero.bin") == 0);

  const auto header_only = dir / "hdr.ts";
  write_timestamp_file(header_only, std::vector<std::uint64_t>{});
  const Run h = call({"extract", "--in", header_only.string(), "--out",
                      (dir / "hdr.bin").string()});
  CHECK(h.code == 0);
  CHECK(fs::file_size(dir / "hdr.bin") == 0);
}

TEST_CASE("bad inputs report paths") {
  const fs::path dir = scratch_dir("bad");
  const auto junk = dir / "junk.ts";
  std::ofstream(junk) << "not a timestamp file";
  const Run r = call({"extract", "--in", junk.string(), "--out", (dir / "j.bin").string()});
  CHECK(r.code == cli::kInputError);
  CHECK(r.err.find(junk.string()) != std::string::npos);
  CHECK(call({"extract", "--in", (dir / "nope.ts").string(), "--out", "x"}).code ==
        cli::kUsageError);
}

TEST_CASE("g2 and fit") {
  const fs::path dir = scratch_dir("g2fit");
  const auto ts = (dir / "s.ts").string(), hist = (dir / "s.tsv").string();
  REQUIRE(call({"simulate", "--n-emitters", "1", "--gamma1-per-ns", "0.05", "--beta", "1.2",
                "--rho", "0.95", "--flux-per-s", "2e6", "--dead-time", "0", "--duration",
                "300ms", "--seed", "5", "--out", ts})
              .code == 0);
  const Run g = call({"g2", "--in", ts, "--out", hist, "--max-tau", "300ns"});
  REQUIRE(g.code == 0);
  std::ifstream hin(hist);
  CHECK(read_histogram(hin).tau_ns.size() == 601);
  const Run f = call({"fit", "--in", hist, "--in", hist, "--rho", "0.95", "--n-max", "4"});
  CHECK(f.code == 0);
  CHECK(f.out.find("n_emitters=1") != std::string::npos);
  CHECK(f.out.find("repetitions=2") != std::string::npos);
  CHECK(call({"fit", "--in", hist}).code == cli::kUsageError);
}

TEST_CASE("reproduce is thread-count independent") {
  const fs::path a = scratch_dir("repro_a"), b = scratch_dir("repro_b");
  const Run r1 = call({"--threads", "1", "reproduce", "3", "--duration", "300ms", "--seed", "11",
                       "--out-dir", a.string()});
  const Run r2 = call({"reproduce", "3", "--duration", "300ms", "--seed", "11", "--out-dir",
                       b.string(), "--threads", "4"});
  CHECK(r1.code == r2.code);
  for (const char* f : {"region3.ts", "region3.bin", "region3.ts.meta", "region3.bin.meta",
                        "region3_report.txt"}) {
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  }
  CHECK(r1.out.find("min_entropy") != std::string::npos);
}

}  // TEST_SUITE

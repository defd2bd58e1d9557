#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "slv/manifest.hpp"
#include "slv/trace_io.hpp"

using namespace slv;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / name;
}

Trace sample_trace(std::size_t n = 64) {
  TraceConfig tc;
  tc.sample_rate = 2.5e9;
  tc.duration = static_cast<double>(n) / tc.sample_rate;
  tc.t_start = -8.0e-6;
  Trace t{tc, Channel::kProbe, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i)
    t.samples[i] = std::sin(0.37 * static_cast<double>(i)) * 1.25;
  return t;
}

void clobber_byte(const fs::path& p, std::size_t offset, char value) {
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(value);
}

}  // namespace

TEST_CASE("binary trace round trip is exact at float precision") {
  const fs::path p = temp_file("slv_roundtrip.slvt");
  const Trace t = sample_trace();
  write_trace_binary(p.string(), t);

  const RawTrace r = read_trace_binary(p.string());
  REQUIRE(r.channel == Channel::kProbe);
  REQUIRE(r.sample_rate == t.config.sample_rate);
  REQUIRE(r.samples.size() == t.samples.size());
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    REQUIRE(r.samples[i] == static_cast<float>(t.samples[i]));

  // A second write of the same trace is byte-identical.
  const fs::path q = temp_file("slv_roundtrip2.slvt");
  write_trace_binary(q.string(), t);
  std::ifstream a(p, std::ios::binary), b(q, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  REQUIRE(sa == sb);
  fs::remove(p);
  fs::remove(q);
}

TEST_CASE("binary header is fixed-layout little-endian") {
  const fs::path p = temp_file("slv_header.slvt");
  write_trace_binary(p.string(), sample_trace());
  std::ifstream in(p, std::ios::binary);
  std::string head(23, '\0');
  in.read(head.data(), 23);
  REQUIRE(head.substr(0, 4) == "SLVT");
  // version u16 little-endian
  REQUIRE(static_cast<unsigned char>(head[4]) == kTraceFormatVersion);
  REQUIRE(static_cast<unsigned char>(head[5]) == 0);
  fs::remove(p);
}

TEST_CASE("corrupted traces fail with the offending field named") {
  const fs::path p = temp_file("slv_corrupt.slvt");

  SECTION("bad magic") {
    write_trace_binary(p.string(), sample_trace());
    clobber_byte(p, 0, 'X');
    REQUIRE_THROWS_MATCHES(read_trace_binary(p.string()), FormatError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("magic")));
  }
  SECTION("unsupported version") {
    write_trace_binary(p.string(), sample_trace());
    clobber_byte(p, 4, 9);
    REQUIRE_THROWS_MATCHES(read_trace_binary(p.string()), FormatError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("version")));
  }
  SECTION("unknown channel tag") {
    write_trace_binary(p.string(), sample_trace());
    clobber_byte(p, 6, 7);
    REQUIRE_THROWS_MATCHES(read_trace_binary(p.string()), FormatError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("channel")));
  }
  SECTION("truncated payload") {
    write_trace_binary(p.string(), sample_trace());
    fs::resize_file(p, fs::file_size(p) - 10);
    REQUIRE_THROWS_MATCHES(read_trace_binary(p.string()), FormatError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("samples")));
  }
  SECTION("shorter than the header") {
    std::ofstream(p, std::ios::binary) << "SLV";
    REQUIRE_THROWS_MATCHES(read_trace_binary(p.string()), FormatError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("header")));
  }
  fs::remove(p);
}

TEST_CASE("csv trace round trip matches the binary payload") {
  const fs::path p = temp_file("slv_trace.csv");
  const Trace t = sample_trace(256);
  write_trace_csv(p.string(), t);

  const Trace r = read_trace_csv(p.string(), t.config.beat_frequency);
  REQUIRE(r.channel == t.channel);
  REQUIRE(r.samples.size() == t.samples.size());
  REQUIRE_THAT(r.config.sample_rate,
               Catch::Matchers::WithinRel(t.config.sample_rate, 1e-9));
  // The CSV stores float32-rounded values, same as the binary format.
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    REQUIRE(static_cast<float>(r.samples[i]) ==
            static_cast<float>(t.samples[i]));
  fs::remove(p);
}

TEST_CASE("csv trace rejects a broken row") {
  const fs::path p = temp_file("slv_bad.csv");
  std::ofstream(p) << "# time_s,value_arb,channel=probe\n"
                   << "0,1.0\n"
                   << "4e-10,huh\n";
  REQUIRE_THROWS_MATCHES(read_trace_csv(p.string(), 80e6), FormatError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("row 3")));
  fs::remove(p);
}

TEST_CASE("csv trace rejects a non-uniform time grid") {
  const fs::path p = temp_file("slv_grid.csv");
  std::ofstream(p) << "# time_s,value_arb,channel=probe\n"
                   << "0,1\n4e-10,1\n8e-10,1\n1.9e-9,1\n";
  REQUIRE_THROWS_AS(read_trace_csv(p.string(), 80e6), FormatError);
  fs::remove(p);
}

TEST_CASE("fnv-1a 64 test vectors") {
  REQUIRE(fnv1a64("") == 0xcbf29ce484222325ull);
  REQUIRE(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  REQUIRE(fnv1a64("foobar") == 0x85944171f73967e8ull);
  REQUIRE(fnv_hex(fnv1a64("")) == "cbf29ce484222325");
}

TEST_CASE("output records carry size and checksum") {
  const fs::path p = temp_file("slv_manifest_payload.bin");
  std::ofstream(p, std::ios::binary) << "foobar";
  const OutputRecord rec = record_output(p.string(), "payload");
  REQUIRE(rec.name == "payload");
  REQUIRE(rec.bytes == 6);
  REQUIRE(rec.fnv1a64_hex == "85944171f73967e8");
  fs::remove(p);
}

TEST_CASE("manifest serializes to ordered json") {
  const fs::path p = temp_file("slv_manifest.json");
  RunManifest man;
  man.command = "test";
  man.config_fnv1a64_hex = "deadbeefdeadbeef";
  man.master_seed = 42;
  man.generated_at = "2026-01-01T00:00:00Z";
  man.outputs.push_back(OutputRecord{"x.csv", 10, "0123456789abcdef"});
  write_manifest(p.string(), man);

  std::ifstream in(p);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  REQUIRE_THAT(text, ContainsSubstring("\"schema\": \"slv-manifest/1\""));
  REQUIRE_THAT(text, ContainsSubstring("\"master_seed\": 42"));
  REQUIRE_THAT(text, ContainsSubstring("\"x.csv\""));
  // Field order is stable: schema first.
  REQUIRE(text.find("schema") < text.find("tool_version"));
  REQUIRE(text.find("tool_version") < text.find("outputs"));
  fs::remove(p);
}

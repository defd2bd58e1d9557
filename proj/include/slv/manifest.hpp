#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include "slv/errors.hpp"
#include "slv/version.hpp"

#include "json.hpp"

namespace slv {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t hash = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    hash ^= p[i];
    hash *= kFnvPrime;
  }
  return hash;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t hash = kFnvOffset) {
  return fnv1a64(s.data(), s.size(), hash);
}

inline std::string fnv_hex(std::uint64_t hash) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

inline std::uint64_t file_fnv1a64(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for hashing: " + path);
  std::uint64_t hash = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    hash = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), hash);
  return hash;
}

/// One file a command produced.
struct OutputRecord {
  std::string name;
  std::uint64_t bytes = 0;
  std::string fnv1a64_hex;
};

/// Receipt for one command invocation: enough to verify the outputs later
/// and to regenerate any single record from the master seed. Only
/// generated_at varies between identical reruns.
struct RunManifest {
  std::string schema = "slv-manifest/1";
  std::string tool_version = kToolVersion;
  std::string command;
  std::string config_fnv1a64_hex;  // hash of the effective config text
  std::uint64_t master_seed = 0;
  std::string seed_note =
      "per-operation seeds derive from master_seed via the documented "
      "(operation, point index, run index) hash chain; any record is "
      "reproducible in isolation";
  std::vector<OutputRecord> outputs;
  std::string generated_at;  // wall clock; excluded from determinism checks
};

inline std::string iso8601_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
#if defined(_WIN32)
  gmtime_s(&tm, &now);
#else
  gmtime_r(&now, &tm);
#endif
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline OutputRecord record_output(const std::string& path,
                                  const std::string& name) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot stat output: " + path);
  OutputRecord rec;
  rec.name = name;
  rec.bytes = static_cast<std::uint64_t>(in.tellg());
  rec.fnv1a64_hex = fnv_hex(file_fnv1a64(path));
  return rec;
}

inline void write_manifest(const std::string& path,
                           const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["schema"] = manifest.schema;
  j["tool_version"] = manifest.tool_version;
  j["command"] = manifest.command;
  j["config_fnv1a64"] = manifest.config_fnv1a64_hex;
  j["master_seed"] = manifest.master_seed;
  j["seed_note"] = manifest.seed_note;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const OutputRecord& rec : manifest.outputs) {
    nlohmann::ordered_json o;
    o["name"] = rec.name;
    o["bytes"] = rec.bytes;
    o["fnv1a64"] = rec.fnv1a64_hex;
    j["outputs"].push_back(o);
  }
  j["generated_at"] = manifest.generated_at;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace slv

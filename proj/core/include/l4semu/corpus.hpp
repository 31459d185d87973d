#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <string>
#include <vector>

#include "l4semu/metrics.hpp"
#include "l4semu/scenario.hpp"

namespace l4semu {

// Hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr const char* kManifestFile = "manifest.json";

struct ManifestEntry {
  std::string run_id;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> files;  // name, sha256
};

struct Manifest {
  std::string fingerprint;
  std::vector<ManifestEntry> runs;
};

// Runs `runs` independent emulations with seeds seed_base .. seed_base+runs-1
// into run_NNNN subdirectories of `dir`, then writes manifest.json. Output is
// identical for any `parallelism`. On failure the directory is removed and
// the error rethrown.
Manifest run_batch(const ScenarioConfig& cfg, std::uint32_t runs, std::uint64_t seed_base,
                   unsigned parallelism, const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& dir, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& dir);

// Checks every file hash listed in the manifest. Throws std::runtime_error
// naming the first mismatch.
void verify_manifest(const std::filesystem::path& dir, const Manifest& manifest);

// Verifies the manifest and loads every run in manifest order.
std::vector<RunRecord> load_corpus(const std::filesystem::path& dir);

}  // namespace l4semu

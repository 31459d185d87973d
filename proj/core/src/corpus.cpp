#include "l4semu/corpus.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "l4semu/emulator.hpp"
#include "l4semu/parallel.hpp"

namespace l4semu {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(content);
}

namespace {

const char* const kRunFiles[] = {kMetaFile, kSeriesFile, kFlowsFile};

std::string run_name(std::uint32_t index) { return fmt::format("run_{:04d}", index); }

}  // namespace

Manifest run_batch(const ScenarioConfig& cfg, std::uint32_t runs, std::uint64_t seed_base,
                   unsigned parallelism, const fs::path& dir) {
  if (runs < 1) throw std::invalid_argument("batch: runs must be >= 1");
  cfg.validate();
  fs::create_directories(dir);

  Manifest manifest;
  manifest.fingerprint = cfg.fingerprint();
  manifest.runs.resize(runs);
  try {
    parallel_for(runs, parallelism, [&](std::size_t i) {
      const auto index = static_cast<std::uint32_t>(i);
      const std::uint64_t seed = seed_base + index;
      const std::string id = run_name(index);
      const RunOutput out = run_emulation(cfg, seed, id);
      const fs::path run_dir = dir / id;
      write_run_dir(run_dir, out.record, run_metadata(cfg, out));

      ManifestEntry entry{id, seed, {}};
      for (const char* f : kRunFiles) entry.files.emplace_back(f, sha256_file(run_dir / f));
      manifest.runs[i] = std::move(entry);
    });
  } catch (...) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    throw;
  }
  write_manifest(dir, manifest);
  return manifest;
}

void write_manifest(const fs::path& dir, const Manifest& manifest) {
  nlohmann::ordered_json doc;
  doc["fingerprint"] = manifest.fingerprint;
  doc["count"] = manifest.runs.size();
  auto& arr = doc["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : manifest.runs) {
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& [name, hash] : r.files) files[name] = hash;
    arr.push_back({{"run_id", r.run_id}, {"seed", r.seed}, {"files", files}});
  }
  std::ofstream out(dir / kManifestFile, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << doc.dump(2) << '\n';
}

Manifest read_manifest(const fs::path& dir) {
  std::ifstream in(dir / kManifestFile);
  if (!in) throw std::runtime_error("no manifest in " + dir.string());
  Manifest m;
  try {
    const auto doc = nlohmann::ordered_json::parse(in);
    m.fingerprint = doc.at("fingerprint").get<std::string>();
    for (const auto& r : doc.at("runs")) {
      ManifestEntry e{r.at("run_id").get<std::string>(), r.at("seed").get<std::uint64_t>(), {}};
      for (const auto& [name, hash] : r.at("files").items()) e.files.emplace_back(name, hash.get<std::string>());
      m.runs.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error((dir / kManifestFile).string() + ": " + e.what());
  }
  return m;
}

void verify_manifest(const fs::path& dir, const Manifest& manifest) {
  for (const auto& r : manifest.runs) {
    for (const auto& [name, hash] : r.files) {
      const fs::path p = dir / r.run_id / name;
      if (!fs::exists(p)) throw std::runtime_error("manifest: missing " + p.string());
      if (sha256_file(p) != hash) throw std::runtime_error("manifest: hash mismatch for " + p.string());
    }
  }
}

std::vector<RunRecord> load_corpus(const fs::path& dir) {
  const Manifest m = read_manifest(dir);
  if (m.runs.empty()) throw std::runtime_error("corpus " + dir.string() + " is empty");
  verify_manifest(dir, m);
  std::vector<RunRecord> runs;
  runs.reserve(m.runs.size());
  for (const auto& r : m.runs) runs.push_back(read_run_dir(dir / r.run_id));
  return runs;
}

}  // namespace l4semu

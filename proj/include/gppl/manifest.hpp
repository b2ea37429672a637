#pragma once

// Run manifests: what was run, on which inputs, producing which files.
// Wall-clock timings are only recorded on request so that two runs with the
// same inputs and seeds produce byte-identical manifests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gppl {

std::string library_version();

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> inputs;   // path as given -> sha256
  std::map<std::string, std::string> outputs;  // path relative to the output dir -> sha256
  std::map<std::string, double> timings;       // seconds; written only when non-empty
  nlohmann::json parameters = nlohmann::json::object();

  void add_input(const std::filesystem::path& path);
  // Hashes a file that already exists under out_dir.
  void add_output(const std::filesystem::path& out_dir, const std::string& relative);

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

// Writes out_dir/manifest.json.
void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

// Recomputes every output hash; returns the relative paths that differ or are missing.
std::vector<std::string> verify_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

}  // namespace gppl

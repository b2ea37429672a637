#include "gppl/manifest.hpp"

#include "gppl/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <stdexcept>

#ifndef GPPL_VERSION
#define GPPL_VERSION "unknown"
#endif

namespace gppl {

std::string library_version() { return GPPL_VERSION; }

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs[path.string()] = sha256_file(path);
}

void RunManifest::add_output(const std::filesystem::path& out_dir, const std::string& relative) {
  outputs[relative] = sha256_file(out_dir / relative);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config_path"] = config_path;
  j["seeds"] = seeds;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["parameters"] = parameters;
  j["library_version"] = library_version();
  if (!timings.empty()) j["timings"] = timings;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_path = j.value("config_path", "");
  m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
  m.inputs = j.value("inputs", std::map<std::string, std::string>{});
  m.outputs = j.value("outputs", std::map<std::string, std::string>{});
  m.timings = j.value("timings", std::map<std::string, double>{});
  m.parameters = j.value("parameters", nlohmann::json::object());
  return m;
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
  write_file(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
}

std::vector<std::string> verify_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
  std::vector<std::string> bad;
  for (const auto& [rel, hash] : manifest.outputs) {
    const auto p = out_dir / rel;
    if (!std::filesystem::exists(p) || sha256_file(p) != hash) bad.push_back(rel);
  }
  return bad;
}

}  // namespace gppl

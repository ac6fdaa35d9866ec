#include "manifest.hpp"

#include <filesystem>
#include <openssl/evp.h>

#include "chainid/errors.hpp"
#include "chainid/io.hpp"

#ifndef CHAINID_VERSION
#define CHAINID_VERSION "0.0.0"
#endif

namespace chainid::cli {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

void Manifest::add_input(const std::string& role, const std::string& path) {
  inputs_[role] = {{"path", path}, {"sha256", sha256_file(path)}};
}

std::string Manifest::path_for(const std::string& output_path) { return output_path + ".manifest.json"; }

std::string Manifest::name_for(const std::string& output_path) {
  return std::filesystem::path(path_for(output_path)).filename().string();
}

void Manifest::write(const std::vector<std::pair<std::string, std::string>>& outputs) const {
  if (outputs.empty()) throw Error("manifest without outputs");
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& [path, text] : outputs) {
    atomic_write(path, text);
    outs[std::filesystem::path(path).filename().string()] = {{"path", path}, {"sha256", sha256_hex(text)}};
  }
  nlohmann::json doc = {{"command", command_}, {"config", config_}, {"inputs", inputs_},
                        {"outputs", outs},     {"seed", seed_},     {"summary", summary_},
                        {"version", CHAINID_VERSION}};
  if (with_timings_) doc["timings"] = timings_;
  atomic_write(path_for(outputs.front().first), dump_json(doc));
}

}  // namespace chainid::cli

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace chainid::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Provenance record written next to every output as `<out>.manifest.json`.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  nlohmann::json& config() { return config_; }
  nlohmann::json& summary() { return summary_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::string& role, const std::string& path);
  void add_timing(const std::string& name, double seconds) { timings_[name] = seconds; }
  void enable_timings(bool on) { with_timings_ = on; }

  /// Manifest file name referenced from inside `output_path`.
  static std::string path_for(const std::string& output_path);
  static std::string name_for(const std::string& output_path);

  /// Atomically writes each output and then the manifest naming their digests.
  void write(const std::vector<std::pair<std::string, std::string>>& outputs) const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json summary_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json timings_ = nlohmann::json::object();
  std::uint64_t seed_ = 0;
  bool with_timings_ = false;
};

}  // namespace chainid::cli

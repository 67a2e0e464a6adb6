#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace scglove::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Throws InputError naming the path when it does not exist.
void require_artifact(const std::filesystem::path& path);

/// If `path` sits in a stage directory with a manifest, checks that the
/// file still hashes to what that stage recorded. Files outside a stage
/// directory are not checked.
void verify_artifact(const std::filesystem::path& path);

/// Records what one stage read and wrote. Outputs are listed by file name
/// relative to the stage directory, so runs in different directories with
/// identical inputs produce identical output lists.
class StageManifest {
 public:
  StageManifest(std::string stage, std::filesystem::path dir);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void add_input(const std::filesystem::path& path);
  void add_output(const std::string& name);
  /// Written but not hashed (carries wall-clock data).
  void add_report(const std::string& name);
  void set_counters(nlohmann::json counters) { counters_ = std::move(counters); }
  void add_timing(const std::string& name, double seconds) { timings_[name] = seconds; }

  /// Writes manifest.json into the stage directory.
  void write() const;

  static constexpr const char* kFileName = "manifest.json";

 private:
  std::string stage_;
  std::filesystem::path dir_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json reports_ = nlohmann::json::array();
  nlohmann::json counters_ = nlohmann::json::object();
  nlohmann::json timings_ = nlohmann::json::object();
};

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& value, const std::filesystem::path& path);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace scglove::cli

#include "manifest.hpp"

#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "scglove/common.hpp"

namespace scglove::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 initialisation failed");
  }
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int k = 0; k < length; ++k) {
    hex.push_back(kHex[digest[k] >> 4]);
    hex.push_back(kHex[digest[k] & 0xf]);
  }
  return hex;
}

void require_artifact(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("missing artifact: " + path.string());
}

void verify_artifact(const std::filesystem::path& path) {
  require_artifact(path);
  const auto manifest_path = path.parent_path() / StageManifest::kFileName;
  if (!std::filesystem::exists(manifest_path)) return;
  const auto manifest = read_json(manifest_path);
  const auto name = path.filename().string();
  for (const auto& out : manifest.value("outputs", nlohmann::json::array())) {
    if (out.value("path", "") == name) {
      if (out.value("sha256", "") != sha256_file(path)) {
        throw InputError("stale artifact: " + path.string() +
                         " no longer matches the hash recorded in " + manifest_path.string());
      }
      return;
    }
  }
}

StageManifest::StageManifest(std::string stage, std::filesystem::path dir)
    : stage_(std::move(stage)), dir_(std::move(dir)) {}

void StageManifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back({{"path", path.lexically_normal().generic_string()}, {"sha256", sha256_file(path)}});
}

void StageManifest::add_output(const std::string& name) {
  outputs_.push_back({{"path", name}, {"sha256", sha256_file(dir_ / name)}});
}

void StageManifest::add_report(const std::string& name) { reports_.push_back(name); }

void StageManifest::write() const {
  const nlohmann::json doc = {{"stage", stage_},    {"config", config_},   {"inputs", inputs_},
                              {"outputs", outputs_}, {"reports", reports_}, {"counters", counters_},
                              {"timings", timings_}};
  write_json(doc, dir_ / kFileName);
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& value, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << value.dump(2) << '\n';
}

}  // namespace scglove::cli

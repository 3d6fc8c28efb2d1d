#include "nlid/io.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "nlid/rng.hpp"

namespace nlid {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buffer.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() +
                        "': " + ec.message());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

std::string RunManifest::to_json() const {
  nlohmann::json obj;
  obj["command"] = command;
  obj["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
  nlohmann::json inputs_json = nlohmann::json::array();
  for (const ManifestInput& input : inputs)
    inputs_json.push_back({{"path", input.path}, {"sha256", input.sha256}});
  obj["inputs"] = inputs_json;
  if (has_seed) obj["seed"] = seed;
  obj["toolkit_version"] = std::string(kToolkitVersion);
  obj["rng_version"] = std::string(kRngVersion);
  const auto now = std::chrono::system_clock::now();
  obj["timestamp_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch())
          .count();
  return obj.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
  atomic_write(out_dir / "manifest.json", manifest.to_json());
}

}  // namespace nlid

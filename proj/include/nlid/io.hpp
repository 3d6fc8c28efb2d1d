#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace nlid {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

// Thrown for unreadable/unwritable paths; the CLI maps it to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);

// Write-temp-then-rename so partially written outputs are never observed.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestInput {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::string config_json;  // fully resolved configuration, JSON text
  std::vector<ManifestInput> inputs;
  std::uint64_t seed = 0;
  bool has_seed = false;

  std::string to_json() const;  // adds toolkit/rng versions and a timestamp
};

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

}  // namespace nlid

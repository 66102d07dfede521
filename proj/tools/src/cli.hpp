#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dhlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitNumerical = 4;

/// Provenance record of one command. Written with status "running" before any
/// computation and rewritten with the final status and outputs afterwards.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string config_path;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::string version;
  std::string started;
  std::string finished;
  std::string status = "running";
  std::string message;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, checksum

  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

/// FNV-1a of the file bytes as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

std::string version_string();

/// Runs `dhlab <args...>` and returns the exit code. Normal output goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dhlab::cli

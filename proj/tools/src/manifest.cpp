#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "cli.hpp"
#include "dhlab/error.hpp"

namespace dhlab::cli {

using nlohmann::json;

std::string version_string() { return fmt::format("{} ({})", DHLAB_VERSION, DHLAB_GIT_REVISION); }

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read '{}'", path.string()));
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return fmt::format("{:016x}", h);
}

void RunManifest::save(const std::filesystem::path& path) const {
  json j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["config_path"] = config_path;
  j["seeds"] = json::object();
  for (const auto& [name, v] : seeds) j["seeds"][name] = v;
  j["version"] = version;
  j["started"] = started;
  j["finished"] = finished;
  j["status"] = status;
  j["message"] = message;
  j["outputs"] = json::array();
  for (const auto& [p, sum] : outputs) j["outputs"].push_back({{"path", p}, {"checksum", sum}});
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError(fmt::format("cannot write manifest '{}'", path.string()));
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read manifest '{}'", path.string()));
  try {
    const auto j = json::parse(in);
    RunManifest m;
    m.command = j.at("command");
    m.arguments = j.at("arguments").get<std::vector<std::string>>();
    m.config_path = j.at("config_path");
    for (const auto& [name, v] : j.at("seeds").items()) m.seeds.emplace_back(name, v.get<std::uint64_t>());
    m.version = j.at("version");
    m.started = j.at("started");
    m.finished = j.at("finished");
    m.status = j.at("status");
    m.message = j.at("message");
    for (const auto& o : j.at("outputs")) m.outputs.emplace_back(o.at("path"), o.at("checksum"));
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed manifest '{}': {}", path.string(), e.what()));
  }
}

}  // namespace dhlab::cli

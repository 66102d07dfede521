#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "dhlab/error.hpp"
#include "dhlab/experiment.hpp"

namespace dhlab {

using nlohmann::json;

namespace {

const std::set<std::string> kTopKeys{"sites", "topology", "family", "times", "observables", "pauli_set", "states",
                                     "shots", "instances", "seed", "noise", "hinv"};
const std::set<std::string> kHinvKeys{"max_modes", "svd_cutoff", "noise_rank", "amp_floor", "err_ceiling"};

// Reads j[key] into out when present; type errors are collected.
template <typename T>
void read(const json& j, const char* key, T& out, std::vector<std::string>& errors) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    errors.push_back(fmt::format("'{}' has the wrong type", key));
  }
}

}  // namespace

ProtocolConfig ProtocolConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  ProtocolConfig c;
  std::vector<std::string> errors;
  for (const auto& [key, _] : j.items()) {
    if (!kTopKeys.contains(key)) errors.push_back(fmt::format("unknown key '{}'", key));
  }
  if (!j.contains("sites")) errors.emplace_back("missing required key 'sites'");
  read(j, "sites", c.sites, errors);
  read(j, "topology", c.topology, errors);
  read(j, "pauli_set", c.pauli_set, errors);
  read(j, "shots", c.shots, errors);
  read(j, "instances", c.instances, errors);
  read(j, "seed", c.seed, errors);

  if (j.contains("family")) {
    const auto& f = j["family"];
    if (f == "W1" || f == "w1") {
      c.family = CircuitFamily::W1;
    } else if (f == "W2" || f == "w2") {
      c.family = CircuitFamily::W2;
    } else {
      errors.emplace_back("'family' must be \"W1\" or \"W2\"");
    }
  }

  if (j.contains("times")) {
    const auto& t = j["times"];
    if (!t.is_object()) {
      errors.emplace_back("'times' must be an object {start, step, count}");
    } else {
      for (const auto& [key, _] : t.items()) {
        if (key != "start" && key != "step" && key != "count") errors.push_back(fmt::format("unknown key 'times.{}'", key));
      }
      read(t, "start", c.grid.t0, errors);
      read(t, "step", c.grid.step, errors);
      read(t, "count", c.grid.count, errors);
    }
  }

  if (j.contains("observables")) {
    const auto& o = j["observables"];
    if (o.is_string() && o == "default") {
      c.observables.clear();
    } else {
      read(j, "observables", c.observables, errors);
    }
  }

  if (j.contains("states")) {
    const auto& s = j["states"];
    if (s.is_string()) {
      if (s == "aligned") {
        c.ensemble = StateEnsemble::Aligned;
      } else {
        errors.emplace_back("'states' string must be \"aligned\"");
      }
    } else if (s.is_object()) {
      if (s.size() != 1 || !s.contains("random")) {
        errors.emplace_back("'states' object must be {\"random\": count}");
      } else {
        c.ensemble = StateEnsemble::Random;
        read(s, "random", c.random_states, errors);
      }
    } else if (s.is_array()) {
      c.ensemble = StateEnsemble::Explicit;
      read(j, "states", c.states, errors);
    } else {
      errors.emplace_back("'states' must be \"aligned\", {\"random\": n} or a list");
    }
  }

  if (j.contains("noise")) {
    const auto& n = j["noise"];
    try {
      if (n.is_string()) {
        c.noise = NoiseModel::parse(n.get<std::string>());
      } else if (n.is_object()) {
        std::string text;
        for (const auto& [key, v] : n.items()) text += fmt::format("{}={} ", key, v.dump());
        c.noise = NoiseModel::parse(text);
      } else {
        errors.emplace_back("'noise' must be a string or an object");
      }
    } catch (const InvalidArgument& e) {
      errors.push_back(fmt::format("noise: {}", e.what()));
    }
  }

  if (j.contains("hinv")) {
    const auto& h = j["hinv"];
    if (!h.is_object()) {
      errors.emplace_back("'hinv' must be an object");
    } else {
      for (const auto& [key, _] : h.items()) {
        if (!kHinvKeys.contains(key)) errors.push_back(fmt::format("unknown key 'hinv.{}'", key));
      }
      read(h, "max_modes", c.hinv.max_modes, errors);
      read(h, "svd_cutoff", c.hinv.svd_cutoff, errors);
      read(h, "noise_rank", c.hinv.noise_rank, errors);
      read(h, "amp_floor", c.filter.amp_floor_fraction, errors);
      read(h, "err_ceiling", c.filter.err_ceiling, errors);
    }
  }

  for (auto& p : c.problems()) errors.push_back(std::move(p));
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return c;
}

ProtocolConfig ProtocolConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ProtocolConfig::to_json() const {
  json j;
  j["sites"] = sites;
  if (!topology.empty()) {
    j["topology"] = topology;
  } else if (sites >= 2) {
    j["topology"] = Topology::chain(sites).str();
  }
  j["family"] = family == CircuitFamily::W1 ? "W1" : "W2";
  j["times"] = {{"start", grid.t0}, {"step", grid.step}, {"count", grid.count}};
  if (observables.empty()) {
    j["observables"] = "default";
  } else {
    j["observables"] = observables;
  }
  j["pauli_set"] = pauli_set;
  switch (ensemble) {
    case StateEnsemble::Aligned: j["states"] = "aligned"; break;
    case StateEnsemble::Random: j["states"] = {{"random", random_states}}; break;
    case StateEnsemble::Explicit: j["states"] = states; break;
  }
  j["shots"] = shots;
  j["instances"] = instances;
  j["seed"] = seed;
  j["noise"] = noise.str();
  j["hinv"] = {{"max_modes", hinv.max_modes},
               {"svd_cutoff", hinv.svd_cutoff},
               {"noise_rank", hinv.noise_rank},
               {"amp_floor", filter.amp_floor_fraction},
               {"err_ceiling", filter.err_ceiling}};
  return j.dump(2);
}

std::string ProtocolConfig::fingerprint() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char ch : to_json()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

std::optional<Topology> ProtocolConfig::resolved_topology() const {
  if (!topology.empty()) return Topology::parse(topology);
  if (sites >= 2) return Topology::chain(sites);
  return std::nullopt;
}

std::vector<std::string> ProtocolConfig::problems() const {
  std::vector<std::string> out;
  const bool sites_ok = sites >= 1 && sites <= kMaxSites;
  if (!sites_ok) out.push_back(fmt::format("sites must be in [1, {}], got {}", kMaxSites, sites));
  if (sites_ok) {
    try {
      const auto topo = resolved_topology();
      if (topo && topo->sites() != sites) {
        out.push_back(fmt::format("topology '{}' has {} sites, expected {}", topology, topo->sites(), sites));
      } else if (family == CircuitFamily::W2 && (!topo || topo->edges().empty())) {
        out.emplace_back("W2 needs a topology with at least one edge");
      }
    } catch (const InvalidArgument& e) {
      out.push_back(fmt::format("topology: {}", e.what()));
    }
  }
  if (grid.t0 != 0) out.push_back(fmt::format("times.start must be 0, got {}", grid.t0));
  if (grid.step < 1) out.push_back(fmt::format("times.step must be >= 1, got {}", grid.step));
  if (grid.count < 1) out.push_back(fmt::format("times.count must be >= 1, got {}", grid.count));
  if (pauli_set != "IXZ" && pauli_set != "IXYZ") out.push_back(fmt::format("pauli_set must be IXZ or IXYZ, got '{}'", pauli_set));
  for (const auto& o : observables) {
    try {
      const auto s = PauliString::parse(o);
      if (sites_ok && s.size() != sites) out.push_back(fmt::format("observable '{}' has length {}, expected {}", o, s.size(), sites));
      if (s.order() == 0) out.push_back(fmt::format("observable '{}' is the identity", o));
    } catch (const InvalidArgument&) {
      out.push_back(fmt::format("observable '{}' is not a Pauli string", o));
    }
  }
  if (ensemble == StateEnsemble::Random && random_states < 1) {
    out.push_back(fmt::format("states.random must be >= 1, got {}", random_states));
  }
  if (ensemble == StateEnsemble::Explicit) {
    if (states.empty()) out.emplace_back("states list is empty");
    for (const auto& s : states) {
      try {
        const auto st = ProductState::parse(s);
        if (sites_ok && st.size() != sites) out.push_back(fmt::format("state '{}' has {} sites, expected {}", s, st.size(), sites));
      } catch (const InvalidArgument&) {
        out.push_back(fmt::format("state '{}' is not a product state spec", s));
      }
    }
  }
  if (shots < 0) out.push_back(fmt::format("shots must be >= 0, got {}", shots));
  if (instances < 1) out.push_back(fmt::format("instances must be >= 1, got {}", instances));
  if (hinv.max_modes < 0 || (grid.count >= 1 && hinv.max_modes > grid.count / 4)) {
    out.push_back(fmt::format("hinv.max_modes must be in [0, count/4 = {}], got {}", grid.count / 4, hinv.max_modes));
  }
  if (!(hinv.svd_cutoff > 0 && hinv.svd_cutoff < 1)) out.emplace_back("hinv.svd_cutoff must be in (0, 1)");
  if (!(filter.amp_floor_fraction >= 0 && filter.amp_floor_fraction < 1)) out.emplace_back("hinv.amp_floor must be in [0, 1)");
  if (!(filter.err_ceiling > 0)) out.emplace_back("hinv.err_ceiling must be positive");
  return out;
}

void ProtocolConfig::validate() const {
  const auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& e : p) msg += "\n  - " + e;
  throw ConfigError(msg);
}

}  // namespace dhlab

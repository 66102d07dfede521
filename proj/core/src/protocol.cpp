#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "dhlab/circuit.hpp"
#include "dhlab/error.hpp"
#include "dhlab/experiment.hpp"
#include "parallel.hpp"

namespace dhlab {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (const auto l : labels) h = mix(h ^ mix(l));
  return h;
}

// ---------------------------------------------------------------- store

void TraceSet::write(std::ostream& out) const {
  out << "# dhlab trace store\n";
  out << "# sites=" << sites << '\n';
  out << "# topology=" << topology << '\n';
  out << "# family=" << family << '\n';
  out << "# fingerprint=" << fingerprint << '\n';
  out << fmt::format("# time_unit={:.17g}\n", time_unit);
  out << "observable,state,t,value,shots,seed\n";
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{:.17g},{},{}\n", r.observable, r.state, r.t, r.value, r.shots, r.seed);
  }
}

TraceSet TraceSet::read(std::istream& in) {
  TraceSet set;
  std::string line;
  int lineno = 0;
  bool columns = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto key = line.substr(2, eq - 2);
      const auto val = line.substr(eq + 1);
      try {
        if (key == "sites") set.sites = std::stoi(val);
        if (key == "topology") set.topology = val;
        if (key == "family") set.family = val;
        if (key == "fingerprint") set.fingerprint = val;
        if (key == "time_unit") set.time_unit = std::stod(val);
      } catch (const std::logic_error&) {
        throw InvalidArgument(fmt::format("trace store line {}: bad header value", lineno));
      }
      continue;
    }
    if (!columns && line.rfind("observable,", 0) == 0) {
      columns = true;
      continue;
    }
    std::istringstream ls(line);
    std::string field[6];
    for (int i = 0; i < 6; ++i) {
      if (!std::getline(ls, field[i], ',')) throw InvalidArgument(fmt::format("trace store line {}: expected 6 fields", lineno));
    }
    TraceRecord r;
    r.observable = field[0];
    r.state = field[1];
    try {
      r.t = std::stoi(field[2]);
      r.value = std::stod(field[3]);
      r.shots = std::stoi(field[4]);
      r.seed = std::stoull(field[5]);
    } catch (const std::logic_error&) {
      throw InvalidArgument(fmt::format("trace store line {}: malformed number", lineno));
    }
    set.records.push_back(std::move(r));
  }
  if (set.sites == 0 && !set.records.empty()) set.sites = static_cast<int>(set.records.front().observable.size());
  return set;
}

TraceSet TraceSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot read trace store '{}'", path.string()));
  return read(in);
}

void TraceSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument(fmt::format("cannot write trace store '{}'", path.string()));
  write(out);
}

AssembledTraces assemble_traces(const TraceSet& set) {
  AssembledTraces out;
  if (set.records.empty()) return out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  struct Acc {
    const TraceRecord* first = nullptr;
    std::map<int, double> values;
    bool duplicate = false;
  };
  std::vector<Acc> acc;
  std::vector<int> times;
  for (const auto& r : set.records) {
    const auto [it, fresh] = index.try_emplace({r.observable, r.state}, acc.size());
    if (fresh) acc.push_back({&r, {}, false});
    auto& a = acc[it->second];
    if (!a.values.emplace(r.t, r.value).second) a.duplicate = true;
    times.push_back(r.t);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const int step = times.size() > 1 ? times[1] - times[0] : 1;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] - times[i - 1] != step) {
      throw InvalidArgument(fmt::format("time values are not uniform ({} then {})", times[i - 1], times[i]));
    }
  }
  for (const auto& a : acc) {
    const auto label = fmt::format("{}@{}", a.first->observable, a.first->state);
    if (a.duplicate) {
      out.incomplete.push_back(label + ": duplicate time values");
      continue;
    }
    if (a.values.size() != times.size()) {
      out.incomplete.push_back(fmt::format("{}: {} of {} time values", label, a.values.size(), times.size()));
      continue;
    }
    TimeTrace tr;
    tr.start = times.front() * set.time_unit;
    tr.dt = step * set.time_unit;
    tr.meta.observable = a.first->observable;
    tr.meta.state = a.first->state;
    tr.meta.shots = a.first->shots;
    tr.meta.seed = a.first->seed;
    for (const auto& [t, v] : a.values) tr.values.emplace_back(v, 0.0);
    out.traces.push_back(std::move(tr));
  }
  return out;
}

// ---------------------------------------------------------------- plan

std::size_t ProtocolPlan::trace_count() const {
  std::size_t n = 0;
  for (const auto& o : observables) n += o.size();
  return n;
}

void ProtocolPlan::describe(std::ostream& out) const {
  out << fmt::format("sites: {}\ntopology: {}\n", sites, topology ? topology->str() : "none");
  out << fmt::format("times: {} values", times.size());
  if (!times.empty()) out << fmt::format(" from {} to {}", times.front(), times.back());
  out << '\n';
  out << fmt::format("states: {}\ntraces: {}\njobs: {}\n", states.size(), trace_count(), job_count());
}

namespace {

bool in_set(Pauli p, const std::string& set) { return set.find(to_char(p)) != std::string::npos; }

// Per-site measurement basis; identity sites are read in Z.
PauliString setting_of(const PauliString& s) {
  PauliString out = s;
  for (int i = 0; i < s.size(); ++i) {
    if (s.at(i) == Pauli::I) out.set(i, Pauli::Z);
  }
  return out;
}

Basis basis_of(Pauli p) {
  switch (p) {
    case Pauli::X: return Basis::X;
    case Pauli::Y: return Basis::Y;
    default: return Basis::Z;
  }
}

}  // namespace

ProductState aligned_state(const PauliString& observable, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::bernoulli_distribution coin(0.5);
  ProductState st;
  for (int i = 0; i < observable.size(); ++i) {
    st.sites.push_back({basis_of(observable.at(i)), coin(rng) ? 1 : 0});
  }
  return st;
}

ProtocolPlan plan_protocol(const ProtocolConfig& cfg) {
  cfg.validate();
  ProtocolPlan plan;
  plan.sites = cfg.sites;
  plan.topology = cfg.resolved_topology();
  plan.times = cfg.grid.values();

  std::vector<PauliString> observables;
  if (cfg.observables.empty()) {
    for (const auto& s : enumerate_strings(cfg.sites)) {
      if (s.is_identity()) continue;
      bool ok = true;
      for (int i = 0; i < s.size(); ++i) ok = ok && in_set(s.at(i), cfg.pauli_set);
      if (ok) observables.push_back(s);
    }
  } else {
    for (const auto& o : cfg.observables) observables.push_back(PauliString::parse(o));
  }

  switch (cfg.ensemble) {
    case StateEnsemble::Aligned: {
      std::map<PauliString, std::vector<PauliString>> by_setting;
      for (const auto& o : observables) by_setting[setting_of(o)].push_back(o);
      for (auto& [setting, obs] : by_setting) {
        plan.states.push_back(aligned_state(setting, derive_seed(cfg.seed, {1, setting.index()})));
        plan.observables.push_back(std::move(obs));
      }
      break;
    }
    case StateEnsemble::Random:
      for (int i = 0; i < cfg.random_states; ++i) {
        std::mt19937_64 rng(derive_seed(cfg.seed, {2, static_cast<std::uint64_t>(i)}));
        std::uniform_int_distribution<int> basis(0, 2);
        std::bernoulli_distribution coin(0.5);
        ProductState st;
        for (int q = 0; q < cfg.sites; ++q) st.sites.push_back({static_cast<Basis>(basis(rng)), coin(rng) ? 1 : 0});
        plan.states.push_back(std::move(st));
        plan.observables.push_back(observables);
      }
      break;
    case StateEnsemble::Explicit:
      for (const auto& s : cfg.states) {
        plan.states.push_back(ProductState::parse(s));
        plan.observables.push_back(observables);
      }
      break;
  }
  return plan;
}

// ---------------------------------------------------------------- run

namespace {

struct JobSpec {
  std::size_t state = 0;
  int t = 0;
};

std::vector<TraceRecord> run_job(const ProtocolConfig& cfg, const ProtocolPlan& plan, const JobSpec& job,
                                 bool validate) {
  const auto& state = plan.states[job.state];
  const auto& observables = plan.observables[job.state];
  const std::uint64_t shot_seed = derive_seed(cfg.seed, {3, job.state, static_cast<std::uint64_t>(job.t)});

  // Observables sharing a measurement setting are read from the same shots.
  std::map<PauliString, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < observables.size(); ++i) groups[setting_of(observables[i])].push_back(i);

  std::vector<double> values(observables.size(), 0.0);
  for (int inst = 0; inst < cfg.instances; ++inst) {
    const std::uint64_t circuit_seed =
        derive_seed(cfg.noise.seed, {static_cast<std::uint64_t>(job.t), static_cast<std::uint64_t>(inst)});
    const Circuit c = cfg.family == CircuitFamily::W1
                          ? build_waiting_circuit_w1(plan.sites, job.t, circuit_seed)
                          : build_waiting_circuit_w2(plan.sites, job.t, *plan.topology, circuit_seed);
    auto rho = prepare_product_state(state);
    run_circuit(rho, c, cfg.noise, validate);
    std::uint64_t g = 0;
    for (const auto& [setting, members] : groups) {
      std::vector<PauliString> strings;
      for (const auto i : members) strings.push_back(observables[i]);
      const auto v = sample_shots(rho, strings, cfg.shots, derive_seed(shot_seed, {static_cast<std::uint64_t>(inst), g++}));
      for (std::size_t m = 0; m < members.size(); ++m) values[members[m]] += v[m];
    }
  }

  std::vector<TraceRecord> out;
  out.reserve(observables.size());
  const auto state_text = state.str();
  for (std::size_t i = 0; i < observables.size(); ++i) {
    out.push_back({observables[i].str(), state_text, job.t, values[i] / cfg.instances, cfg.shots * cfg.instances, shot_seed});
  }
  return out;
}

}  // namespace

TraceSet run_protocol(const ProtocolConfig& cfg, const RunOptions& options) {
  const auto plan = plan_protocol(cfg);
  TraceSet set;
  set.sites = plan.sites;
  set.topology = plan.topology ? plan.topology->str() : std::string();
  set.family = cfg.family == CircuitFamily::W1 ? "W1" : "W2";
  set.fingerprint = cfg.fingerprint();

  std::vector<JobSpec> jobs;
  for (std::size_t s = 0; s < plan.states.size(); ++s) {
    for (const int t : plan.times) jobs.push_back({s, t});
  }

  // Resume: keep the longest prefix of complete jobs already on disk.
  std::size_t first_job = 0;
  std::ofstream store;
  if (!options.store.empty()) {
    if (std::filesystem::exists(options.store)) {
      std::ifstream in(options.store);
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      text.erase(text.find_last_of('\n') == std::string::npos ? 0 : text.find_last_of('\n') + 1);
      std::istringstream is(text);
      auto existing = TraceSet::read(is);
      if (existing.fingerprint != set.fingerprint) {
        throw ConfigError(fmt::format("trace store '{}' was written by a different config (fingerprint {} vs {})",
                                      options.store.string(), existing.fingerprint, set.fingerprint));
      }
      std::size_t used = 0;
      while (first_job < jobs.size()) {
        const auto need = plan.records_per_job(jobs[first_job].state);
        if (used + need > existing.records.size()) break;
        used += need;
        ++first_job;
      }
      existing.records.resize(used);
      set.records = std::move(existing.records);
    }
    set.save(options.store);
    store.open(options.store, std::ios::app);
    if (!store) throw InvalidArgument(fmt::format("cannot append to trace store '{}'", options.store.string()));
  }

  const std::size_t remaining = jobs.size() - first_job;
  std::vector<std::vector<TraceRecord>> results(remaining);
  std::vector<std::exception_ptr> errors(remaining);
  std::vector<char> ready(remaining, 0);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<bool> stop{false};

  // ready: 1 = done, 2 = skipped after a failure elsewhere
  auto worker = [&](std::size_t i) {
    std::vector<TraceRecord> r;
    std::exception_ptr err;
    const bool skip = stop;
    if (!skip) {
      try {
        r = run_job(cfg, plan, jobs[first_job + i], options.validate_states);
      } catch (...) {
        err = std::current_exception();
        stop = true;
      }
    }
    {
      std::lock_guard lock(mu);
      results[i] = std::move(r);
      errors[i] = err;
      ready[i] = skip ? 2 : 1;
    }
    cv.notify_all();
  };

  const int width = resolve_jobs(options.jobs);
  std::thread pool([&] { parallel_for(remaining, width, worker); });
  for (std::size_t i = 0; i < remaining; ++i) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return ready[i] != 0; });
    if (errors[i] || ready[i] == 2) break;
    auto batch = std::move(results[i]);
    lock.unlock();
    for (const auto& r : batch) {
      if (store) store << fmt::format("{},{},{},{:.17g},{},{}\n", r.observable, r.state, r.t, r.value, r.shots, r.seed);
    }
    if (store) store.flush();
    set.records.insert(set.records.end(), batch.begin(), batch.end());
    if (options.progress) options.progress(first_job + i + 1, jobs.size());
  }
  stop = true;
  pool.join();
  const auto failed = std::find_if(errors.begin(), errors.end(), [](const auto& e) { return e != nullptr; });
  if (failed != errors.end()) {
    const std::size_t failed_job = first_job + static_cast<std::size_t>(failed - errors.begin());
    const auto failure = *failed;
    const auto& job = jobs[failed_job];
    const auto where = fmt::format("job {} (state {}, t={})", failed_job, plan.states[job.state].str(), job.t);
    try {
      std::rethrow_exception(failure);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw NumericalFault(fmt::format("{} failed: {}", where, e.what()));
    }
  }
  return set;
}

TraceSet ed_traces(const Spectrum& spectrum, const std::vector<std::pair<PauliString, ProductState>>& pairs,
                   const TimeGrid& grid, double unit, int shots, std::uint64_t seed) {
  if (shots < 0) throw InvalidArgument("shots must be nonnegative");
  TraceSet set;
  set.sites = spectrum.sites();
  set.family = "ED";
  set.time_unit = unit;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [obs, state] = pairs[p];
    const auto trace = propagate_observable(spectrum, obs, state, grid, unit);
    const std::uint64_t s = shots > 0 ? derive_seed(seed, {4, p}) : 0;
    std::mt19937_64 rng(s);
    const auto state_text = state.str();
    const auto obs_text = obs.str();
    for (int n = 0; n < grid.count; ++n) {
      const int t = grid.at(n);
      double v = trace.values[static_cast<std::size_t>(n)].real();
      if (shots > 0) {
        std::binomial_distribution<int> draw(shots, std::clamp((1 + v) / 2, 0.0, 1.0));
        v = 2.0 * draw(rng) / shots - 1.0;
      }
      set.records.push_back({obs_text, state_text, t, v, shots, s});
    }
  }
  return set;
}

}  // namespace dhlab

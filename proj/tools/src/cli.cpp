#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "dhlab/error.hpp"
#include "dhlab/experiment.hpp"
#include "dhlab/io.hpp"
#include "dhlab/liouvillian.hpp"
#include "dhlab/perturbation.hpp"
#include "dhlab/spectral.hpp"

namespace dhlab::cli {

namespace fs = std::filesystem;

namespace {

// Bad flag values that CLI11 cannot check on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string now_utc() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

std::string g(double v) { return fmt::format("{:.10g}", v); }

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", p.string()));
  return out;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

// Runs `body` between the initial and final manifest writes.
template <typename Body>
void with_manifest(RunManifest& m, const fs::path& path, Body&& body) {
  m.version = version_string();
  m.started = now_utc();
  m.save(path);
  try {
    body();
  } catch (const std::exception& e) {
    m.status = "failed";
    m.message = e.what();
    m.finished = now_utc();
    m.save(path);
    throw;
  }
  m.status = "ok";
  m.finished = now_utc();
  m.save(path);
}

void add_output(RunManifest& m, const fs::path& p) { m.outputs.emplace_back(p.string(), file_checksum(p)); }

// ---------------------------------------------------------------- liouville

struct LiouvilleArgs {
  int sites = 0;
  int bodies = 0;
  std::string topology;
  std::uint64_t seed = 1;
  std::string distribution = "uniform";
  bool k_identity = false;
  fs::path out = "liouville_out";
  bool write_matrices = false;
  fs::path traces;
  int trace_count = 41;
  double trace_span = 3.0;
  int shots = 0;
};

struct Model {
  LindbladSet set;
  std::optional<Topology> topo;
  std::string label;
};

Model build_model(const LiouvilleArgs& a) {
  if (a.sites < 1 || a.sites > kMaxDenseSites) {
    throw UsageError(fmt::format("--l must be in [1, {}] for the dense spectrum, got {}", kMaxDenseSites, a.sites));
  }
  if (a.bodies == 1 && !a.topology.empty()) throw UsageError("--topo applies to --bodies 2 only");
  if (a.trace_count < 4) throw UsageError("--trace-count must be at least 4");
  if (!(a.trace_span > 0)) throw UsageError("--trace-span must be positive");
  if (a.shots < 0) throw UsageError("--shots must be nonnegative");
  Model m{build_one_body_set(a.sites), std::nullopt, {}};
  if (a.bodies == 2) {
    if (a.sites < 2) throw UsageError("--bodies 2 needs --l >= 2");
    try {
      m.topo = a.topology.empty() ? Topology::chain(a.sites) : Topology::parse(a.topology);
    } catch (const InvalidArgument& e) {
      throw UsageError(fmt::format("--topo: {}", e.what()));
    }
    if (m.topo->sites() != a.sites) {
      throw UsageError(fmt::format("--topo '{}' has {} sites, --l is {}", a.topology, m.topo->sites(), a.sites));
    }
    m.set = build_two_body_set(*m.topo);
  } else if (a.sites >= 2) {
    m.topo = Topology::chain(a.sites);
  }
  if (!a.k_identity) {
    try {
      (void)SpectrumSpec::parse(a.distribution);
    } catch (const InvalidArgument& e) {
      throw UsageError(fmt::format("--distribution: {}", e.what()));
    }
  }
  m.label = fmt::format("sites={} bodies={} topology={} channels={} seed={} K={}", a.sites, a.bodies,
                        a.bodies == 2 ? m.topo->str() : "none", m.set.size(), a.seed,
                        a.k_identity ? "identity" : a.distribution);
  return m;
}

void cmd_liouville(const LiouvilleArgs& a, bool dry_run, int /*jobs*/, const std::vector<std::string>& argv,
                   std::ostream& out) {
  const auto model = build_model(a);
  const auto dim = std::size_t{1} << (2 * a.sites);
  out << "model: " << model.label << '\n';
  if (dry_run) {
    out << fmt::format("plan: {}x{} dense generator, full eigendecomposition\n", dim, dim);
    out << fmt::format("outputs: {}/{{spectrum.txt, kossakowski.txt, clusters.txt, hierarchy.txt{}}}\n", a.out.string(),
                       a.write_matrices ? ", liouvillian.txt" : "");
    if (!a.traces.empty()) {
      out << fmt::format("traces: {} ({} samples over {} / largest order-mean rate, shots={})\n", a.traces.string(), a.trace_count,
                         a.trace_span, a.shots);
    }
    return;
  }

  make_dir(a.out);
  RunManifest man;
  man.command = "liouville";
  man.arguments = argv;
  man.seeds = {{"kossakowski", a.seed}};
  with_manifest(man, a.out / "manifest.json", [&] {
    const auto k = a.k_identity ? KossakowskiMatrix::scaled_identity(model.set.size(), a.sites)
                                : sample_kossakowski(model.set.size(), a.sites, a.seed, SpectrumSpec::parse(a.distribution));
    const std::string topo_text = a.bodies == 2 ? model.topo->str() : "";
    const std::string dist_text = a.k_identity ? "identity" : SpectrumSpec::parse(a.distribution).str();
    {
      auto f = open_out(a.out / "kossakowski.txt");
      write_matrix(f, {"kossakowski", a.sites, model.set.size(), a.seed, topo_text, dist_text, 0, 0}, k.entries());
    }
    add_output(man, a.out / "kossakowski.txt");

    const auto lm = build_adjoint_superoperator(model.set, k);
    if (a.write_matrices) {
      auto f = open_out(a.out / "liouvillian.txt");
      write_matrix(f, {"liouvillian", a.sites, model.set.size(), a.seed, topo_text, dist_text, 0, 0}, lm.entries(),
                   1e-14);
      f.close();
      add_output(man, a.out / "liouvillian.txt");
    }
    const auto spec = eigendecompose(lm);
    {
      auto f = open_out(a.out / "spectrum.txt");
      f << "# model: " << model.label << '\n';
      write_spectrum(f, spec);
    }
    add_output(man, a.out / "spectrum.txt");

    const auto w = mean_channel_weights(model.set, k);
    const auto params = hierarchy_from_weights(model.set, w.one_body, w.two_body);
    if (model.topo) {
      auto f = open_out(a.out / "clusters.txt");
      f << fmt::format("# zeroth-order subcluster centers, d1={} d2={}\n", g(w.one_body), g(a.bodies == 2 ? w.two_body : 0.0));
      write_cluster_table(f, cluster_table(*model.topo, w.one_body, a.bodies == 2 ? w.two_body : 0.0));
      f.close();
      add_output(man, a.out / "clusters.txt");
    }

    const auto dom = ed_cluster_means(spec, OrderGrouping::Dominant);
    const auto wt = ed_cluster_means(spec, OrderGrouping::Weighted);
    std::optional<double> tb;
    if (params.alpha > 0) tb = turnback_k(params);
    {
      auto f = open_out(a.out / "hierarchy.txt");
      f << fmt::format("# alpha={} beta={} d1={} d2={} turnback_k={}\n", g(params.alpha), g(params.beta), g(w.one_body),
                       g(w.two_body), tb ? g(*tb) : "none");
      f << "k,predicted_rate,ed_mean_dominant,ed_mean_weighted\n";
      for (int kk = 1; kk <= a.sites; ++kk) {
        const auto d = dom.find(kk);
        f << fmt::format("{},{},{},{}\n", kk, g(predicted_rate(kk, params)), d == dom.end() ? "" : g(d->second),
                         wt.contains(kk) ? g(wt.at(kk)) : "");
      }
    }
    add_output(man, a.out / "hierarchy.txt");

    out << fmt::format("spectrum: {} eigenvalues, max residual {:.2e}\n", spec.size(), spec.max_residual());
    out << fmt::format("hierarchy: alpha={} beta={} turnback_k={}\n", g(params.alpha), g(params.beta), tb ? g(*tb) : "none");
    out << "k  predicted  ed_dominant  ed_weighted\n";
    for (int kk = 1; kk <= a.sites; ++kk) {
      out << fmt::format("{}  {:>9.4f}  {:>11.4f}  {:>11.4f}\n", kk, predicted_rate(kk, params),
                         dom.contains(kk) ? dom.at(kk) : 0.0, wt.contains(kk) ? wt.at(kk) : 0.0);
    }

    if (!a.traces.empty()) {
      ProtocolConfig pc;
      pc.sites = a.sites;
      pc.seed = a.seed;
      pc.family = CircuitFamily::W1;
      const auto plan = plan_protocol(pc);
      std::vector<std::pair<PauliString, ProductState>> pairs;
      for (std::size_t s = 0; s < plan.states.size(); ++s) {
        for (const auto& o : plan.observables[s]) pairs.emplace_back(o, plan.states[s]);
      }
      double top = 0;
      for (const auto& [kk, r] : wt) top = std::max(top, r);
      const double unit = a.trace_span / std::max(top, 1e-300) / (a.trace_count - 1);
      auto set = ed_traces(spec, pairs, TimeGrid{0, 1, a.trace_count}, unit, a.shots, derive_seed(a.seed, {5}));
      set.topology = topo_text;
      if (a.traces.has_parent_path()) make_dir(a.traces.parent_path());
      set.save(a.traces);
      add_output(man, a.traces);
      out << fmt::format("traces: {} ({} traces, time unit {})\n", a.traces.string(), pairs.size(), g(unit));
    }
  });
  out << "outputs written to " << a.out.string() << '\n';
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  fs::path config;
  fs::path store;
  bool fresh = false;
  bool validate_states = false;
  bool progress = false;
};

void cmd_simulate(const SimulateArgs& a, bool dry_run, int jobs, const std::vector<std::string>& argv,
                  std::ostream& out, std::ostream& err) {
  const auto cfg = ProtocolConfig::load(a.config);
  const auto plan = plan_protocol(cfg);
  const fs::path store = a.store.empty() ? fs::path(a.config.stem().string() + ".traces.csv") : a.store;
  std::set<std::string> distinct;
  for (const auto& obs : plan.observables) {
    for (const auto& o : obs) distinct.insert(o.str());
  }
  out << "config: " << a.config.string() << " (fingerprint " << cfg.fingerprint() << ")\n";
  out << "family: " << (cfg.family == CircuitFamily::W1 ? "W1" : "W2") << "\nnoise: " << cfg.noise.str() << '\n';
  out << "observables: " << distinct.size() << '\n';
  plan.describe(out);
  out << "store: " << store.string() << '\n';
  if (dry_run) return;

  if (a.fresh) fs::remove(store);
  if (store.has_parent_path()) make_dir(store.parent_path());
  RunManifest man;
  man.command = "simulate";
  man.arguments = argv;
  man.config_path = a.config.string();
  man.seeds = {{"seed", cfg.seed}, {"noise", cfg.noise.seed}};
  with_manifest(man, fs::path(store.string() + ".manifest.json"), [&] {
    RunOptions opt;
    opt.jobs = jobs;
    opt.store = store;
    opt.validate_states = a.validate_states;
    if (a.progress) {
      opt.progress = [&err](std::size_t done, std::size_t total) {
        err << fmt::format("\r{}/{} jobs", done, total) << (done == total ? "\n" : "") << std::flush;
      };
    }
    const auto set = run_protocol(cfg, opt);
    add_output(man, store);
    out << fmt::format("wrote {} records, checksum {}\n", set.records.size(), man.outputs.back().second);
  });
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  fs::path store;
  fs::path out;
  std::string topology;
  int max_modes = 0;
  double svd_cutoff = HinvParams{}.svd_cutoff;
  bool no_noise_rank = false;
  double amp_floor = FilterParams{}.amp_floor_fraction;
  double err_ceiling = FilterParams{}.err_ceiling;
};

void cmd_analyze(const AnalyzeArgs& a, bool dry_run, int jobs, const std::vector<std::string>& argv, std::ostream& out) {
  TraceSet set;
  try {
    set = TraceSet::load(a.store);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (set.records.empty()) throw ConfigError(fmt::format("trace store '{}' is empty", a.store.string()));
  AnalysisOptions opt;
  opt.jobs = jobs;
  opt.hinv.max_modes = a.max_modes;
  opt.hinv.svd_cutoff = a.svd_cutoff;
  opt.hinv.noise_rank = !a.no_noise_rank;
  opt.filter.amp_floor_fraction = a.amp_floor;
  opt.filter.err_ceiling = a.err_ceiling;
  if (a.max_modes < 0) throw UsageError("--max-modes must be nonnegative");
  if (!(a.svd_cutoff > 0 && a.svd_cutoff < 1)) throw UsageError("--svd-cutoff must be in (0, 1)");
  if (!(a.amp_floor >= 0 && a.amp_floor < 1)) throw UsageError("--amp-floor must be in [0, 1)");
  if (!(a.err_ceiling > 0)) throw UsageError("--err-ceiling must be positive");
  if (!a.topology.empty()) {
    try {
      opt.topology = Topology::parse(a.topology);
    } catch (const InvalidArgument& e) {
      throw UsageError(fmt::format("--topo: {}", e.what()));
    }
  }
  AssembledTraces assembled;
  try {
    assembled = assemble_traces(set);
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("trace store '{}': {}", a.store.string(), e.what()));
  }
  const fs::path dir = a.out.empty() ? fs::path(a.store.stem().string() + "_analysis") : a.out;
  out << fmt::format("store: {} ({} records, {} traces, {} incomplete)\n", a.store.string(), set.records.size(),
                     assembled.traces.size(), assembled.incomplete.size());
  out << fmt::format("sites: {}\ntopology: {}\nfamily: {}\n", set.sites, set.topology.empty() ? "none" : set.topology,
                     set.family);
  out << fmt::format("hinv: max_modes={} svd_cutoff={} noise_rank={} amp_floor={} err_ceiling={}\n", a.max_modes,
                     g(a.svd_cutoff), !a.no_noise_rank, g(a.amp_floor), g(a.err_ceiling));
  out << "output: " << dir.string() << '\n';
  if (dry_run) return;

  make_dir(dir);
  RunManifest man;
  man.command = "analyze";
  man.arguments = argv;
  man.config_path = a.store.string();
  with_manifest(man, dir / "manifest.json", [&] {
    AnalysisResult res;
    try {
      res = analyze(set, opt);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    {
      auto f = open_out(dir / "results.txt");
      res.write(f);
    }
    add_output(man, dir / "results.txt");
    res.export_csv(dir, assembled.traces);
    for (const char* name : {"clusters.csv", "density.csv", "modes.csv", "fit.csv", "subclusters.csv", "reconstruction.csv"}) {
      if (fs::exists(dir / name)) add_output(man, dir / name);
    }
    int flagged = 0;
    for (const auto& t : res.traces) flagged += t.flagged ? 1 : 0;
    out << fmt::format("traces analyzed: {} ({} flagged)\n", res.traces.size(), flagged + static_cast<int>(res.incomplete.size()));
    out << "k  mean_rate  traces\n";
    for (const auto& [k, c] : res.clusters.clusters) out << fmt::format("{}  {:>9.5g}  {}\n", k, c.mean_rate, c.traces);
    out << fmt::format("argmax_k={}  turnback_k={}\n", res.clusters.argmax(), res.turnback ? g(*res.turnback) : "none");
    if (res.fit) {
      out << fmt::format("fit: alpha={} beta={} r_squared={} max_residual={}\n", g(res.fit->params.alpha),
                         g(res.fit->params.beta), g(res.fit->r_squared), g(res.fit->max_abs_residual));
    }
    if (res.subclusters) {
      out << fmt::format("subclusters: chi2={} (dof {}), pruned chi2={} (dof {}), sign agreement={}\n",
                         g(res.subclusters->chi2), res.subclusters->dof, g(res.subclusters->chi2_pruned),
                         res.subclusters->dof_pruned, g(res.subclusters->sign_agreement));
    }
  });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dissipative hierarchy lab: Liouvillian spectra, noisy-circuit simulation and decay-rate analysis", "dhlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  bool dry_run = false;
  int jobs = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_flag("--dry-run", dry_run, "Validate inputs and print the plan without computing");
    sub->add_option("--jobs", jobs, "Parallel workers (0 = available parallelism)")->check(CLI::NonNegativeNumber);
  };

  LiouvilleArgs la;
  auto* lv = app.add_subcommand("liouville", "Random Liouvillian: spectrum, cluster table and hierarchy predictions");
  lv->add_option("--l", la.sites, "Number of sites")->required();
  lv->add_option("--bodies", la.bodies, "Dissipator body order")->required()->check(CLI::IsMember({1, 2}));
  lv->add_option("--topo", la.topology, "Topology for two-body sets (default chain:l)");
  lv->add_option("--seed", la.seed, "Seed of the Kossakowski matrix")->capture_default_str();
  lv->add_option("--distribution", la.distribution, "Eigenvalue distribution of K")->capture_default_str();
  lv->add_flag("--k-identity", la.k_identity, "Use K = dI instead of a random K");
  lv->add_option("--out", la.out, "Output directory")->capture_default_str();
  lv->add_flag("--write-matrices", la.write_matrices, "Also write the Liouvillian matrix");
  lv->add_option("--traces", la.traces, "Also write exact traces of every {I,X,Z} observable to this store");
  lv->add_option("--trace-count", la.trace_count, "Samples per trace")->capture_default_str();
  lv->add_option("--trace-span", la.trace_span, "Trace length in units of 1 / largest order-mean rate")->capture_default_str();
  lv->add_option("--shots", la.shots, "Shots per sample for the traces (0 = exact)")->capture_default_str();
  common(lv);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run the noisy-circuit protocol into a trace store");
  sim->add_option("config", sa.config, "Protocol config (JSON)")->required();
  sim->add_option("--out", sa.store, "Trace store (default <config stem>.traces.csv)");
  sim->add_flag("--fresh", sa.fresh, "Discard an existing store instead of resuming");
  sim->add_flag("--validate-states", sa.validate_states, "Check CPTP invariants after every gate");
  sim->add_flag("--progress", sa.progress, "Report progress on stderr");
  common(sim);

  AnalyzeArgs aa;
  auto* an = app.add_subcommand("analyze", "Harmonic inversion, clustering and hierarchy fit of a trace store");
  an->add_option("store", aa.store, "Trace store")->required();
  an->add_option("--out", aa.out, "Output directory (default <store stem>_analysis)");
  an->add_option("--topo", aa.topology, "Override the store topology");
  an->add_option("--max-modes", aa.max_modes, "Basis size (0 = length / 4)")->capture_default_str();
  an->add_option("--svd-cutoff", aa.svd_cutoff, "Relative singular value cutoff")->capture_default_str();
  an->add_flag("--no-noise-rank", aa.no_noise_rank, "Do not cap the rank at the noise threshold");
  an->add_option("--amp-floor", aa.amp_floor, "Amplitude floor relative to the largest mode")->capture_default_str();
  an->add_option("--err-ceiling", aa.err_ceiling, "Largest admissible mode error metric")->capture_default_str();
  common(an);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::vector<std::string> argv{"dhlab"};
  argv.insert(argv.end(), args.begin(), args.end());
  try {
    if (lv->parsed()) cmd_liouville(la, dry_run, jobs, argv, out);
    if (sim->parsed()) cmd_simulate(sa, dry_run, jobs, argv, out, err);
    if (an->parsed()) cmd_analyze(aa, dry_run, jobs, argv, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFault& e) {
    err << "numerical fault: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}

}  // namespace dhlab::cli

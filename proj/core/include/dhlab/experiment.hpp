#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dhlab/density_matrix.hpp"
#include "dhlab/harmonic_inversion.hpp"
#include "dhlab/perturbation.hpp"
#include "dhlab/spectral.hpp"
#include "dhlab/time_trace.hpp"
#include "dhlab/topology.hpp"

namespace dhlab {

enum class CircuitFamily : std::uint8_t { W1, W2 };

/// How initial states are chosen.
///  Aligned: every observable is measured on a state diagonal in its own
///    basis (identity sites in z) with seeded random bits; one state per
///    measurement setting, so 2^l states for the {I,X,Z} set.
///  Random: `random_states` seeded draws over {x,y,z}; every observable is
///    measured on every state.
///  Explicit: the listed states; every observable on every state.
enum class StateEnsemble : std::uint8_t { Aligned, Random, Explicit };

/// Run configuration, read from JSON. Keys (all optional except "sites"):
///   sites, topology ("chain:5"), family ("W1"|"W2"),
///   times {start, step, count}, observables ("default" or list),
///   pauli_set ("IXZ"|"IXYZ"), states ("aligned" | {"random": n} | list),
///   shots, instances, seed, noise ("p1=.. p2=.." or object),
///   hinv {max_modes, svd_cutoff, noise_rank, amp_floor, err_ceiling}.
struct ProtocolConfig {
  int sites = 3;
  std::string topology;  // empty = chain over all sites
  CircuitFamily family = CircuitFamily::W1;
  TimeGrid grid{0, 1, 21};
  std::vector<std::string> observables;  // empty = every non-identity string over pauli_set
  std::string pauli_set = "IXZ";
  StateEnsemble ensemble = StateEnsemble::Aligned;
  int random_states = 4;
  std::vector<std::string> states;  // Explicit ensemble
  int shots = 0;                     // 0 = exact expectation values
  int instances = 1;                 // random circuits averaged per (state, t)
  std::uint64_t seed = 1;            // states and shot sampling
  NoiseModel noise;                  // noise.seed drives the circuits
  HinvParams hinv;
  FilterParams filter;

  static ProtocolConfig from_json(std::string_view text);
  static ProtocolConfig load(const std::filesystem::path& path);
  std::string to_json() const;
  /// FNV-1a of the canonical JSON, as 16 hex digits.
  std::string fingerprint() const;

  /// Every validation failure, empty when the config is usable.
  std::vector<std::string> problems() const;
  /// Throws ConfigError listing all problems.
  void validate() const;

  /// Parsed topology; chain over all sites when unset. Empty for one site.
  std::optional<Topology> resolved_topology() const;
};

/// One measured value. Store line: observable,state,t,value,shots,seed.
struct TraceRecord {
  std::string observable;
  std::string state;
  int t = 0;
  double value = 0.0;
  int shots = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Records plus the header fields of a trace store.
struct TraceSet {
  int sites = 0;
  std::string topology;
  std::string family;
  std::string fingerprint;
  double time_unit = 1.0;  // generator time per unit of t
  std::vector<TraceRecord> records;

  /// Comment header lines "# key=value", a column line, then records with
  /// values printed round-trip exact.
  void write(std::ostream& out) const;
  static TraceSet read(std::istream& in);
  static TraceSet load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct AssembledTraces {
  std::vector<TimeTrace> traces;
  /// "observable@state: reason" for traces missing grid points.
  std::vector<std::string> incomplete;
};

/// Groups records by (observable, state) in order of first appearance on
/// the common time grid (the sorted union of t, which must be uniform).
AssembledTraces assemble_traces(const TraceSet& set);

/// Measurement plan: states and, per state, the observables read from it.
struct ProtocolPlan {
  int sites = 0;
  std::optional<Topology> topology;  // absent for a single site
  std::vector<int> times;
  std::vector<ProductState> states;
  std::vector<std::vector<PauliString>> observables;  // per state

  std::size_t job_count() const { return states.size() * times.size(); }
  std::size_t trace_count() const;
  std::size_t records_per_job(std::size_t state) const { return observables[state].size(); }
  void describe(std::ostream& out) const;
};

/// Validates and expands the config. Throws ConfigError.
ProtocolPlan plan_protocol(const ProtocolConfig& cfg);

struct RunOptions {
  int jobs = 0;  // 0 = hardware concurrency
  /// Trace store to append to; resumes after the last complete job when the
  /// file exists with a matching fingerprint. Empty = in memory only.
  std::filesystem::path store;
  /// CPTP checks after every gate (slow).
  bool validate_states = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Simulates the protocol. Jobs are (state, t) pairs run in parallel and
/// committed in canonical order, so stores are byte-identical for any
/// `jobs`. Failures raise NumericalFault naming the job.
TraceSet run_protocol(const ProtocolConfig& cfg, const RunOptions& options = {});

/// Observable with an aligned product state (identity sites in z) whose bits
/// are drawn from `rng_seed`.
ProductState aligned_state(const PauliString& observable, std::uint64_t rng_seed);

/// Exact traces of Tr(rho_0 O(t)) from an eigendecomposition on `grid` with
/// generator time `unit` per step. shots > 0 replaces each value v by the
/// mean of `shots` seeded +-1 outcomes with P(+1) = (1 + v) / 2.
TraceSet ed_traces(const Spectrum& spectrum, const std::vector<std::pair<PauliString, ProductState>>& pairs,
                   const TimeGrid& grid, double unit, int shots = 0, std::uint64_t seed = 0);

/// Filtered modes of one trace.
struct TraceModes {
  std::string observable;
  std::string state;
  int order = 0;
  std::vector<Mode> modes;  // after filter_spurious and amplitude refit
  bool flagged = false;
  std::string flag;
  double rms_residual = 0.0;  // reconstruction vs trace
  double noise_floor = 0.0;   // shot-noise standard error per sample, 0 if exact
  int shots = 0;

  /// |c|-weighted mean of -Re(lambda); 0 without modes.
  double rate() const;
};

/// Harmonic inversion of every trace (parallel). Traces without surviving
/// modes are kept and flagged.
std::vector<TraceModes> extract_rates(const std::vector<TimeTrace>& traces, const HinvParams& hp = {},
                                      const FilterParams& fp = {}, int jobs = 0);

struct OrderCluster {
  int order = 0;
  double mean_rate = 0.0;  // |c|-weighted mean of -Re(lambda)
  double weight = 0.0;     // sum |c|
  int modes = 0;
  int traces = 0;
  std::vector<double> rates;
  std::vector<double> weights;
};

struct ClusterSummary {
  std::map<int, OrderCluster> clusters;  // k >= 1 with at least one mode
  std::vector<int> empty_orders;         // 1..l without modes

  std::map<int, double> means() const;
  /// Order with the largest mean rate.
  int argmax() const;
};

ClusterSummary cluster_by_order(const std::vector<TraceModes>& modes, int sites);

/// Weighted Gaussian kernel density of one cluster's rates on `points`
/// samples spanning +-4 bandwidths around the data (Silverman bandwidth).
struct DensityCurve {
  std::vector<double> rate;
  std::vector<double> density;
  double bandwidth = 0.0;
};
DensityCurve kernel_density(const OrderCluster& cluster, int points = 101);

/// How eigenvalues are assigned to operator orders for ED cluster means.
///  Dominant: each eigenvalue counts once, for its eigenvector's dominant order.
///  Weighted: each eigenvalue counts towards every order k with the share of
///    its eigenvector's norm on order-k strings. This matches what a trace of
///    an order-k observable sees when eigenoperators mix orders.
enum class OrderGrouping : std::uint8_t { Dominant, Weighted };

/// ED reference: mean -Re(lambda) per operator order k >= 1.
std::map<int, double> ed_cluster_means(const Spectrum& spectrum, OrderGrouping grouping = OrderGrouping::Weighted);

struct HierarchyFit {
  HierarchyParams params;
  std::map<int, double> residuals;  // mean - predicted
  double max_abs_residual = 0.0;
  double max_rate = 0.0;
  double r_squared = 0.0;
};

/// Nonnegative least squares of means onto predicted_rate(k; alpha, beta).
/// Throws InvalidArgument with fewer than 3 distinct orders.
HierarchyFit fit_hierarchy(const std::map<int, double>& means, int sites);

/// Least-squares line through the origin, rate = slope * k.
struct LineFit {
  double slope = 0.0;
  double r_squared = 0.0;
  double max_relative_deviation = 0.0;
};
LineFit fit_line_through_origin(const std::map<int, double>& means);

/// Mean one- and two-body weights reproducing `params` on `topo`
/// (inverse of hierarchy_from_weights).
ChannelWeights weights_from_hierarchy(const HierarchyParams& params, const Topology& topo);

struct SubclusterRow {
  StringFeatures features;
  int members = 0;
  double measured = 0.0;  // mean rate of members minus order-k mean rate
  double sigma = 0.0;     // standard error of the mean
  double theory = 0.0;    // same deviation from the zeroth-order table
  double z = 0.0;
  bool included = false;  // >= 2 members
  bool outlier = false;
};

struct SubclusterReport {
  std::vector<SubclusterRow> rows;
  double chi2 = 0.0;  // per degree of freedom
  int dof = 0;
  double chi2_pruned = 0.0;
  int dof_pruned = 0;
  double sign_agreement = 0.0;  // over included classes with nonzero theory
  int sign_classes = 0;
};

/// Per-(k, p, e) deviations of trace rates from their order-k mean versus the
/// table's prediction. sigma is floored at 1e-6 of the largest rate so exact
/// data stays finite. Outliers: |z| beyond the two-sided Bonferroni 5%
/// threshold over the included classes.
SubclusterReport subcluster_analysis(const std::vector<TraceModes>& modes, const Topology& topo,
                                     const std::map<StringFeatures, ClusterEntry>& table);

struct AnalysisOptions {
  HinvParams hinv;
  FilterParams filter;
  int jobs = 0;
  std::optional<Topology> topology;  // overrides the store header
  /// Theory table for the subcluster analysis; default derives (d1, d2) from
  /// the hierarchy fit.
  std::optional<std::map<StringFeatures, ClusterEntry>> table;
};

struct AnalysisResult {
  int sites = 0;
  std::string topology;
  std::vector<TraceModes> traces;
  std::vector<std::string> incomplete;
  ClusterSummary clusters;
  std::optional<HierarchyFit> fit;
  std::optional<double> turnback;  // real maximizer of the fitted hierarchy
  std::optional<SubclusterReport> subclusters;
  std::vector<std::string> notes;

  /// Sectioned text: [summary] [modes] [clusters] [fit] [subclusters] [chi2].
  void write(std::ostream& out) const;
  /// clusters.csv, density.csv, modes.csv, fit.csv, subclusters.csv and
  /// reconstruction.csv (needs the traces) in `dir`.
  void export_csv(const std::filesystem::path& dir, const std::vector<TimeTrace>& traces) const;
};

/// Full pipeline over a trace set. Throws InvalidArgument on an empty set.
AnalysisResult analyze(const TraceSet& set, const AnalysisOptions& options = {});

/// Deterministic seed for a labelled sub-stream (splitmix64 chain).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels);

}  // namespace dhlab

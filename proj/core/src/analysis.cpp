#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "dhlab/error.hpp"
#include "dhlab/experiment.hpp"
#include "parallel.hpp"

namespace dhlab {

double TraceModes::rate() const {
  double w = 0, s = 0;
  for (const auto& m : modes) {
    w += std::abs(m.amplitude);
    s += std::abs(m.amplitude) * -m.lambda.real();
  }
  return w > 0 ? s / w : 0.0;
}

std::vector<TraceModes> extract_rates(const std::vector<TimeTrace>& traces, const HinvParams& hp,
                                      const FilterParams& fp, int jobs) {
  std::vector<TraceModes> out(traces.size());
  parallel_for(traces.size(), resolve_jobs(jobs), [&](std::size_t i) {
    const auto& tr = traces[i];
    auto& r = out[i];
    r.observable = tr.meta.observable;
    r.state = tr.meta.state;
    r.shots = tr.meta.shots;
    try {
      r.order = PauliString::parse(tr.meta.observable).order();
    } catch (const InvalidArgument&) {
      r.order = -1;
    }
    if (r.shots > 0 && tr.size() > 0) {
      double var = 0;
      for (const auto& v : tr.values) var += std::max(0.0, 1.0 - v.real() * v.real());
      r.noise_floor = std::sqrt(var / static_cast<double>(tr.size()) / r.shots);
    }
    try {
      const auto hr = harmonic_inversion(tr, hp);
      r.modes = filter_spurious(hr.modes, fp);
      if (!r.modes.empty()) r.modes = refit_amplitudes(tr, r.modes);
    } catch (const std::exception& e) {
      r.flagged = true;
      r.flag = e.what();
      return;
    }
    if (r.modes.empty()) {
      r.flagged = true;
      r.flag = "no surviving mode";
      return;
    }
    const auto rec = reconstruct(r.modes, tr);
    double se = 0;
    for (std::size_t n = 0; n < tr.size(); ++n) se += std::norm(rec.values[n] - tr.values[n]);
    r.rms_residual = std::sqrt(se / static_cast<double>(tr.size()));
  });
  return out;
}

std::map<int, double> ClusterSummary::means() const {
  std::map<int, double> m;
  for (const auto& [k, c] : clusters) m[k] = c.mean_rate;
  return m;
}

int ClusterSummary::argmax() const {
  int best = 0;
  double rate = -1;
  for (const auto& [k, c] : clusters) {
    if (c.mean_rate > rate) {
      rate = c.mean_rate;
      best = k;
    }
  }
  return best;
}

ClusterSummary cluster_by_order(const std::vector<TraceModes>& modes, int sites) {
  ClusterSummary out;
  for (const auto& tm : modes) {
    if (tm.flagged || tm.order < 1) continue;
    auto& c = out.clusters[tm.order];
    c.order = tm.order;
    ++c.traces;
    for (const auto& m : tm.modes) {
      c.rates.push_back(-m.lambda.real());
      c.weights.push_back(std::abs(m.amplitude));
    }
  }
  for (auto it = out.clusters.begin(); it != out.clusters.end();) {
    auto& c = it->second;
    c.modes = static_cast<int>(c.rates.size());
    c.weight = std::accumulate(c.weights.begin(), c.weights.end(), 0.0);
    if (c.weight <= 0) {
      it = out.clusters.erase(it);
      continue;
    }
    c.mean_rate = std::inner_product(c.rates.begin(), c.rates.end(), c.weights.begin(), 0.0) / c.weight;
    ++it;
  }
  for (int k = 1; k <= sites; ++k) {
    if (!out.clusters.contains(k)) out.empty_orders.push_back(k);
  }
  return out;
}

DensityCurve kernel_density(const OrderCluster& c, int points) {
  DensityCurve d;
  if (c.rates.empty() || points < 2) return d;
  double w = 0, w2 = 0, mean = 0;
  for (std::size_t i = 0; i < c.rates.size(); ++i) {
    w += c.weights[i];
    w2 += c.weights[i] * c.weights[i];
    mean += c.weights[i] * c.rates[i];
  }
  mean /= w;
  double var = 0;
  for (std::size_t i = 0; i < c.rates.size(); ++i) var += c.weights[i] * (c.rates[i] - mean) * (c.rates[i] - mean);
  var /= w;
  const double n_eff = w * w / w2;
  d.bandwidth = 1.06 * std::sqrt(var) * std::pow(n_eff, -0.2);
  if (!(d.bandwidth > 0)) d.bandwidth = std::max(1e-3 * std::abs(mean), 1e-12);
  const auto [lo, hi] = std::minmax_element(c.rates.begin(), c.rates.end());
  const double a = *lo - 4 * d.bandwidth;
  const double b = *hi + 4 * d.bandwidth;
  const double norm = 1.0 / (w * d.bandwidth * std::sqrt(2 * std::numbers::pi));
  for (int i = 0; i < points; ++i) {
    const double x = a + (b - a) * i / (points - 1);
    double y = 0;
    for (std::size_t j = 0; j < c.rates.size(); ++j) {
      const double u = (x - c.rates[j]) / d.bandwidth;
      y += c.weights[j] * std::exp(-0.5 * u * u);
    }
    d.rate.push_back(x);
    d.density.push_back(y * norm);
  }
  return d;
}

std::map<int, double> ed_cluster_means(const Spectrum& spectrum, OrderGrouping grouping) {
  if (grouping == OrderGrouping::Dominant) {
    std::map<int, std::pair<double, int>> acc;
    for (Eigen::Index n = 0; n < spectrum.size(); ++n) {
      const int k = spectrum.dominant_orders()[static_cast<std::size_t>(n)];
      if (k < 1) continue;
      acc[k].first += -spectrum.eigenvalues()(n).real();
      ++acc[k].second;
    }
    std::map<int, double> out;
    for (const auto& [k, a] : acc) out[k] = a.first / a.second;
    return out;
  }
  const auto& orders = orders_of_indices(spectrum.sites());
  const auto& v = spectrum.eigenvectors();
  std::map<int, std::pair<double, double>> acc;
  for (Eigen::Index n = 0; n < spectrum.size(); ++n) {
    const double rate = -spectrum.eigenvalues()(n).real();
    const double norm = v.col(n).squaredNorm();
    for (Eigen::Index x = 0; x < v.rows(); ++x) {
      const int k = orders[static_cast<std::size_t>(x)];
      if (k < 1) continue;
      const double w = std::norm(v(x, n)) / norm;
      acc[k].first += w * rate;
      acc[k].second += w;
    }
  }
  std::map<int, double> out;
  for (const auto& [k, a] : acc) {
    if (a.second > 0) out[k] = a.first / a.second;
  }
  return out;
}

HierarchyFit fit_hierarchy(const std::map<int, double>& means, int sites) {
  if (means.size() < 3) throw InvalidArgument(fmt::format("hierarchy fit needs >= 3 orders, got {}", means.size()));
  if (sites < 2) throw InvalidArgument("hierarchy fit needs at least 2 sites");
  const double l = sites;
  std::vector<double> a, b, y;
  for (const auto& [k, r] : means) {
    a.push_back((3 * l * k - 2.0 * k * k - k) / (9 * (l - 1)));
    b.push_back(k / (3 * l));
    y.push_back(r);
  }
  auto dot = [](const std::vector<double>& u, const std::vector<double>& v) {
    return std::inner_product(u.begin(), u.end(), v.begin(), 0.0);
  };
  const double aa = dot(a, a), ab = dot(a, b), bb = dot(b, b), ay = dot(a, y), by = dot(b, y);
  const double det = aa * bb - ab * ab;
  if (std::abs(det) <= 1e-12 * aa * bb) throw InvalidArgument("degenerate design: orders do not separate alpha and beta");
  auto sse = [&](double alpha, double beta) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::pow(y[i] - alpha * a[i] - beta * b[i], 2);
    return s;
  };
  double alpha = (bb * ay - ab * by) / det;
  double beta = (aa * by - ab * ay) / det;
  if (alpha < 0 || beta < 0) {
    // Two-variable NNLS: the optimum lies on one of the clipped faces.
    const double only_b = std::max(0.0, by / bb);
    const double only_a = std::max(0.0, ay / aa);
    if (sse(0, only_b) <= sse(only_a, 0)) {
      alpha = 0;
      beta = only_b;
    } else {
      alpha = only_a;
      beta = 0;
    }
  }
  // Roundoff-sized strengths are zero; a 1e-17 alpha would put turnback_k at 1e15.
  const double scale = *std::max_element(y.begin(), y.end());
  if (alpha > 0 && alpha * *std::max_element(a.begin(), a.end()) <= 1e-10 * scale) {
    alpha = 0;
    beta = std::max(0.0, by / bb);
  } else if (beta > 0 && beta * *std::max_element(b.begin(), b.end()) <= 1e-10 * scale) {
    beta = 0;
    alpha = std::max(0.0, ay / aa);
  }
  HierarchyFit fit;
  fit.params = {alpha, beta, sites};
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sst = 0;
  for (const auto v : y) sst += (v - mean_y) * (v - mean_y);
  for (const auto& [k, r] : means) {
    const double res = r - predicted_rate(k, fit.params);
    fit.residuals[k] = res;
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(res));
    fit.max_rate = std::max(fit.max_rate, r);
  }
  fit.r_squared = sst > 0 ? 1 - sse(alpha, beta) / sst : 1.0;
  return fit;
}

LineFit fit_line_through_origin(const std::map<int, double>& means) {
  if (means.empty()) throw InvalidArgument("line fit needs at least one point");
  double kr = 0, kk = 0, mean = 0;
  for (const auto& [k, r] : means) {
    kr += k * r;
    kk += static_cast<double>(k) * k;
    mean += r;
  }
  mean /= static_cast<double>(means.size());
  LineFit f;
  f.slope = kr / kk;
  double sse = 0, sst = 0;
  for (const auto& [k, r] : means) {
    const double pred = f.slope * k;
    sse += (r - pred) * (r - pred);
    sst += (r - mean) * (r - mean);
    if (pred != 0) f.max_relative_deviation = std::max(f.max_relative_deviation, std::abs(r - pred) / std::abs(pred));
  }
  f.r_squared = sst > 0 ? 1 - sse / sst : 1.0;
  return f;
}

ChannelWeights weights_from_hierarchy(const HierarchyParams& params, const Topology& topo) {
  const double l = topo.sites();
  ChannelWeights w;
  w.one_body = params.beta / (12.0 * l);
  w.two_body = topo.edges().empty() ? 0.0 : params.alpha * l / (72.0 * static_cast<double>(topo.edges().size()));
  return w;
}

namespace {

// Standard normal quantile by bisection on the complementary error function.
double normal_quantile(double p) {
  double lo = -40, hi = 40;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (0.5 * std::erfc(-mid / std::numbers::sqrt2) < p ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace

SubclusterReport subcluster_analysis(const std::vector<TraceModes>& modes, const Topology& topo,
                                     const std::map<StringFeatures, ClusterEntry>& table) {
  std::map<StringFeatures, std::vector<double>> members;
  std::map<int, std::pair<double, int>> order_mean;
  double scale = 0;
  for (const auto& tm : modes) {
    if (tm.flagged || tm.order < 1) continue;
    const auto s = PauliString::parse(tm.observable);
    if (s.size() != topo.sites()) throw InvalidArgument("observable length does not match the topology");
    const double r = tm.rate();
    members[classify_string(s, topo)].push_back(r);
    order_mean[tm.order].first += r;
    order_mean[tm.order].second += 1;
    scale = std::max(scale, std::abs(r));
  }
  std::map<int, std::pair<double, int>> theory_mean;
  for (const auto& [f, e] : table) {
    if (f.order < 1) continue;
    theory_mean[f.order].first += e.center * e.count;
    theory_mean[f.order].second += e.count;
  }

  SubclusterReport rep;
  const double floor = 1e-6 * scale;
  for (const auto& [f, rates] : members) {
    SubclusterRow row;
    row.features = f;
    row.members = static_cast<int>(rates.size());
    const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / row.members;
    const auto& om = order_mean[f.order];
    row.measured = mean - om.first / om.second;
    if (row.members >= 2) {
      double var = 0;
      for (const auto r : rates) var += (r - mean) * (r - mean);
      var /= row.members - 1;
      row.sigma = std::sqrt(var / row.members);
    }
    const auto entry = table.find(f);
    const auto tm = theory_mean.find(f.order);
    if (entry != table.end() && tm != theory_mean.end()) {
      // table centers are eigenvalues; rates carry the opposite sign
      row.theory = -(entry->second.center - tm->second.first / tm->second.second);
    }
    row.included = row.members >= 2 && entry != table.end();
    row.z = (row.measured - row.theory) / std::max(row.sigma, floor > 0 ? floor : 1e-300);
    rep.rows.push_back(row);
  }

  int agree = 0;
  for (const auto& row : rep.rows) {
    if (!row.included) continue;
    rep.chi2 += row.z * row.z;
    ++rep.dof;
    if (std::abs(row.theory) > 1e-9 * std::max(scale, 1e-300)) {
      ++rep.sign_classes;
      agree += (row.measured > 0) == (row.theory > 0) ? 1 : 0;
    }
  }
  if (rep.dof > 0) {
    rep.chi2 /= rep.dof;
    const double cut = normal_quantile(1 - 0.05 / (2.0 * rep.dof));
    for (auto& row : rep.rows) {
      if (!row.included) continue;
      row.outlier = std::abs(row.z) > cut;
      if (row.outlier) continue;
      rep.chi2_pruned += row.z * row.z;
      ++rep.dof_pruned;
    }
    if (rep.dof_pruned > 0) rep.chi2_pruned /= rep.dof_pruned;
  }
  rep.sign_agreement = rep.sign_classes > 0 ? static_cast<double>(agree) / rep.sign_classes : 1.0;
  return rep;
}

AnalysisResult analyze(const TraceSet& set, const AnalysisOptions& options) {
  if (set.records.empty()) throw InvalidArgument("trace store is empty");
  const auto assembled = assemble_traces(set);
  AnalysisResult res;
  res.sites = set.sites;
  std::optional<Topology> topo = options.topology;
  if (!topo && !set.topology.empty()) topo = Topology::parse(set.topology);
  if (!topo && set.sites >= 2) topo = Topology::chain(set.sites);
  res.topology = topo ? topo->str() : std::string("none");
  res.incomplete = assembled.incomplete;
  res.traces = extract_rates(assembled.traces, options.hinv, options.filter, options.jobs);
  res.clusters = cluster_by_order(res.traces, res.sites);
  for (const int k : res.clusters.empty_orders) res.notes.push_back(fmt::format("order {} has no modes", k));

  const auto means = res.clusters.means();
  if (means.size() >= 3 && res.sites >= 2) {
    try {
      res.fit = fit_hierarchy(means, res.sites);
    } catch (const InvalidArgument& e) {
      res.notes.emplace_back(fmt::format("hierarchy fit skipped: {}", e.what()));
    }
  } else {
    res.notes.emplace_back("hierarchy fit skipped: fewer than 3 orders");
  }
  if (res.fit && res.fit->params.alpha > 0) res.turnback = turnback_k(res.fit->params);

  std::optional<std::map<StringFeatures, ClusterEntry>> table = options.table;
  if (!table && res.fit && topo) {
    const auto w = weights_from_hierarchy(res.fit->params, *topo);
    table = cluster_table(*topo, w.one_body, w.two_body);
  }
  if (table && topo) {
    res.subclusters = subcluster_analysis(res.traces, *topo, *table);
  } else {
    res.notes.emplace_back("subcluster analysis skipped: no theory table");
  }
  return res;
}

namespace {

std::string g(double v) { return fmt::format("{:.10g}", v); }

}  // namespace

void AnalysisResult::write(std::ostream& out) const {
  int flagged = 0;
  for (const auto& t : traces) flagged += t.flagged ? 1 : 0;
  out << "[summary]\n";
  out << "sites=" << sites << "\ntopology=" << topology << '\n';
  out << "traces=" << traces.size() << "\nflagged=" << flagged << "\nincomplete=" << incomplete.size() << '\n';
  out << "argmax_k=" << clusters.argmax() << '\n';
  out << "turnback_k=" << (turnback ? g(*turnback) : std::string("none")) << '\n';
  out << "rate_convention=1/tau = -Re(lambda)\n";
  for (const auto& n : notes) out << "note=" << n << '\n';

  out << "\n[modes]\nobservable,state,order,re_lambda,im_lambda,re_amplitude,im_amplitude,error_metric,rms_residual\n";
  for (const auto& t : traces) {
    for (const auto& m : t.modes) {
      out << fmt::format("{},{},{},{},{},{},{},{},{}\n", t.observable, t.state, t.order, g(m.lambda.real()),
                         g(m.lambda.imag()), g(m.amplitude.real()), g(m.amplitude.imag()), g(m.error_metric),
                         g(t.rms_residual));
    }
  }
  out << "\n[flagged]\n";
  for (const auto& t : traces) {
    if (t.flagged) out << t.observable << '@' << t.state << ": " << t.flag << '\n';
  }
  for (const auto& s : incomplete) out << s << '\n';

  out << "\n[clusters]\nk,mean_rate,weight,modes,traces\n";
  for (const auto& [k, c] : clusters.clusters) {
    out << fmt::format("{},{},{},{},{}\n", k, g(c.mean_rate), g(c.weight), c.modes, c.traces);
  }

  out << "\n[fit]\n";
  if (fit) {
    out << "alpha=" << g(fit->params.alpha) << "\nbeta=" << g(fit->params.beta) << '\n';
    out << "r_squared=" << g(fit->r_squared) << "\nmax_abs_residual=" << g(fit->max_abs_residual) << '\n';
    out << "k,mean_rate,predicted,residual\n";
    for (const auto& [k, r] : fit->residuals) {
      out << fmt::format("{},{},{},{}\n", k, g(clusters.clusters.at(k).mean_rate), g(predicted_rate(k, fit->params)), g(r));
    }
  }

  out << "\n[subclusters]\nk,p,e,members,measured,sigma,theory,z,included,outlier\n";
  if (subclusters) {
    for (const auto& r : subclusters->rows) {
      out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.features.order, r.features.adjacent_pairs,
                         r.features.edge_nonidentities, r.members, g(r.measured), g(r.sigma), g(r.theory), g(r.z),
                         r.included ? 1 : 0, r.outlier ? 1 : 0);
    }
  }
  out << "\n[chi2]\n";
  if (subclusters) {
    out << "chi2_stat=" << g(subclusters->chi2) << "\ndof=" << subclusters->dof << '\n';
    out << "chi2_pruned=" << g(subclusters->chi2_pruned) << "\ndof_pruned=" << subclusters->dof_pruned << '\n';
    out << "sign_agreement=" << g(subclusters->sign_agreement) << '\n';
  }
}

void AnalysisResult::export_csv(const std::filesystem::path& dir, const std::vector<TimeTrace>& input) const {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::trunc);
    if (!f) throw InvalidArgument(fmt::format("cannot write '{}'", (dir / name).string()));
    return f;
  };
  {
    auto f = open("clusters.csv");
    f << "k,mean_rate,weight,modes,traces,predicted\n";
    for (const auto& [k, c] : clusters.clusters) {
      f << fmt::format("{},{},{},{},{},{}\n", k, g(c.mean_rate), g(c.weight), c.modes, c.traces,
                       fit ? g(predicted_rate(k, fit->params)) : std::string());
    }
  }
  {
    auto f = open("density.csv");
    f << "k,rate,density\n";
    for (const auto& [k, c] : clusters.clusters) {
      const auto d = kernel_density(c);
      for (std::size_t i = 0; i < d.rate.size(); ++i) f << fmt::format("{},{},{}\n", k, g(d.rate[i]), g(d.density[i]));
    }
  }
  {
    auto f = open("modes.csv");
    f << "observable,state,order,rate,weight,re_lambda,im_lambda\n";
    for (const auto& t : traces) {
      for (const auto& m : t.modes) {
        f << fmt::format("{},{},{},{},{},{},{}\n", t.observable, t.state, t.order, g(-m.lambda.real()),
                         g(std::abs(m.amplitude)), g(m.lambda.real()), g(m.lambda.imag()));
      }
    }
  }
  {
    auto f = open("fit.csv");
    f << "k,mean_rate,predicted\n";
    if (fit) {
      for (const auto& [k, r] : fit->residuals) {
        f << fmt::format("{},{},{}\n", k, g(clusters.clusters.at(k).mean_rate), g(predicted_rate(k, fit->params)));
      }
    }
  }
  {
    auto f = open("subclusters.csv");
    f << "k,p,e,members,measured,sigma,theory,included,outlier\n";
    if (subclusters) {
      for (const auto& r : subclusters->rows) {
        f << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.features.order, r.features.adjacent_pairs,
                         r.features.edge_nonidentities, r.members, g(r.measured), g(r.sigma), g(r.theory),
                         r.included ? 1 : 0, r.outlier ? 1 : 0);
      }
    }
  }
  {
    auto f = open("reconstruction.csv");
    f << "observable,state,time,value,reconstructed\n";
    std::map<std::pair<std::string, std::string>, const TraceModes*> by_key;
    for (const auto& t : traces) by_key[{t.observable, t.state}] = &t;
    for (const auto& tr : input) {
      const auto it = by_key.find({tr.meta.observable, tr.meta.state});
      if (it == by_key.end() || it->second->flagged) continue;
      const auto rec = reconstruct(it->second->modes, tr);
      for (std::size_t n = 0; n < tr.size(); ++n) {
        f << fmt::format("{},{},{},{},{}\n", tr.meta.observable, tr.meta.state, g(tr.time(n)), g(tr.values[n].real()),
                         g(rec.values[n].real()));
      }
    }
  }
}

}  // namespace dhlab

#include "dhlab/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "dhlab/error.hpp"

namespace dhlab {

namespace {

struct Parsed {
  std::map<std::string, std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

// "# key=value" lines, one column line, then records with `width` fields.
Parsed parse(std::istream& in, const std::string& columns, std::size_t width) {
  Parsed p;
  std::string line;
  bool seen_columns = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        const auto key = line.substr(1, eq - 1);
        const auto b = key.find_first_not_of(' ');
        p.header[b == std::string::npos ? key : key.substr(b)] = line.substr(eq + 1);
      }
      continue;
    }
    if (!seen_columns) {
      if (line != columns) throw InvalidArgument(fmt::format("line {}: expected column line '{}'", lineno, columns));
      seen_columns = true;
      continue;
    }
    auto f = split(line);
    if (f.size() != width) throw InvalidArgument(fmt::format("line {}: expected {} fields, got {}", lineno, width, f.size()));
    p.rows.push_back(std::move(f));
  }
  if (!seen_columns) throw InvalidArgument(fmt::format("missing column line '{}'", columns));
  return p;
}

double to_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw InvalidArgument("");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(fmt::format("'{}' is not a number", s));
  }
}

template <typename T>
T to_int(const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw InvalidArgument(fmt::format("'{}' is not an integer", s));
  return v;
}

const std::string& need(const Parsed& p, const char* key) {
  const auto it = p.header.find(key);
  if (it == p.header.end()) throw InvalidArgument(fmt::format("missing header '{}'", key));
  return it->second;
}

std::string get(const Parsed& p, const char* key) {
  const auto it = p.header.find(key);
  return it == p.header.end() ? std::string{} : it->second;
}

}  // namespace

void write_matrix(std::ostream& out, const MatrixHeader& h, const ComplexMatrix& m, double drop_below) {
  out << "# dhlab matrix\n";
  out << fmt::format("# kind={}\n# sites={}\n# channels={}\n# seed={}\n# topology={}\n# distribution={}\n", h.kind,
                     h.sites, h.channels, h.seed, h.topology, h.distribution);
  out << fmt::format("# rows={}\n# cols={}\n", m.rows(), m.cols());
  out << "row,col,re,im\n";
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const auto v = m(r, c);
      if (std::abs(v) <= drop_below) continue;
      out << fmt::format("{},{},{:.17g},{:.17g}\n", r, c, v.real(), v.imag());
    }
  }
}

MatrixFile read_matrix(std::istream& in) {
  const auto p = parse(in, "row,col,re,im", 4);
  MatrixFile f;
  auto& h = f.header;
  h.kind = need(p, "kind");
  h.sites = to_int<int>(need(p, "sites"));
  h.channels = to_int<int>(need(p, "channels"));
  h.seed = to_int<std::uint64_t>(need(p, "seed"));
  h.topology = get(p, "topology");
  h.distribution = get(p, "distribution");
  h.rows = to_int<Eigen::Index>(need(p, "rows"));
  h.cols = to_int<Eigen::Index>(need(p, "cols"));
  if (h.rows < 0 || h.cols < 0) throw InvalidArgument("negative matrix dimensions");
  f.matrix = ComplexMatrix::Zero(h.rows, h.cols);
  for (const auto& r : p.rows) {
    const auto i = to_int<Eigen::Index>(r[0]);
    const auto j = to_int<Eigen::Index>(r[1]);
    if (i < 0 || i >= h.rows || j < 0 || j >= h.cols) throw InvalidArgument(fmt::format("entry ({}, {}) out of range", i, j));
    f.matrix(i, j) = {to_double(r[2]), to_double(r[3])};
  }
  return f;
}

void write_spectrum(std::ostream& out, const Spectrum& s) {
  out << fmt::format("# dhlab spectrum\n# sites={}\n# size={}\n# max_residual={:.3e}\n", s.sites(), s.size(),
                     s.max_residual());
  out << "re,im,average_order,dominant_order\n";
  for (Eigen::Index n = 0; n < s.size(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    out << fmt::format("{:.17g},{:.17g},{:.17g},{}\n", s.eigenvalues()(n).real(), s.eigenvalues()(n).imag(),
                       s.average_orders()[i], s.dominant_orders()[i]);
  }
}

void write_cluster_table(std::ostream& out, const std::map<StringFeatures, ClusterEntry>& table) {
  out << "k,p,e,count,center\n";
  for (const auto& [f, e] : table) {
    out << fmt::format("{},{},{},{},{:.17g}\n", f.order, f.adjacent_pairs, f.edge_nonidentities, e.count, e.center);
  }
}

void write_trace(std::ostream& out, const TimeTrace& t) {
  out << fmt::format("# observable={}\n# state={}\n# shots={}\n# seed={}\n# start={:.17g}\n# dt={:.17g}\n",
                     t.meta.observable, t.meta.state, t.meta.shots, t.meta.seed, t.start, t.dt);
  out << "t,re,im\n";
  for (std::size_t n = 0; n < t.size(); ++n) {
    out << fmt::format("{:.17g},{:.17g},{:.17g}\n", t.time(n), t.values[n].real(), t.values[n].imag());
  }
}

TimeTrace read_trace(std::istream& in) {
  const auto p = parse(in, "t,re,im", 3);
  TimeTrace t;
  t.meta.observable = get(p, "observable");
  t.meta.state = get(p, "state");
  if (const auto s = get(p, "shots"); !s.empty()) t.meta.shots = to_int<int>(s);
  if (const auto s = get(p, "seed"); !s.empty()) t.meta.seed = to_int<std::uint64_t>(s);
  std::vector<double> times;
  for (const auto& r : p.rows) {
    times.push_back(to_double(r[0]));
    t.values.emplace_back(to_double(r[1]), to_double(r[2]));
  }
  t.start = times.empty() ? 0.0 : times.front();
  if (times.size() >= 2) t.dt = times[1] - times[0];
  if (const auto s = get(p, "dt"); !s.empty()) t.dt = to_double(s);
  if (!(t.dt > 0)) throw InvalidArgument("trace time step must be positive");
  for (std::size_t n = 0; n < times.size(); ++n) {
    if (std::abs(times[n] - t.time(n)) > 1e-9 * std::max(1.0, std::abs(t.time(n)))) {
      throw InvalidArgument(fmt::format("sample {} at t={} is off the uniform grid", n, times[n]));
    }
  }
  return t;
}

void write_modes(std::ostream& out, const std::vector<Mode>& modes) {
  out << "re_lambda,im_lambda,re_c,im_c,error_metric\n";
  for (const auto& m : modes) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", m.lambda.real(), m.lambda.imag(),
                       m.amplitude.real(), m.amplitude.imag(), m.error_metric);
  }
}

std::vector<Mode> read_modes(std::istream& in) {
  const auto p = parse(in, "re_lambda,im_lambda,re_c,im_c,error_metric", 5);
  std::vector<Mode> out;
  for (const auto& r : p.rows) {
    out.push_back({{to_double(r[0]), to_double(r[1])}, {to_double(r[2]), to_double(r[3])}, to_double(r[4])});
  }
  return out;
}

}  // namespace dhlab

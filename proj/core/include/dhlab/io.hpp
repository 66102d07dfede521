#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dhlab/liouvillian.hpp"
#include "dhlab/perturbation.hpp"
#include "dhlab/spectral.hpp"
#include "dhlab/string_features.hpp"
#include "dhlab/time_trace.hpp"

namespace dhlab {

/// Header of a matrix file. `channels` is N_l for Kossakowski and Liouvillian
/// files alike; topology is empty for one-body models.
struct MatrixHeader {
  std::string kind;  // "kossakowski" or "liouvillian"
  int sites = 0;
  int channels = 0;
  std::uint64_t seed = 0;
  std::string topology;
  std::string distribution;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  friend bool operator==(const MatrixHeader&, const MatrixHeader&) = default;
};

/// Columnar text: "# key=value" header lines, the column line
/// "row,col,re,im", then one record per entry with |value| > drop_below.
/// Values are printed round-trip exact.
void write_matrix(std::ostream& out, const MatrixHeader& header, const ComplexMatrix& m, double drop_below = 0.0);

struct MatrixFile {
  MatrixHeader header;
  ComplexMatrix matrix;  // unlisted entries are zero
};
/// Throws InvalidArgument on malformed input or out-of-range indices.
MatrixFile read_matrix(std::istream& in);

/// Records re,im,average_order,dominant_order in spectrum order.
void write_spectrum(std::ostream& out, const Spectrum& spectrum);

/// Records k,p,e,count,center.
void write_cluster_table(std::ostream& out, const std::map<StringFeatures, ClusterEntry>& table);

/// Header (observable, state, shots, seed, start, dt), column line "t,re,im",
/// then one record per sample.
void write_trace(std::ostream& out, const TimeTrace& trace);
/// Throws InvalidArgument on a non-uniform grid or malformed input.
TimeTrace read_trace(std::istream& in);

/// Records re_lambda,im_lambda,re_c,im_c,error_metric.
void write_modes(std::ostream& out, const std::vector<Mode>& modes);
std::vector<Mode> read_modes(std::istream& in);

}  // namespace dhlab

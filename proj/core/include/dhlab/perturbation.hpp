#pragma once

#include <map>

#include "dhlab/liouvillian.hpp"
#include "dhlab/string_features.hpp"

namespace dhlab {

/// Two-body (alpha) and one-body (beta) strengths of the decay-rate hierarchy
/// 1/tau_k = alpha/(9(l-1)) (3lk - 2k^2 - k) + beta/(3l) k.
struct HierarchyParams {
  double alpha = 0.0;
  double beta = 0.0;
  int sites = 0;
};

int count_anticommuting(const PauliString& s, const LindbladSet& set);

/// Zeroth-order diagonal element for K = dI: -2 d * (#anticommuting channels).
double diagonal_element(const PauliString& s, const LindbladSet& set, double d);

/// Exact diagonal element for an arbitrary K: -2 sum_n K_nn [s, L_n anticommute].
double diagonal_element(const PauliString& s, const LindbladSet& set, const KossakowskiMatrix& k);

/// Inverse timescale (positive) of order-k observables.
double predicted_rate(int k, const HierarchyParams& params);

/// Real maximizer of predicted_rate; throws InvalidArgument when alpha == 0
/// (monotone regime, no turnback).
double turnback_k(const HierarchyParams& params);

/// Parameters for which predicted_rate(k) equals the mean of -diagonal_element
/// over all order-k strings, given mean one-body (d1) and two-body (d2)
/// channel weights. Exact for any topology; alpha = 0 for one-body sets.
HierarchyParams hierarchy_from_weights(const LindbladSet& set, double d1, double d2);

/// Chain-like subcluster position -2[d1 2k + d2 (6(2k - e - 2p) + 4p)].
double subcluster_center(const StringFeatures& features, const Topology& topo, double d1, double d2);

struct ClusterEntry {
  int count = 0;
  double center = 0.0;  // mean zeroth-order diagonal element of the members
};

/// Exhaustive (k, p, e) classification of all 4^l strings with the two-body
/// channel set on `topo` and weights d1, d2.
std::map<StringFeatures, ClusterEntry> cluster_table(const Topology& topo, double d1, double d2);

/// Same table with d1 = d2 = 2^l / N_l for the two-body set on `topo`.
std::map<StringFeatures, ClusterEntry> cluster_table(const Topology& topo);

}  // namespace dhlab

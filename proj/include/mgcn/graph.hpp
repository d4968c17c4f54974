#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mgcn/types.hpp"

namespace mgcn {

// Undirected simple graph in CSR form. Invariants (checked by validate()):
// both directions of every edge are stored, rows are sorted, no self-loops,
// no duplicate entries.
struct Graph {
  int num_nodes = 0;
  std::vector<int> row_offsets;  // size num_nodes + 1
  std::vector<int> col_indices;  // size row_offsets.back()

  // Builds the CSR structure from an edge list. Symmetrizes, de-duplicates
  // and drops self-loops; node ids must lie in [0, num_nodes).
  static Graph from_edges(int num_nodes,
                          const std::vector<std::pair<int, int>>& edges);

  int num_directed_entries() const { return static_cast<int>(col_indices.size()); }
  int num_undirected_edges() const { return num_directed_entries() / 2; }
  int degree(int v) const { return row_offsets[v + 1] - row_offsets[v]; }
  bool has_edge(int u, int v) const;

  // Throws ConfigError if any structural invariant is violated.
  void validate() const;
};

// Symmetrically normalized adjacency with self-loops: for the graph A this
// holds W = D^{-1/2} (A + I) D^{-1/2} where D is the degree matrix of A + I.
// Same CSR layout as Graph plus the diagonal entries and per-entry values.
struct NormAdj {
  int num_nodes = 0;
  std::vector<int> row_offsets;
  std::vector<int> col_indices;
  std::vector<double> values;
};

NormAdj normalize_adjacency(const Graph& g);

// Disjoint node-id sets covering [0, num_nodes). Each vector is sorted.
struct SplitMasks {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;

  int total() const {
    return static_cast<int>(train.size() + val.size() + test.size());
  }
  void validate(int num_nodes) const;
};

// Class-balanced random split. Per class: round(train_fraction * class_size)
// training nodes but at least 1, then the same rule for validation capped by
// what is left; everything else is test. Sampling order is a seeded shuffle
// of each class's node list, so the split depends only on (labels, seed).
SplitMasks make_splits(const std::vector<int>& labels, double train_fraction,
                       double val_fraction, std::uint64_t seed);

struct Dataset {
  Graph graph;
  Mat features;             // num_nodes x feature_dim
  std::vector<int> labels;  // values in [0, num_classes)
  int num_classes = 0;
  SplitMasks splits;

  int num_nodes() const { return graph.num_nodes; }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  void validate() const;
};

// L1-normalizes every feature row in place; all-zero rows are left unchanged.
void row_normalize_features(Dataset& ds);

struct SbmParams {
  std::vector<int> block_sizes;
  double p_in = 0.1;
  double p_out = 0.01;
  int feature_dim = 6;
  double feature_shift = 1.0;
  std::uint64_t seed = 0;
};

// Stochastic block model with Gaussian class features: nodes of class c get
// N(0, I) features shifted by feature_shift along axis (c mod feature_dim).
// Splits are drawn with make_splits(labels, 0.025, 0.025, seed).
Dataset generate_sbm(const SbmParams& params);

}  // namespace mgcn

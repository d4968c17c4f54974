#include "mgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mgcn/errors.hpp"
#include "mgcn/rng.hpp"

namespace mgcn {

Graph Graph::from_edges(int num_nodes,
                        const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::pair<int, int>> dir;
  dir.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      throw ConfigError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                        ") references a node outside [0, " +
                        std::to_string(num_nodes) + ")");
    }
    if (u == v) continue;  // self-loops are only added during normalization
    dir.emplace_back(u, v);
    dir.emplace_back(v, u);
  }
  std::sort(dir.begin(), dir.end());
  dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

  Graph g;
  g.num_nodes = num_nodes;
  g.row_offsets.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  g.col_indices.reserve(dir.size());
  for (const auto& [u, v] : dir) {
    ++g.row_offsets[static_cast<std::size_t>(u) + 1];
    g.col_indices.push_back(v);
  }
  for (int i = 0; i < num_nodes; ++i) g.row_offsets[i + 1] += g.row_offsets[i];
  return g;
}

bool Graph::has_edge(int u, int v) const {
  auto first = col_indices.begin() + row_offsets[u];
  auto last = col_indices.begin() + row_offsets[u + 1];
  return std::binary_search(first, last, v);
}

void Graph::validate() const {
  if (num_nodes < 0) throw ConfigError("negative node count");
  if (row_offsets.size() != static_cast<std::size_t>(num_nodes) + 1 ||
      row_offsets.front() != 0 ||
      row_offsets.back() != static_cast<int>(col_indices.size())) {
    throw ConfigError("inconsistent CSR offsets");
  }
  for (int i = 0; i < num_nodes; ++i) {
    if (row_offsets[i] > row_offsets[i + 1]) {
      throw ConfigError("CSR offsets not monotone");
    }
    for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      int j = col_indices[k];
      if (j < 0 || j >= num_nodes) throw ConfigError("column index out of range");
      if (j == i) throw ConfigError("self-loop stored in adjacency");
      if (k > row_offsets[i] && col_indices[k - 1] >= j) {
        throw ConfigError("row not strictly sorted (duplicate or disorder)");
      }
      if (!has_edge(j, i)) throw ConfigError("edge set not symmetric");
    }
  }
}

NormAdj normalize_adjacency(const Graph& g) {
  NormAdj a;
  a.num_nodes = g.num_nodes;
  a.row_offsets.assign(static_cast<std::size_t>(g.num_nodes) + 1, 0);
  a.col_indices.reserve(g.col_indices.size() + g.num_nodes);
  a.values.reserve(g.col_indices.size() + g.num_nodes);

  std::vector<double> inv_sqrt_deg(g.num_nodes);
  for (int i = 0; i < g.num_nodes; ++i) {
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));
  }

  for (int i = 0; i < g.num_nodes; ++i) {
    int begin = g.row_offsets[i];
    int end = g.row_offsets[i + 1];
    bool placed_diag = false;
    auto push = [&](int j) {
      a.col_indices.push_back(j);
      a.values.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    };
    for (int k = begin; k < end; ++k) {
      int j = g.col_indices[k];
      if (!placed_diag && j > i) {
        push(i);
        placed_diag = true;
      }
      push(j);
    }
    if (!placed_diag) push(i);
    a.row_offsets[i + 1] = static_cast<int>(a.col_indices.size());
  }
  return a;
}

void SplitMasks::validate(int num_nodes) const {
  std::vector<char> seen(num_nodes, 0);
  auto mark = [&](const std::vector<int>& ids, const char* which) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      int v = ids[k];
      if (v < 0 || v >= num_nodes) {
        throw ConfigError(std::string(which) + " mask id out of range");
      }
      if (k > 0 && ids[k - 1] >= v) {
        throw ConfigError(std::string(which) + " mask not sorted/unique");
      }
      if (seen[v]) throw ConfigError("split masks overlap at node " + std::to_string(v));
      seen[v] = 1;
    }
  };
  mark(train, "train");
  mark(val, "val");
  mark(test, "test");
  for (int v = 0; v < num_nodes; ++v) {
    if (!seen[v]) throw ConfigError("node " + std::to_string(v) + " missing from splits");
  }
}

SplitMasks make_splits(const std::vector<int>& labels, double train_fraction,
                       double val_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0) || !(val_fraction > 0.0) ||
      !(train_fraction + val_fraction < 1.0)) {
    throw ConfigError("split fractions must be positive and sum to < 1");
  }
  int num_classes = 0;
  for (int y : labels) {
    if (y < 0) throw ConfigError("negative label");
    num_classes = std::max(num_classes, y + 1);
  }
  if (num_classes == 0) throw ConfigError("empty label array");

  std::vector<std::vector<int>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i]].push_back(static_cast<int>(i));
  }

  Rng rng(seed);
  SplitMasks s;
  for (int c = 0; c < num_classes; ++c) {
    auto& ids = by_class[c];
    auto size = static_cast<long long>(ids.size());
    if (size == 0) {
      throw ConfigError("class " + std::to_string(c) +
                        " has no nodes; cannot allocate a training sample");
    }
    rng.shuffle(ids);
    // Proportional allocation, but never starve a class of its train node;
    // validation gets the same floor when any nodes remain.
    long long n_train = std::llround(train_fraction * static_cast<double>(size));
    n_train = std::clamp(n_train, 1LL, size);
    long long remaining = size - n_train;
    long long n_val = std::llround(val_fraction * static_cast<double>(size));
    n_val = remaining > 0 ? std::clamp(n_val, 1LL, remaining) : 0;
    for (long long k = 0; k < size; ++k) {
      if (k < n_train) {
        s.train.push_back(ids[k]);
      } else if (k < n_train + n_val) {
        s.val.push_back(ids[k]);
      } else {
        s.test.push_back(ids[k]);
      }
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void Dataset::validate() const {
  graph.validate();
  if (features.rows() != graph.num_nodes) {
    throw ConfigError("feature row count " + std::to_string(features.rows()) +
                      " does not match node count " +
                      std::to_string(graph.num_nodes));
  }
  if (static_cast<int>(labels.size()) != graph.num_nodes) {
    throw ConfigError("label count " + std::to_string(labels.size()) +
                      " does not match node count " +
                      std::to_string(graph.num_nodes));
  }
  if (num_classes <= 0) throw ConfigError("non-positive class count");
  std::vector<int> class_counts(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw ConfigError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
    ++class_counts[y];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (class_counts[c] == 0) {
      throw ConfigError("class " + std::to_string(c) + " has no nodes");
    }
  }
  if (!features.allFinite()) throw ConfigError("non-finite feature entry");
  splits.validate(graph.num_nodes);
  std::vector<char> in_train(num_classes, 0);
  for (int v : splits.train) in_train[labels[v]] = 1;
  for (int c = 0; c < num_classes; ++c) {
    if (!in_train[c]) {
      throw ConfigError("class " + std::to_string(c) + " has no training node");
    }
  }
}

void row_normalize_features(Dataset& ds) {
  for (Index i = 0; i < ds.features.rows(); ++i) {
    double s = ds.features.row(i).cwiseAbs().sum();
    if (s > 0.0) ds.features.row(i) /= s;
  }
}

}  // namespace mgcn

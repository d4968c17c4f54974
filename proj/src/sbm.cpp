#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mgcn/errors.hpp"
#include "mgcn/graph.hpp"
#include "mgcn/rng.hpp"

namespace mgcn {

Dataset generate_sbm(const SbmParams& params) {
  if (params.block_sizes.empty()) throw ConfigError("no blocks specified");
  for (std::size_t b = 0; b < params.block_sizes.size(); ++b) {
    if (params.block_sizes[b] <= 0) {
      throw ConfigError("block " + std::to_string(b) + " is empty");
    }
  }
  if (!(params.p_out >= 0.0 && params.p_out < params.p_in && params.p_in <= 1.0)) {
    throw ConfigError("SBM probabilities must satisfy 0 <= p_out < p_in <= 1");
  }
  if (params.feature_dim <= 0) throw ConfigError("feature_dim must be positive");

  int num_nodes = std::accumulate(params.block_sizes.begin(),
                                  params.block_sizes.end(), 0);
  std::vector<int> labels;
  labels.reserve(num_nodes);
  for (std::size_t b = 0; b < params.block_sizes.size(); ++b) {
    labels.insert(labels.end(), params.block_sizes[b], static_cast<int>(b));
  }

  Rng rng(params.seed);
  // One uniform draw per node pair regardless of outcome keeps the stream
  // layout independent of the probabilities.
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < num_nodes; ++i) {
    for (int j = i + 1; j < num_nodes; ++j) {
      double p = labels[i] == labels[j] ? params.p_in : params.p_out;
      if (rng.uniform() < p) edges.emplace_back(i, j);
    }
  }

  Dataset ds;
  ds.graph = Graph::from_edges(num_nodes, edges);
  ds.features.resize(num_nodes, params.feature_dim);
  for (int i = 0; i < num_nodes; ++i) {
    for (int f = 0; f < params.feature_dim; ++f) {
      ds.features(i, f) = rng.normal();
    }
    ds.features(i, labels[i] % params.feature_dim) += params.feature_shift;
  }
  ds.labels = std::move(labels);
  ds.num_classes = static_cast<int>(params.block_sizes.size());
  ds.splits = make_splits(ds.labels, 0.025, 0.025, params.seed);
  ds.validate();
  return ds;
}

}  // namespace mgcn

#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>

#include "mgcn/dataset_io.hpp"
#include "mgcn/errors.hpp"
#include "mgcn/trainer.hpp"

namespace mgcn {

namespace {

std::ofstream open_output(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw ConfigError("write failure on " + p.string());
}

}  // namespace

Mat compute_embeddings(const EncoderParams& params, const EncoderConfig& cfg,
                       const Dataset& ds) {
  NormAdj adj = normalize_adjacency(ds.graph);
  FeatureCache cache = FeatureCache::build(ds.features);
  Rng unused(0);
  return encode_backbone(cache, adj, params, cfg, false, unused).data();
}

void export_similarity(const EncoderParams& params, const EncoderConfig& cfg,
                       const Dataset& ds, const std::filesystem::path& path) {
  Mat h = compute_embeddings(params, cfg, ds);
  for (Index i = 0; i < h.rows(); ++i) {
    double norm = h.row(i).norm();
    h.row(i) /= std::max(norm, kEpsNorm);
  }

  // Group nodes by label so same-class blocks are contiguous in the matrix.
  std::vector<int> order(ds.num_nodes());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return ds.labels[a] < ds.labels[b];
  });

  Mat sorted(h.rows(), h.cols());
  for (Index i = 0; i < h.rows(); ++i) sorted.row(i) = h.row(order[i]);
  Mat sim = sorted * sorted.transpose();

  auto out = open_output(path);
  std::string line;
  for (Index i = 0; i < sim.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < sim.cols(); ++j) {
      if (j) line += ',';
      line += format_double(sim(i, j));
    }
    line += '\n';
    out << line;
  }
  finish(out, path);

  std::filesystem::path label_path = path;
  label_path += ".labels";
  auto label_out = open_output(label_path);
  for (int v : order) label_out << v << ',' << ds.labels[v] << '\n';
  finish(label_out, label_path);
}

void export_embeddings(const EncoderParams& params, const EncoderConfig& cfg,
                       const Dataset& ds, const std::filesystem::path& path) {
  Mat h = compute_embeddings(params, cfg, ds);
  auto out = open_output(path);
  std::string line;
  for (Index i = 0; i < h.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < h.cols(); ++j) {
      line += format_double(h(i, j));
      line += ',';
    }
    line += std::to_string(ds.labels[i]);
    line += '\n';
    out << line;
  }
  finish(out, path);
}

}  // namespace mgcn

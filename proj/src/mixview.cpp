#include "mgcn/mixview.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "mgcn/errors.hpp"

namespace mgcn {

void BlockPermutation::validate(const SplitMasks& splits) const {
  int n = size();
  std::vector<char> seen(n, 0);
  for (int v : targets) {
    if (v < 0 || v >= n) throw ConfigError("permutation target out of range");
    if (seen[v]) throw ConfigError("permutation target repeated");
    seen[v] = 1;
  }
  std::vector<char> in_train(n, 0);
  for (int v : splits.train) in_train[v] = 1;
  for (int v : splits.train) {
    if (!in_train[targets[v]]) {
      throw ConfigError("permutation maps train node " + std::to_string(v) +
                        " outside the train set");
    }
  }
}

BlockPermutation sample_block_permutation(const SplitMasks& splits, Rng& rng) {
  int n = splits.total();
  std::vector<char> in_train(n, 0);
  for (int v : splits.train) in_train[v] = 1;
  std::vector<int> rest;
  rest.reserve(n - splits.train.size());
  for (int v = 0; v < n; ++v) {
    if (!in_train[v]) rest.push_back(v);
  }

  BlockPermutation pi;
  pi.targets.assign(n, -1);
  std::vector<int> shuffled = splits.train;
  rng.shuffle(shuffled);
  for (std::size_t k = 0; k < shuffled.size(); ++k) {
    pi.targets[splits.train[k]] = shuffled[k];
  }
  shuffled = rest;
  rng.shuffle(shuffled);
  for (std::size_t k = 0; k < shuffled.size(); ++k) {
    pi.targets[rest[k]] = shuffled[k];
  }
  return pi;
}

DiffValue mix_embeddings(const DiffValue& h, const BlockPermutation& pi,
                         double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("mix rate must lie in [0,1]");
  if (pi.size() != h.rows()) {
    throw ConfigError("permutation length " + std::to_string(pi.size()) +
                      " does not match row count " + std::to_string(h.rows()));
  }
  if (rate == 1.0) return h;  // the view is the embedding itself

  Mat out(h.rows(), h.cols());
  for (Index i = 0; i < h.rows(); ++i) {
    out.row(i) = rate * h.data().row(i) + (1.0 - rate) * h.data().row(pi.targets[i]);
  }
  return DiffValue::make_op(
      std::move(out), {h},
      [targets = pi.targets, rate](detail::Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Mat& g = p->ensure_grad();
        for (Index i = 0; i < self.grad.rows(); ++i) {
          g.row(i) += rate * self.grad.row(i);
          g.row(targets[i]) += (1.0 - rate) * self.grad.row(i);
        }
      });
}

Mat mix_labels(const Mat& y_train, const BlockPermutation& pi, double rate,
               const SplitMasks& splits) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("mix rate must lie in [0,1]");
  if (y_train.rows() != static_cast<Index>(splits.train.size())) {
    throw ConfigError("label row count does not match train set size");
  }
  if (rate == 1.0) return y_train;

  std::vector<int> train_row(pi.size(), -1);
  for (std::size_t r = 0; r < splits.train.size(); ++r) {
    train_row[splits.train[r]] = static_cast<int>(r);
  }
  Mat out(y_train.rows(), y_train.cols());
  for (std::size_t r = 0; r < splits.train.size(); ++r) {
    int partner = pi.targets[splits.train[r]];
    int pr = train_row[partner];
    if (pr < 0) {
      throw ConfigError("permutation is not train-closed: node " +
                        std::to_string(splits.train[r]) + " mixes with " +
                        std::to_string(partner));
    }
    out.row(static_cast<Index>(r)) =
        rate * y_train.row(static_cast<Index>(r)) + (1.0 - rate) * y_train.row(pr);
  }
  return out;
}

DiffValue classification_loss(const DiffValue& pred_train, const Mat& y_mixed) {
  return cross_entropy(pred_train, y_mixed);
}

MixedView make_view(int view_id, const DiffValue& h, const Mat& y_train,
                    const SplitMasks& splits, double rate, Rng& rng,
                    bool with_labels) {
  MixedView view;
  view.view_id = view_id;
  view.rate = rate;
  view.permutation = sample_block_permutation(splits, rng);
  view.h_mixed = mix_embeddings(h, view.permutation, rate);
  if (with_labels) {
    view.y_mixed = mix_labels(y_train, view.permutation, rate, splits);
  }
  return view;
}

Mat one_hot_train_labels(const std::vector<int>& labels,
                         const SplitMasks& splits, int num_classes) {
  Mat y = Mat::Zero(static_cast<Index>(splits.train.size()), num_classes);
  for (std::size_t r = 0; r < splits.train.size(); ++r) {
    int label = labels[splits.train[r]];
    if (label < 0 || label >= num_classes) {
      throw ConfigError("label out of range for one-hot encoding");
    }
    y(static_cast<Index>(r), label) = 1.0;
  }
  return y;
}

}  // namespace mgcn

#pragma once

#include "mgcn/graph.hpp"
#include "mgcn/rng.hpp"
#include "mgcn/tensor.hpp"

namespace mgcn {

// A bijection on [0, N) that maps the train set onto itself and its
// complement onto itself, so every mixing partner of a labeled node is
// labeled too.
struct BlockPermutation {
  std::vector<int> targets;  // node i mixes with targets[i]

  int size() const { return static_cast<int>(targets.size()); }
  void validate(const SplitMasks& splits) const;  // bijection + train-closure
};

// Independent uniform shuffles of the train block and of the rest.
BlockPermutation sample_block_permutation(const SplitMasks& splits, Rng& rng);

// Row i of the result is rate·H_i + (1−rate)·H_{targets[i]}. At rate 1 this
// returns H itself (same node, no arithmetic). Differentiable in H.
DiffValue mix_embeddings(const DiffValue& h, const BlockPermutation& pi,
                         double rate);

// Convex label combination over train rows. y_train rows follow the sorted
// order of splits.train; the result keeps that order, with row i mixed
// against the row of targets[i]. At rate 1 returns y_train unchanged.
Mat mix_labels(const Mat& y_train, const BlockPermutation& pi, double rate,
               const SplitMasks& splits);

// Loss of a predicted train-row distribution against mixed labels; the
// cross-entropy applied to the second view's classifier output.
DiffValue classification_loss(const DiffValue& pred_train, const Mat& y_mixed);

// One interpolation-perturbed view: permutation, mixed embeddings and (for
// the view that feeds the classifier) mixed labels.
struct MixedView {
  int view_id = 0;
  BlockPermutation permutation;
  DiffValue h_mixed;
  Mat y_mixed;  // empty unless built with labels
  double rate = 1.0;
};

MixedView make_view(int view_id, const DiffValue& h, const Mat& y_train,
                    const SplitMasks& splits, double rate, Rng& rng,
                    bool with_labels);

// One-hot rows for the train nodes in sorted-id order.
Mat one_hot_train_labels(const std::vector<int>& labels,
                         const SplitMasks& splits, int num_classes);

}  // namespace mgcn

#pragma once

#include "mgcn/rng.hpp"
#include "mgcn/tensor.hpp"

namespace mgcn {

// Cross-view cosine similarity matrix: Z_ij is the cosine of view-1 row i
// against view-2 row j. Generally non-symmetric.
struct CorrelationMatrix {
  DiffValue z;  // B×B
};

CorrelationMatrix correlation_matrix(const DiffValue& h1, const DiffValue& h2);

enum class CorrelationLossForm {
  // (1/B)·Σ_i (Z_ii − 1)²  +  (1/(B²−B))·Σ_{i≠j} Z_ij²  — the default;
  // balanced normalizers keep the off-diagonal mass from drowning the
  // diagonal targets. B = 1 uses the diagonal term alone.
  kDecomposed,
  // (1/B²)·Σ_ij (Z_ij − δ_ij)² — the plain mean-square alternative, kept
  // behind this switch for comparison.
  kMeanSquare,
};

// Loss on an explicitly materialized correlation matrix.
DiffValue correlation_reduction_loss(
    const CorrelationMatrix& z,
    CorrelationLossForm form = CorrelationLossForm::kDecomposed);

// Same loss computed directly from the two views without forming the B×B
// matrix: norms, row dots and d×d Gram products only. Matches the explicit
// route to roundoff; this is the path the trainer uses.
DiffValue correlation_reduction_loss(
    const DiffValue& h1, const DiffValue& h2,
    CorrelationLossForm form = CorrelationLossForm::kDecomposed);

// Node ids to correlate this epoch: all of [0, N) when batch_size is zero or
// N, otherwise a fresh uniform sample without replacement (sorted).
std::vector<int> correlation_batch(int num_nodes, int batch_size, Rng& rng);

}  // namespace mgcn

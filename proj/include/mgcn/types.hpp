#pragma once

#include <Eigen/Core>

namespace mgcn {

// Dense matrices everywhere are double precision and row-major so that a row
// (one node's feature/embedding vector) is contiguous.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace mgcn

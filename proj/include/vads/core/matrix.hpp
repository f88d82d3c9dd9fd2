#pragma once

#include <Eigen/Dense>

namespace vads {

// Row-major so that a matrix row is one sample, matching the on-disk layout.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

}  // namespace vads

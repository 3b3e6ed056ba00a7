#pragma once

#include <Eigen/Dense>

namespace fignet::nn {

// All batched activations are row-major matrices. Feature maps are stored
// channels-last as (batch * height * width) x channels; fully connected
// activations as batch x features.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using MatD = Mat<double>;

}  // namespace fignet::nn

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fignet/nn/mat.hpp"
#include "fignet/rng.hpp"

namespace fignet::nn {

// One learnable tensor with its gradient accumulator. Names are
// slash-separated paths ("spectral/fc1/w") so checkpoints and the freezing
// logic can address partitions by prefix.
template <typename T>
struct Param {
    std::string name;
    Mat<T> w;
    Mat<T> g;

    void resize(Eigen::Index rows, Eigen::Index cols) {
        w.setZero(rows, cols);
        g.setZero(rows, cols);
    }
    void zero_grad() { g.setZero(); }
    Eigen::Index count() const { return w.size(); }
};

template <typename T>
using ParamRefs = std::vector<Param<T>*>;

template <typename T>
void fill_normal(Mat<T>& m, Rng& rng, double stddev) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = static_cast<T>(rng.normal() * stddev);
}

template <typename T>
void he_init(Param<T>& p, Rng& rng, Eigen::Index fan_in) {
    fill_normal(p.w, rng, std::sqrt(2.0 / static_cast<double>(fan_in)));
}

template <typename T>
void glorot_init(Param<T>& p, Rng& rng, Eigen::Index fan_in, Eigen::Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < p.w.rows(); ++i)
        for (Eigen::Index j = 0; j < p.w.cols(); ++j)
            p.w(i, j) = static_cast<T>(rng.uniform(-limit, limit));
}

}  // namespace fignet::nn

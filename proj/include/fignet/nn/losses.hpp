#pragma once

#include <cmath>
#include <vector>

#include "fignet/nn/mat.hpp"

namespace fignet::nn {

// Mean cross entropy of per-step class distributions against integer
// targets, averaged over batch * steps. Absent-slot classes are ordinary
// classes. `dprobs` is filled with the matching analytic gradient.
template <typename T>
double sequence_cross_entropy(const std::vector<Mat<T>>& probs,
                              const std::vector<std::vector<int>>& targets,
                              std::vector<Mat<T>>* dprobs = nullptr) {
    const auto steps = probs.size();
    const Eigen::Index n = probs.empty() ? 0 : probs[0].rows();
    const double denom = static_cast<double>(steps) * static_cast<double>(n);
    const T eps = static_cast<T>(1e-12);
    if (dprobs) dprobs->assign(steps, {});
    double loss = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        if (dprobs) (*dprobs)[t] = Mat<T>::Zero(n, probs[t].cols());
        for (Eigen::Index r = 0; r < n; ++r) {
            const int y = targets[static_cast<std::size_t>(r)][t];
            const T p = std::max(probs[t](r, y), eps);
            loss -= std::log(static_cast<double>(p));
            if (dprobs) (*dprobs)[t](r, y) = static_cast<T>(-1.0 / (static_cast<double>(p) * denom));
        }
    }
    return loss / denom;
}

// Numerically stable sigmoid cross entropy on logits; mean over the batch.
// `dlogits` gets (sigmoid(z) - y) / n.
template <typename T>
double sigmoid_cross_entropy(const Mat<T>& logits, const std::vector<float>& labels,
                             Mat<T>* dlogits = nullptr) {
    const Eigen::Index n = logits.rows();
    if (dlogits) dlogits->setZero(n, 1);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const double z = static_cast<double>(logits(r, 0));
        const double y = labels[static_cast<std::size_t>(r)];
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        if (dlogits) {
            const double s = 1.0 / (1.0 + std::exp(-z));
            (*dlogits)(r, 0) = static_cast<T>((s - y) / static_cast<double>(n));
        }
    }
    return loss / static_cast<double>(n);
}

template <typename T>
Mat<T> sigmoid(const Mat<T>& z) {
    return (T(1) / (T(1) + (-z.array()).exp())).matrix();
}

}  // namespace fignet::nn

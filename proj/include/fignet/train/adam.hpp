#pragma once

#include <cmath>
#include <vector>

#include "fignet/nn/param.hpp"

namespace fignet::train {

// Adam over a fixed list of parameters. State is positional, so the list
// must not change between steps.
class Adam {
public:
    explicit Adam(nn::ParamRefs<float> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (const auto* p : params_) {
            m_.emplace_back(nn::MatF::Zero(p->w.rows(), p->w.cols()));
            v_.emplace_back(nn::MatF::Zero(p->w.rows(), p->w.cols()));
        }
    }

    void step() {
        ++t_;
        const float bc1 = static_cast<float>(1.0 - std::pow(beta1_, t_));
        const float bc2 = static_cast<float>(1.0 - std::pow(beta2_, t_));
        const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
        const float lr = static_cast<float>(lr_), eps = static_cast<float>(eps_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            m_[i] = b1 * m_[i] + (1.0f - b1) * p.g;
            v_[i] = (b2 * v_[i].array() + (1.0f - b2) * p.g.array().square()).matrix();
            p.w.array() -=
                lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps);
        }
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }
    void set_lr(double lr) { lr_ = lr; }

private:
    nn::ParamRefs<float> params_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<nn::MatF> m_, v_;
};

}  // namespace fignet::train

#pragma once

#include <string>
#include <vector>

#include "fignet/nn/layers.hpp"
#include "fignet/nn/lstm.hpp"

namespace fignet::nn {

// How a step's input is derived from the previous step's output
// distribution. prob_feed passes the distribution itself, keeping the chain
// differentiable across steps; the sampling variants feed a one-hot vector
// and cut that path.
enum class FeedMode { prob_feed, sample_train, argmax_eval };

// Recurrent slot decoder: a stacked LSTM unrolled for a fixed number of
// steps, emitting one class distribution per slot,
//   h1_t, c1_t = LSTM1(x_t, h1_{t-1}, c1_{t-1})
//   h2_t, c2_t = LSTM2([h1_t, c1_t], h2_{t-1}, c2_{t-1})
//   o_t        = softmax(relu(W h2_t + b)).
// The step-0 input is a learned class-width parameter. Layer 1 starts from
// two affine images of the input representation; layer 2 starts at zero
// unless init_both is set.
template <typename T>
struct SlotDecoder {
    int steps = 0, classes = 0, rep_dim = 0, hidden = 0, layers = 2;
    bool init_both = false;

    Linear<T> init_h1, init_c1, init_h2, init_c2;
    Param<T> first_input;  // 1 x classes
    LstmCell<T> lstm1, lstm2;
    Linear<T> head;

    void configure(const std::string& prefix, int steps_, int classes_, int rep_dim_, int hidden_,
                   int layers_, bool init_both_) {
        if (steps_ < 1) throw ConfigError("decoder needs at least one step");
        if (layers_ != 1 && layers_ != 2) throw ConfigError("decoder layers must be 1 or 2");
        steps = steps_;
        classes = classes_;
        rep_dim = rep_dim_;
        hidden = hidden_;
        layers = layers_;
        init_both = init_both_;
        init_h1.configure(prefix + "/init_h1", rep_dim, hidden);
        init_c1.configure(prefix + "/init_c1", rep_dim, hidden);
        if (init_both && layers == 2) {
            init_h2.configure(prefix + "/init_h2", rep_dim, hidden);
            init_c2.configure(prefix + "/init_c2", rep_dim, hidden);
        }
        first_input.name = prefix + "/first_input";
        first_input.resize(1, classes);
        lstm1.configure(prefix + "/lstm1", classes, hidden);
        if (layers == 2) lstm2.configure(prefix + "/lstm2", 2 * hidden, hidden);
        head.configure(prefix + "/head", hidden, classes);
    }

    void init(Rng& rng) {
        glorot_init(init_h1.w, rng, rep_dim, hidden);
        glorot_init(init_c1.w, rng, rep_dim, hidden);
        if (init_both && layers == 2) {
            glorot_init(init_h2.w, rng, rep_dim, hidden);
            glorot_init(init_c2.w, rng, rep_dim, hidden);
        }
        fill_normal(first_input.w, rng, 0.01);
        lstm1.init(rng);
        if (layers == 2) lstm2.init(rng);
        // small head: steps start near the uniform distribution, but the
        // relu ahead of the softmax still passes gradient (an exactly zero
        // head is a dead point of relu)
        fill_normal(head.w.w, rng, 0.01);
    }

    void collect(ParamRefs<T>& out) {
        init_h1.collect(out);
        init_c1.collect(out);
        if (init_both && layers == 2) {
            init_h2.collect(out);
            init_c2.collect(out);
        }
        out.push_back(&first_input);
        lstm1.collect(out);
        if (layers == 2) lstm2.collect(out);
        head.collect(out);
    }

    struct StepCache {
        Mat<T> x1;
        typename LstmCell<T>::Step s1, s2;
        Mat<T> x2;
        Mat<T> zr, o;
    };
    struct Cache {
        Mat<T> rep, h1_init, c1_init, h2_init, c2_init;
        std::vector<StepCache> step;
    };
    Cache cache;

    static Mat<T> one_hot_rows(const Mat<T>& probs, FeedMode mode, Rng* rng) {
        Mat<T> x = Mat<T>::Zero(probs.rows(), probs.cols());
        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
            Eigen::Index pick = 0;
            if (mode == FeedMode::argmax_eval) {
                probs.row(r).maxCoeff(&pick);
            } else {
                const double u = rng->uniform();
                double acc = 0.0;
                pick = probs.cols() - 1;
                for (Eigen::Index c = 0; c < probs.cols(); ++c) {
                    acc += static_cast<double>(probs(r, c));
                    if (u < acc) {
                        pick = c;
                        break;
                    }
                }
            }
            x(r, pick) = T(1);
        }
        return x;
    }

    std::vector<Mat<T>> forward(const Mat<T>& rep, FeedMode mode, Rng* rng = nullptr) {
        if (rep.cols() != rep_dim) throw ShapeError("decoder representation width mismatch");
        if (mode == FeedMode::sample_train && rng == nullptr)
            throw ConfigError("sample_train needs an rng");
        const Eigen::Index n = rep.rows();
        cache.rep = rep;
        cache.h1_init = init_h1.forward(rep);
        cache.c1_init = init_c1.forward(rep);
        if (layers == 2) {
            cache.h2_init = init_both ? init_h2.forward(rep) : Mat<T>::Zero(n, hidden);
            cache.c2_init = init_both ? init_c2.forward(rep) : Mat<T>::Zero(n, hidden);
        }
        cache.step.assign(static_cast<std::size_t>(steps), {});

        std::vector<Mat<T>> probs(static_cast<std::size_t>(steps));
        for (int t = 0; t < steps; ++t) {
            auto& sc = cache.step[static_cast<std::size_t>(t)];
            if (t == 0) {
                sc.x1 = first_input.w.replicate(n, 1);
            } else {
                const Mat<T>& prev = probs[static_cast<std::size_t>(t) - 1];
                sc.x1 = mode == FeedMode::prob_feed ? prev : one_hot_rows(prev, mode, rng);
            }
            const Mat<T>& h1p = t == 0 ? cache.h1_init : cache.step[static_cast<std::size_t>(t) - 1].s1.h;
            const Mat<T>& c1p = t == 0 ? cache.c1_init : cache.step[static_cast<std::size_t>(t) - 1].s1.c;
            sc.s1 = lstm1.step(sc.x1, h1p, c1p);

            const Mat<T>* hv = &sc.s1.h;
            if (layers == 2) {
                sc.x2.resize(n, 2 * hidden);
                sc.x2 << sc.s1.h, sc.s1.c;
                const Mat<T>& h2p =
                    t == 0 ? cache.h2_init : cache.step[static_cast<std::size_t>(t) - 1].s2.h;
                const Mat<T>& c2p =
                    t == 0 ? cache.c2_init : cache.step[static_cast<std::size_t>(t) - 1].s2.c;
                sc.s2 = lstm2.step(sc.x2, h2p, c2p);
                hv = &sc.s2.h;
            }
            sc.zr = relu(head.forward(*hv));
            sc.o = softmax_rows(sc.zr);
            if (!sc.o.allFinite())
                throw NumericError("decoder step " + std::to_string(t) + ": non-finite activation");
            probs[static_cast<std::size_t>(t)] = sc.o;
        }
        return probs;
    }

    // Returns the gradient with respect to the input representation.
    Mat<T> backward(const std::vector<Mat<T>>& dprobs, FeedMode mode) {
        const Eigen::Index n = cache.rep.rows();
        Mat<T> dh1_next = Mat<T>::Zero(n, hidden), dc1_next = Mat<T>::Zero(n, hidden);
        Mat<T> dh2_next = Mat<T>::Zero(n, hidden), dc2_next = Mat<T>::Zero(n, hidden);
        Mat<T> d_from_next_input;  // gradient into o_t via the step t+1 input

        for (int t = steps - 1; t >= 0; --t) {
            auto& sc = cache.step[static_cast<std::size_t>(t)];
            Mat<T> dout = dprobs[static_cast<std::size_t>(t)];
            if (d_from_next_input.size() > 0) dout += d_from_next_input;

            const Mat<T> dzr = softmax_rows_backward(sc.o, dout);
            const Mat<T> dz = relu_backward(sc.zr, dzr);

            Mat<T> dh1, dc1_extra = Mat<T>::Zero(n, hidden);
            if (layers == 2) {
                const Mat<T> dhv = head.backward(sc.s2.h, dz);
                const Mat<T> dh2 = dhv + dh2_next;
                const Mat<T>& h2p =
                    t == 0 ? cache.h2_init : cache.step[static_cast<std::size_t>(t) - 1].s2.h;
                const Mat<T>& c2p =
                    t == 0 ? cache.c2_init : cache.step[static_cast<std::size_t>(t) - 1].s2.c;
                auto g2 = lstm2.backward(sc.x2, h2p, c2p, sc.s2, dh2, dc2_next);
                dh2_next = std::move(g2.dh_prev);
                dc2_next = std::move(g2.dc_prev);
                dh1 = g2.dx.leftCols(hidden) + dh1_next;
                dc1_extra = g2.dx.rightCols(hidden);
            } else {
                dh1 = head.backward(sc.s1.h, dz) + dh1_next;
            }
            const Mat<T>& h1p = t == 0 ? cache.h1_init : cache.step[static_cast<std::size_t>(t) - 1].s1.h;
            const Mat<T>& c1p = t == 0 ? cache.c1_init : cache.step[static_cast<std::size_t>(t) - 1].s1.c;
            auto g1 = lstm1.backward(sc.x1, h1p, c1p, sc.s1, dh1, dc1_next + dc1_extra);
            dh1_next = std::move(g1.dh_prev);
            dc1_next = std::move(g1.dc_prev);

            if (t == 0) {
                first_input.g.row(0) += g1.dx.colwise().sum();
            } else if (mode == FeedMode::prob_feed) {
                d_from_next_input = std::move(g1.dx);
            } else {
                d_from_next_input.resize(0, 0);
                d_from_next_input.setZero(n, classes);
            }
        }

        Mat<T> d_rep = init_h1.backward(cache.rep, dh1_next);
        d_rep += init_c1.backward(cache.rep, dc1_next);
        if (init_both && layers == 2) {
            d_rep += init_h2.backward(cache.rep, dh2_next);
            d_rep += init_c2.backward(cache.rep, dc2_next);
        }
        return d_rep;
    }
};

}  // namespace fignet::nn

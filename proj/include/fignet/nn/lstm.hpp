#pragma once

#include "fignet/common.hpp"
#include "fignet/nn/param.hpp"

namespace fignet::nn {

// Single LSTM cell operating on a whole batch per step. Gate order in the
// packed matrices is [input, forget, candidate, output]. The forget gate
// bias starts at 1.
template <typename T>
struct LstmCell {
    Param<T> wx;  // in x 4H
    Param<T> wh;  // H x 4H
    Param<T> b;   // 1 x 4H
    int hidden = 0, input = 0;

    void configure(const std::string& prefix, int in, int h) {
        input = in;
        hidden = h;
        wx.name = prefix + "/wx";
        wx.resize(in, 4 * h);
        wh.name = prefix + "/wh";
        wh.resize(h, 4 * h);
        b.name = prefix + "/b";
        b.resize(1, 4 * h);
    }
    void init(Rng& rng) {
        glorot_init(wx, rng, input, 4 * hidden);
        glorot_init(wh, rng, hidden, 4 * hidden);
        b.w.setZero();
        b.w.row(0).segment(hidden, hidden).setOnes();  // forget gate
    }
    void collect(ParamRefs<T>& out) {
        out.push_back(&wx);
        out.push_back(&wh);
        out.push_back(&b);
    }

    struct Step {
        Mat<T> i, f, g, o;  // post-activation gates
        Mat<T> c;           // new cell state
        Mat<T> tanh_c;
        Mat<T> h;           // new hidden state
    };

    Step step(const Mat<T>& x, const Mat<T>& h_prev, const Mat<T>& c_prev) const {
        if (x.cols() != input) throw ShapeError("lstm input width mismatch");
        Mat<T> a = x * wx.w;
        a.noalias() += h_prev * wh.w;
        a.rowwise() += b.w.row(0);
        Step s;
        const auto seg = [&](int k) { return a.middleCols(k * hidden, hidden); };
        s.i = (T(1) / (T(1) + (-seg(0).array()).exp())).matrix();
        s.f = (T(1) / (T(1) + (-seg(1).array()).exp())).matrix();
        s.g = seg(2).array().tanh().matrix();
        s.o = (T(1) / (T(1) + (-seg(3).array()).exp())).matrix();
        s.c = (s.f.array() * c_prev.array() + s.i.array() * s.g.array()).matrix();
        s.tanh_c = s.c.array().tanh().matrix();
        s.h = (s.o.array() * s.tanh_c.array()).matrix();
        return s;
    }

    struct StepGrads {
        Mat<T> dx, dh_prev, dc_prev;
    };

    StepGrads backward(const Mat<T>& x, const Mat<T>& h_prev, const Mat<T>& c_prev, const Step& s,
                       const Mat<T>& dh, const Mat<T>& dc_in) {
        const Mat<T> dc =
            (dc_in.array() + dh.array() * s.o.array() * (T(1) - s.tanh_c.array().square())).matrix();
        Mat<T> da(dh.rows(), 4 * hidden);
        // d pre-activations, same gate order as forward
        da.middleCols(0, hidden) =
            (dc.array() * s.g.array() * s.i.array() * (T(1) - s.i.array())).matrix();
        da.middleCols(hidden, hidden) =
            (dc.array() * c_prev.array() * s.f.array() * (T(1) - s.f.array())).matrix();
        da.middleCols(2 * hidden, hidden) =
            (dc.array() * s.i.array() * (T(1) - s.g.array().square())).matrix();
        da.middleCols(3 * hidden, hidden) =
            (dh.array() * s.tanh_c.array() * s.o.array() * (T(1) - s.o.array())).matrix();

        wx.g.noalias() += x.transpose() * da;
        wh.g.noalias() += h_prev.transpose() * da;
        b.g.row(0) += da.colwise().sum();

        StepGrads grads;
        grads.dx = da * wx.w.transpose();
        grads.dh_prev = da * wh.w.transpose();
        grads.dc_prev = (dc.array() * s.f.array()).matrix();
        return grads;
    }
};

}  // namespace fignet::nn

#pragma once

#include <vector>

#include "fignet/common.hpp"
#include "fignet/nn/param.hpp"

namespace fignet::nn {

// Layers cache nothing they can get back from the caller: backward receives
// the same input that forward saw. Layer-private state (pool indices, conv
// patches) lives in the layer between a forward and its matching backward.

template <typename T>
Mat<T> relu(const Mat<T>& x) {
    return x.cwiseMax(static_cast<T>(0));
}

// dx given the relu *output* y
template <typename T>
Mat<T> relu_backward(const Mat<T>& y, const Mat<T>& dy) {
    return ((y.array() > static_cast<T>(0)).template cast<T>() * dy.array()).matrix();
}

template <typename T>
Mat<T> softmax_rows(const Mat<T>& x) {
    Mat<T> y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const T m = x.row(r).maxCoeff();
        y.row(r) = (x.row(r).array() - m).exp();
        y.row(r) /= y.row(r).sum();
    }
    return y;
}

// dx for y = softmax_rows(x)
template <typename T>
Mat<T> softmax_rows_backward(const Mat<T>& y, const Mat<T>& dy) {
    Mat<T> dx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const T dot = y.row(r).dot(dy.row(r));
        dx.row(r) = y.row(r).array() * (dy.row(r).array() - dot);
    }
    return dx;
}

template <typename T>
struct Linear {
    Param<T> w;  // in x out
    Param<T> b;  // 1 x out
    bool bias = true;

    void configure(const std::string& prefix, Eigen::Index in, Eigen::Index out, bool use_bias = true) {
        bias = use_bias;
        w.name = prefix + "/w";
        w.resize(in, out);
        if (bias) {
            b.name = prefix + "/b";
            b.resize(1, out);
        }
    }
    void collect(ParamRefs<T>& out) {
        out.push_back(&w);
        if (bias) out.push_back(&b);
    }

    Mat<T> forward(const Mat<T>& x) const {
        Mat<T> y = x * w.w;
        if (bias) y.rowwise() += b.w.row(0);
        return y;
    }
    Mat<T> backward(const Mat<T>& x, const Mat<T>& dy) {
        w.g.noalias() += x.transpose() * dy;
        if (bias) b.g.row(0) += dy.colwise().sum();
        return dy * w.w.transpose();
    }
    // gradient accumulation without producing dx (first layers)
    void backward_params_only(const Mat<T>& x, const Mat<T>& dy) {
        w.g.noalias() += x.transpose() * dy;
        if (bias) b.g.row(0) += dy.colwise().sum();
    }
};

// 3x3 convolution on channels-last maps, zero padded to preserve (or stride
// down) the spatial grid. Activations are (batch*h*w) x channels.
template <typename T>
struct Conv3x3 {
    Param<T> w;  // (9*in) x out
    Param<T> b;  // 1 x out
    int in_ch = 0, out_ch = 0, stride = 1;
    Mat<T> patches;  // cached between forward and backward

    void configure(const std::string& prefix, int in, int out, int stride_) {
        in_ch = in;
        out_ch = out;
        stride = stride_;
        w.name = prefix + "/w";
        w.resize(9 * in, out);
        b.name = prefix + "/b";
        b.resize(1, out);
    }
    void collect(ParamRefs<T>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
    static int out_dim(int hw, int stride) { return (hw - 1) / stride + 1; }

    Mat<T> forward(const Mat<T>& x, int batch, int h, int wdt) {
        if (x.cols() != in_ch || x.rows() != static_cast<Eigen::Index>(batch) * h * wdt)
            throw ShapeError("conv3x3 input mismatch");
        const int ho = out_dim(h, stride), wo = out_dim(wdt, stride);
        patches.setZero(static_cast<Eigen::Index>(batch) * ho * wo, 9 * in_ch);
        for (int bi = 0; bi < batch; ++bi) {
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) {
                    const Eigen::Index row = (static_cast<Eigen::Index>(bi) * ho + oy) * wo + ox;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = oy * stride + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = ox * stride + kx - 1;
                            if (ix < 0 || ix >= wdt) continue;
                            const Eigen::Index src = (static_cast<Eigen::Index>(bi) * h + iy) * wdt + ix;
                            patches.block(row, (ky * 3 + kx) * in_ch, 1, in_ch) = x.row(src);
                        }
                    }
                }
            }
        }
        Mat<T> y = patches * w.w;
        y.rowwise() += b.w.row(0);
        return y;
    }

    // dx is skipped when the input needs no gradient (images)
    Mat<T> backward(const Mat<T>& dy, int batch, int h, int wdt, bool need_dx) {
        w.g.noalias() += patches.transpose() * dy;
        b.g.row(0) += dy.colwise().sum();
        if (!need_dx) return {};
        const int ho = out_dim(h, stride), wo = out_dim(wdt, stride);
        Mat<T> dpatches = dy * w.w.transpose();
        Mat<T> dx = Mat<T>::Zero(static_cast<Eigen::Index>(batch) * h * wdt, in_ch);
        for (int bi = 0; bi < batch; ++bi) {
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) {
                    const Eigen::Index row = (static_cast<Eigen::Index>(bi) * ho + oy) * wo + ox;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = oy * stride + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = ox * stride + kx - 1;
                            if (ix < 0 || ix >= wdt) continue;
                            const Eigen::Index src = (static_cast<Eigen::Index>(bi) * h + iy) * wdt + ix;
                            dx.row(src) += dpatches.block(row, (ky * 3 + kx) * in_ch, 1, in_ch);
                        }
                    }
                }
            }
        }
        return dx;
    }
};

template <typename T>
struct MaxPool2x2 {
    std::vector<Eigen::Index> source;  // winning input row per (output row, channel)
    int channels = 0;

    Mat<T> forward(const Mat<T>& x, int batch, int h, int wdt) {
        if (h % 2 != 0 || wdt % 2 != 0) throw ShapeError("maxpool needs even spatial dims");
        channels = static_cast<int>(x.cols());
        const int ho = h / 2, wo = wdt / 2;
        Mat<T> y(static_cast<Eigen::Index>(batch) * ho * wo, channels);
        source.assign(static_cast<std::size_t>(y.rows()) * channels, 0);
        for (int bi = 0; bi < batch; ++bi) {
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) {
                    const Eigen::Index out_row = (static_cast<Eigen::Index>(bi) * ho + oy) * wo + ox;
                    const Eigen::Index r00 = (static_cast<Eigen::Index>(bi) * h + 2 * oy) * wdt + 2 * ox;
                    const Eigen::Index cand[4] = {r00, r00 + 1, r00 + wdt, r00 + wdt + 1};
                    for (int c = 0; c < channels; ++c) {
                        T best = x(cand[0], c);
                        Eigen::Index best_row = cand[0];
                        for (int q = 1; q < 4; ++q) {
                            if (x(cand[q], c) > best) {
                                best = x(cand[q], c);
                                best_row = cand[q];
                            }
                        }
                        y(out_row, c) = best;
                        source[static_cast<std::size_t>(out_row) * channels + c] = best_row;
                    }
                }
            }
        }
        return y;
    }
    Mat<T> backward(const Mat<T>& dy, int batch, int h, int wdt) const {
        Mat<T> dx = Mat<T>::Zero(static_cast<Eigen::Index>(batch) * h * wdt, channels);
        for (Eigen::Index r = 0; r < dy.rows(); ++r)
            for (int c = 0; c < channels; ++c)
                dx(source[static_cast<std::size_t>(r) * channels + c], c) += dy(r, c);
        return dx;
    }
};

// Per-channel multiplication of a feature map by a learned scalar.
template <typename T>
struct Scaling {
    Param<T> p;  // 1 x channels
    Param<T> b;  // optional per-channel bias
    bool bias = false;

    void configure(const std::string& prefix, int channels, bool use_bias) {
        bias = use_bias;
        p.name = prefix + "/p";
        p.resize(1, channels);
        p.w.setOnes();
        if (bias) {
            b.name = prefix + "/b";
            b.resize(1, channels);
        }
    }
    void collect(ParamRefs<T>& out) {
        out.push_back(&p);
        if (bias) out.push_back(&b);
    }
    Mat<T> forward(const Mat<T>& x) const {
        if (x.cols() != p.w.cols()) throw ShapeError("scaling parameter length != channels");
        Mat<T> y = (x.array().rowwise() * p.w.row(0).array()).matrix();
        if (bias) y.rowwise() += b.w.row(0);
        return y;
    }
    Mat<T> backward(const Mat<T>& x, const Mat<T>& dy) {
        p.g.row(0) += (x.array() * dy.array()).colwise().sum().matrix();
        if (bias) b.g.row(0) += dy.colwise().sum();
        return (dy.array().rowwise() * p.w.row(0).array()).matrix();
    }
};

// Learned full-extent spatial reductions: each of the M kernels spans the
// whole grid and contracts it per channel, so a (h*w) x C map becomes an
// M x C matrix (flattened kernel-major per sample).
template <typename T>
struct DepthwiseReduce {
    Param<T> k;  // M x (h*w)
    Param<T> b;  // optional 1 x M, added across channels
    bool bias = false;
    int kernels = 0, spatial = 0;

    void configure(const std::string& prefix, int m, int hw, bool use_bias) {
        kernels = m;
        spatial = hw;
        bias = use_bias;
        k.name = prefix + "/k";
        k.resize(m, hw);
        if (bias) {
            b.name = prefix + "/b";
            b.resize(1, m);
        }
    }
    void collect(ParamRefs<T>& out) {
        out.push_back(&k);
        if (bias) out.push_back(&b);
    }

    Mat<T> forward(const Mat<T>& x, int batch) const {
        const Eigen::Index c = x.cols();
        if (x.rows() != static_cast<Eigen::Index>(batch) * spatial)
            throw ShapeError("depthwise kernels must match the feature map extent");
        Mat<T> y(batch, static_cast<Eigen::Index>(kernels) * c);
        for (int bi = 0; bi < batch; ++bi) {
            Mat<T> o = k.w * x.middleRows(static_cast<Eigen::Index>(bi) * spatial, spatial);  // M x C
            if (bias) o.colwise() += b.w.row(0).transpose();
            Eigen::Map<Mat<T>>(y.row(bi).data(), kernels, c) = o;
        }
        return y;
    }
    Mat<T> backward(const Mat<T>& x, const Mat<T>& dy, int batch) {
        const Eigen::Index c = x.cols();
        Mat<T> dx(x.rows(), c);
        for (int bi = 0; bi < batch; ++bi) {
            const Eigen::Map<const Mat<T>> dout(dy.row(bi).data(), kernels, c);
            const auto xs = x.middleRows(static_cast<Eigen::Index>(bi) * spatial, spatial);
            k.g.noalias() += dout * xs.transpose();
            if (bias) b.g.row(0) += dout.rowwise().sum().transpose();
            dx.middleRows(static_cast<Eigen::Index>(bi) * spatial, spatial).noalias() =
                k.w.transpose() * dout;
        }
        return dx;
    }
};

// Average pooling down to a `to` x `to` grid; stands in for the depthwise
// stage in the conv3x3 ablation.
template <typename T>
struct AvgPoolTo {
    int from = 0, to = 0;

    void configure(int from_side, int to_side) {
        from = from_side;
        to = to_side;
        if (from % to != 0) throw ShapeError("average pool target must divide the grid");
    }
    Mat<T> forward(const Mat<T>& x, int batch) const {
        const int f = from / to;
        const Eigen::Index c = x.cols();
        Mat<T> y = Mat<T>::Zero(static_cast<Eigen::Index>(batch) * to * to, c);
        for (int bi = 0; bi < batch; ++bi)
            for (int oy = 0; oy < to; ++oy)
                for (int ox = 0; ox < to; ++ox) {
                    const Eigen::Index orow = (static_cast<Eigen::Index>(bi) * to + oy) * to + ox;
                    for (int dy_ = 0; dy_ < f; ++dy_)
                        for (int dx_ = 0; dx_ < f; ++dx_) {
                            const Eigen::Index irow =
                                (static_cast<Eigen::Index>(bi) * from + oy * f + dy_) * from + ox * f + dx_;
                            y.row(orow) += x.row(irow);
                        }
                    y.row(orow) /= static_cast<T>(f * f);
                }
        return y;
    }
    Mat<T> backward(const Mat<T>& dy, int batch) const {
        const int f = from / to;
        const Eigen::Index c = dy.cols();
        Mat<T> dx(static_cast<Eigen::Index>(batch) * from * from, c);
        for (int bi = 0; bi < batch; ++bi)
            for (int oy = 0; oy < to; ++oy)
                for (int ox = 0; ox < to; ++ox) {
                    const Eigen::Index orow = (static_cast<Eigen::Index>(bi) * to + oy) * to + ox;
                    for (int dy_ = 0; dy_ < f; ++dy_)
                        for (int dx_ = 0; dx_ < f; ++dx_) {
                            const Eigen::Index irow =
                                (static_cast<Eigen::Index>(bi) * from + oy * f + dy_) * from + ox * f + dx_;
                            dx.row(irow) = dy.row(orow) / static_cast<T>(f * f);
                        }
                }
        return dx;
    }
};

}  // namespace fignet::nn

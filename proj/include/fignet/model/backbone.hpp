#pragma once

#include <string>

#include "fignet/model/config.hpp"
#include "fignet/nn/layers.hpp"

namespace fignet {

// Image encoder shared by both slot modules: one 3x3 conv, a 2x2 max pool,
// three 1x1 convs, a channel scaling layer and the full-extent depthwise
// reduction, followed by a per-module stack of fully connected layers. The
// 1x1 convs and scaling keep channels separate so color identity survives to
// the reduction stage.
template <typename T>
struct ConvBackbone {
    int image_side = 0, pooled = 0;
    bool conv3x3_stage = false;  // ablation: 3x3 conv + average pool instead of depthwise
    int pool_to = 0;

    nn::Conv3x3<T> conv1;
    nn::MaxPool2x2<T> pool;
    nn::Linear<T> conv2, conv3, conv4;  // 1x1 convolutions act per pixel row
    nn::Scaling<T> scaling;
    nn::DepthwiseReduce<T> depthwise;
    nn::Conv3x3<T> alt_conv;
    nn::AvgPoolTo<T> alt_pool;
    std::vector<nn::Linear<T>> fc;

    // forward activations kept for backward
    nn::Mat<T> a1, pooled_map, a2, a3, a4, scaled, flat;
    std::vector<nn::Mat<T>> fc_out;
    int batch = 0;

    void configure(const std::string& prefix, const ModelConfig& cfg, const std::vector<int>& fc_widths) {
        image_side = cfg.image_size;
        pooled = cfg.pooled_side();
        const auto& w = cfg.conv_widths;
        conv1.configure(prefix + "/conv1", 3, w[0], 1);
        conv2.configure(prefix + "/conv2", w[0], w[1]);
        conv3.configure(prefix + "/conv3", w[1], w[2]);
        conv4.configure(prefix + "/conv4", w[2], w[3]);
        scaling.configure(prefix + "/scaling", w[3], cfg.scaling_bias);
        conv3x3_stage = cfg.ablation.replace_depthwise_3x3;
        if (conv3x3_stage) {
            alt_conv.configure(prefix + "/alt_conv", w[3], cfg.depthwise_kernels, 1);
            pool_to = static_cast<int>(std::lround(std::sqrt(w[3])));
            alt_pool.configure(pooled, pool_to);
        } else {
            depthwise.configure(prefix + "/depthwise", cfg.depthwise_kernels, cfg.pooled_spatial(),
                                cfg.depthwise_bias);
        }
        fc.resize(fc_widths.size());
        int in = cfg.flatten_dim();
        for (std::size_t i = 0; i < fc_widths.size(); ++i) {
            fc[i].configure(prefix + "/fc" + std::to_string(i + 1), in, fc_widths[i]);
            in = fc_widths[i];
        }
    }

    void init(Rng& rng) {
        nn::he_init(conv1.w, rng, 9 * 3);
        nn::he_init(conv2.w, rng, conv2.w.w.rows());
        nn::he_init(conv3.w, rng, conv3.w.w.rows());
        nn::he_init(conv4.w, rng, conv4.w.w.rows());
        if (conv3x3_stage)
            nn::he_init(alt_conv.w, rng, alt_conv.w.w.rows());
        else
            nn::he_init(depthwise.k, rng, depthwise.spatial);
        for (auto& f : fc) nn::he_init(f.w, rng, f.w.w.rows());
    }

    void collect(nn::ParamRefs<T>& out) {
        conv1.collect(out);
        conv2.collect(out);
        conv3.collect(out);
        conv4.collect(out);
        scaling.collect(out);
        if (conv3x3_stage)
            alt_conv.collect(out);
        else
            depthwise.collect(out);
        for (auto& f : fc) f.collect(out);
    }

    // images: (batch * image_side^2) x 3, values in [0,1]
    nn::Mat<T> forward(const nn::Mat<T>& images, int batch_) {
        batch = batch_;
        a1 = nn::relu<T>(conv1.forward(images, batch, image_side, image_side));
        pooled_map = pool.forward(a1, batch, image_side, image_side);
        a2 = nn::relu<T>(conv2.forward(pooled_map));
        a3 = nn::relu<T>(conv3.forward(a2));
        a4 = nn::relu<T>(conv4.forward(a3));
        scaled = scaling.forward(a4);
        if (conv3x3_stage) {
            nn::Mat<T> c = nn::relu<T>(alt_conv.forward(scaled, batch, pooled, pooled));
            nn::Mat<T> p = alt_pool.forward(c, batch);
            // (batch*g*g) x M -> batch x (M*g*g)
            flat.resize(batch, p.cols() * pool_to * pool_to);
            for (int bi = 0; bi < batch; ++bi) {
                Eigen::Map<nn::Mat<T>>(flat.row(bi).data(), pool_to * pool_to, p.cols()) =
                    p.middleRows(static_cast<Eigen::Index>(bi) * pool_to * pool_to,
                                 pool_to * pool_to);
            }
            alt_relu_out = std::move(c);
        } else {
            flat = depthwise.forward(scaled, batch);
        }
        fc_out.assign(fc.size(), {});
        const nn::Mat<T>* x = &flat;
        for (std::size_t i = 0; i < fc.size(); ++i) {
            fc_out[i] = nn::relu<T>(fc[i].forward(*x));
            x = &fc_out[i];
        }
        return fc_out.back();
    }

    void backward(const nn::Mat<T>& d_rep) {
        nn::Mat<T> d = d_rep;
        for (std::size_t i = fc.size(); i-- > 0;) {
            d = nn::relu_backward(fc_out[i], d);
            const nn::Mat<T>& x = i == 0 ? flat : fc_out[i - 1];
            d = fc[i].backward(x, d);
        }
        nn::Mat<T> dscaled;
        if (conv3x3_stage) {
            nn::Mat<T> dp(static_cast<Eigen::Index>(batch) * pool_to * pool_to,
                          alt_relu_out.cols());
            for (int bi = 0; bi < batch; ++bi)
                dp.middleRows(static_cast<Eigen::Index>(bi) * pool_to * pool_to,
                              pool_to * pool_to) =
                    Eigen::Map<const nn::Mat<T>>(d.row(bi).data(), pool_to * pool_to,
                                                 alt_relu_out.cols());
            nn::Mat<T> dc = alt_pool.backward(dp, batch);
            dc = nn::relu_backward(alt_relu_out, dc);
            dscaled = alt_conv.backward(dc, batch, pooled, pooled, true);
        } else {
            dscaled = depthwise.backward(scaled, d, batch);
        }
        nn::Mat<T> da4 = scaling.backward(a4, dscaled);
        da4 = nn::relu_backward(a4, da4);
        nn::Mat<T> da3 = conv4.backward(a3, da4);
        da3 = nn::relu_backward(a3, da3);
        nn::Mat<T> da2 = conv3.backward(a2, da3);
        da2 = nn::relu_backward(a2, da2);
        nn::Mat<T> dpooled = conv2.backward(pooled_map, da2);
        nn::Mat<T> da1 = pool.backward(dpooled, batch, image_side, image_side);
        da1 = nn::relu_backward(a1, da1);
        conv1.backward(da1, batch, image_side, image_side, false);
    }

private:
    nn::Mat<T> alt_relu_out;
};

}  // namespace fignet

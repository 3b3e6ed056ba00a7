#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fignet/common.hpp"

namespace fignet {

struct AblationFlags {
    bool use_sampling = false;       // feed sampled one-hots instead of distributions
    int lstm_layers = 2;             // 1 or 2
    bool no_lstm = false;            // predict all slots with one linear head
    bool replace_depthwise_3x3 = false;

    std::string tag() const;
};

// Architecture hyperparameters. paper() carries the published layer widths;
// desk() is a reduced preset for CPU-scale experiments.
struct ModelConfig {
    int palette_size = 100;  // K
    int slots = 11;
    int image_size = 128;
    std::vector<int> conv_widths = {64, 64, 128, 256};
    int depthwise_kernels = 30;
    std::vector<int> spectral_fc = {1048, 512};
    std::vector<int> order_fc = {2048, 1024, 512};
    int decoder_hidden = 512;
    int question_hidden = 256;
    int question_embed = 64;
    std::vector<int> answer_fc = {1024, 512, 256, 256};
    AblationFlags ablation;
    bool scaling_bias = false;
    bool depthwise_bias = false;
    bool decoder_init_both = false;  // init layer-2 state from the representation too

    static ModelConfig paper(int palette_size) {
        ModelConfig c;
        c.palette_size = palette_size;
        return c;
    }
    static ModelConfig desk(int palette_size) {
        ModelConfig c;
        c.palette_size = palette_size;
        c.conv_widths = {32, 32, 64, 128};
        c.depthwise_kernels = 20;
        c.spectral_fc = {512, 256};
        c.order_fc = {1024, 512, 256};
        c.decoder_hidden = 256;
        c.answer_fc = {512, 256, 128, 128};
        return c;
    }

    int spectral_classes() const { return palette_size + 1; }
    int order_classes() const { return slots; }
    int pooled_side() const { return image_size / 2; }
    int pooled_spatial() const { return pooled_side() * pooled_side(); }
    int flatten_dim() const { return depthwise_kernels * conv_widths.back(); }
    int rep_dim(bool spectral) const {
        return spectral ? spectral_fc.back() : order_fc.back();
    }
    int figure_rep_dim() const { return slots * spectral_classes() + slots * order_classes(); }
    int color_enc_dim() const { return 2 * palette_size + 1; }
    int answer_input_dim() const {
        return figure_rep_dim() + question_hidden + color_enc_dim();
    }

    void validate() const {
        if (palette_size < 2) throw ConfigError("palette_size must be >= 2");
        if (slots < 1) throw ConfigError("slots must be >= 1");
        if (image_size < 4 || image_size % 2 != 0)
            throw ConfigError("image_size must be even and >= 4");
        if (conv_widths.size() != 4) throw ConfigError("conv_widths needs 4 entries");
        for (int w : conv_widths)
            if (w < 1) throw ConfigError("conv widths must be positive");
        if (depthwise_kernels < 1) throw ConfigError("depthwise_kernels must be positive");
        if (spectral_fc.empty() || order_fc.empty() || answer_fc.empty())
            throw ConfigError("fc stacks must be non-empty");
        if (ablation.lstm_layers != 1 && ablation.lstm_layers != 2)
            throw ConfigError("lstm_layers must be 1 or 2");
        if (ablation.replace_depthwise_3x3) {
            const int g = static_cast<int>(std::lround(std::sqrt(conv_widths.back())));
            if (g * g != conv_widths.back())
                throw ConfigError("conv3x3 ablation needs a square final conv width");
            if (pooled_side() % g != 0)
                throw ConfigError("conv3x3 ablation pool target must divide the grid");
        }
    }
};

inline std::string AblationFlags::tag() const {
    if (use_sampling) return "sampling";
    if (no_lstm) return "no_lstm";
    if (lstm_layers == 1) return "lstm1";
    if (replace_depthwise_3x3) return "conv3x3";
    return "full";
}

}  // namespace fignet

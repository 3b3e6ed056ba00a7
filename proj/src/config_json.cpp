#include "fignet/model/config_json.hpp"

#include <json.hpp>

using nlohmann::json;

namespace fignet {

std::string model_config_json(const ModelConfig& c) {
    json j{{"palette_size", c.palette_size},
           {"slots", c.slots},
           {"image_size", c.image_size},
           {"conv_widths", c.conv_widths},
           {"depthwise_kernels", c.depthwise_kernels},
           {"spectral_fc", c.spectral_fc},
           {"order_fc", c.order_fc},
           {"decoder_hidden", c.decoder_hidden},
           {"question_hidden", c.question_hidden},
           {"question_embed", c.question_embed},
           {"answer_fc", c.answer_fc},
           {"scaling_bias", c.scaling_bias},
           {"depthwise_bias", c.depthwise_bias},
           {"decoder_init_both", c.decoder_init_both},
           {"ablation",
            {{"use_sampling", c.ablation.use_sampling},
             {"lstm_layers", c.ablation.lstm_layers},
             {"no_lstm", c.ablation.no_lstm},
             {"replace_depthwise_3x3", c.ablation.replace_depthwise_3x3}}}};
    return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw LoadError("model config: " + std::string(e.what()));
    }
    ModelConfig c;
    c.palette_size = j.value("palette_size", c.palette_size);
    c.slots = j.value("slots", c.slots);
    c.image_size = j.value("image_size", c.image_size);
    c.conv_widths = j.value("conv_widths", c.conv_widths);
    c.depthwise_kernels = j.value("depthwise_kernels", c.depthwise_kernels);
    c.spectral_fc = j.value("spectral_fc", c.spectral_fc);
    c.order_fc = j.value("order_fc", c.order_fc);
    c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
    c.question_hidden = j.value("question_hidden", c.question_hidden);
    c.question_embed = j.value("question_embed", c.question_embed);
    c.answer_fc = j.value("answer_fc", c.answer_fc);
    c.scaling_bias = j.value("scaling_bias", c.scaling_bias);
    c.depthwise_bias = j.value("depthwise_bias", c.depthwise_bias);
    c.decoder_init_both = j.value("decoder_init_both", c.decoder_init_both);
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        c.ablation.use_sampling = a.value("use_sampling", false);
        c.ablation.lstm_layers = a.value("lstm_layers", 2);
        c.ablation.no_lstm = a.value("no_lstm", false);
        c.ablation.replace_depthwise_3x3 = a.value("replace_depthwise_3x3", false);
    }
    c.validate();
    return c;
}

}  // namespace fignet

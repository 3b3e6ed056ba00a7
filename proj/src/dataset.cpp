#include "fignet/train/dataset.hpp"

#include "fignet/common.hpp"

namespace fignet::train {

nn::MatF Dataset::image_batch(const std::vector<int>& figure_ids, std::size_t offset,
                              std::size_t count) const {
    const int side = image_side();
    const Eigen::Index pixels = static_cast<Eigen::Index>(side) * side;
    nn::MatF out(static_cast<Eigen::Index>(count) * pixels, 3);
    for (std::size_t i = 0; i < count; ++i) {
        const ImageU8& img = images[static_cast<std::size_t>(figure_ids[offset + i])];
        if (img.height != side || img.width != side) throw ShapeError("mixed image sizes in corpus");
        float* dst = out.data() + static_cast<std::size_t>(i) * pixels * 3;
        const std::uint8_t* src = img.data.data();
        for (Eigen::Index p = 0; p < pixels * 3; ++p)
            dst[p] = static_cast<float>(src[p]) * (1.0f / 255.0f);
    }
    return out;
}

std::vector<std::vector<int>> Dataset::encode_questions(const Vocab& vocab) const {
    std::vector<std::vector<int>> out;
    out.reserve(meta.questions.size());
    for (const auto& q : meta.questions) out.push_back(vocab.encode(q.text));
    return out;
}

Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    ds.meta = read_corpus(dir);
    const int stop_class = ds.meta.palette.size();
    ds.images.reserve(ds.meta.figures.size());
    ds.spectral_targets.reserve(ds.meta.figures.size());
    ds.order_targets.reserve(ds.meta.figures.size());
    for (std::size_t i = 0; i < ds.meta.figures.size(); ++i) {
        const auto& fig = ds.meta.figures[i];
        ds.images.push_back(read_png(image_path(dir, fig.figure_id)));
        ds.spectral_targets.push_back(spectral_target(fig, stop_class).labels);
        ds.order_targets.push_back(order_target(fig).ranks);
        ds.figure_index[fig.figure_id] = static_cast<int>(i);
    }
    ds.figure_questions.assign(ds.meta.figures.size(), {});
    ds.question_figure.reserve(ds.meta.questions.size());
    for (std::size_t qi = 0; qi < ds.meta.questions.size(); ++qi) {
        const auto it = ds.figure_index.find(ds.meta.questions[qi].figure_id);
        if (it == ds.figure_index.end())
            throw LoadError("question " + std::to_string(qi) + " references unknown figure " +
                            ds.meta.questions[qi].figure_id);
        ds.question_figure.push_back(it->second);
        ds.figure_questions[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(qi));
    }
    return ds;
}

}  // namespace fignet::train

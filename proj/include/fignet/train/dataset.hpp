#pragma once

#include <array>
#include <unordered_map>

#include "fignet/corpus.hpp"
#include "fignet/model/vocab.hpp"
#include "fignet/nn/mat.hpp"
#include "fignet/render.hpp"
#include "fignet/targets.hpp"

namespace fignet::train {

// A corpus split pulled into memory: decoded images, derived module targets
// and a per-figure index of its questions.
struct Dataset {
    Corpus meta;
    std::vector<ImageU8> images;                      // aligned with meta.figures
    std::vector<std::array<int, kMaxSlots>> spectral_targets;
    std::vector<std::array<int, kMaxSlots>> order_targets;
    std::unordered_map<std::string, int> figure_index;
    std::vector<int> question_figure;                 // question -> figure index
    std::vector<std::vector<int>> figure_questions;   // figure -> question indices

    int figure_count() const { return static_cast<int>(meta.figures.size()); }
    int question_count() const { return static_cast<int>(meta.questions.size()); }
    int image_side() const { return images.empty() ? 0 : images.front().height; }

    // (count * side^2) x 3 float view of a contiguous index range
    nn::MatF image_batch(const std::vector<int>& figure_ids, std::size_t offset,
                         std::size_t count) const;
    std::vector<std::vector<int>> encode_questions(const Vocab& vocab) const;
};

Dataset load_dataset(const std::string& dir);

}  // namespace fignet::train

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fignet/figure.hpp"

namespace fignet {

// In-memory corpus metadata. Images live on disk under <dir>/images and are
// decoded on demand by the training dataset.
struct Corpus {
    Palette palette;
    CorpusConfig config;
    std::uint64_t master_seed = 0;
    std::vector<FigureSpec> figures;
    std::vector<QuestionRecord> questions;

    const FigureSpec& figure_by_id(const std::string& id) const;
};

// Samples n figures and their questions. Each figure is a pure function of
// (config, master_seed, index), so corpora are reproducible and figures can
// be generated in parallel.
Corpus generate_corpus(const CorpusConfig& config, int n_figures, std::uint64_t master_seed);

// Renders every figure and writes the on-disk layout: palette.json,
// images/<figure_id>.png, annotations.jsonl, qa.jsonl, meta.json.
void write_corpus(const Corpus& corpus, const std::string& dir);

// Reads a corpus directory. Accepts the native layout, or a directory in the
// public dataset's layout (qa_pairs.json + annotations.json + png/), mapped
// onto the same types.
Corpus read_corpus(const std::string& dir);

// Path of a figure's image file inside a corpus directory (layout-aware).
std::string image_path(const std::string& dir, const std::string& figure_id);

}  // namespace fignet

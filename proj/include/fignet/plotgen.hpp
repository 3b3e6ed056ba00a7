#pragma once

#include <cstdint>
#include <vector>

#include "fignet/figure.hpp"

namespace fignet {

// Draws a figure specification: element count uniform in
// [min_elements, max_elements], colors without replacement, values i.i.d.
// uniform in [value_lo, value_hi] with near-ties resampled. Pure in
// (config, seed).
FigureSpec sample_figure(const CorpusConfig& config, std::uint64_t seed);

// Elements in canonical reading order. Specs already store elements that
// way; this validates and returns them.
std::vector<PlotElement> reading_order(const FigureSpec& spec);

// Ground truth for one question.
bool answer_oracle(const FigureSpec& spec, const QuestionRecord& q);

// Templated yes/no questions for one figure. Single-element figures get the
// four single-subject templates; larger figures get all six. Desired answers
// are drawn so that the corpus-wide yes ratio converges to 0.5 (the forced
// "yes" questions of single-element figures are compensated analytically).
std::vector<QuestionRecord> gen_questions(const FigureSpec& spec, const CorpusConfig& config,
                                          std::uint64_t seed);

// Question text for a template with palette names substituted.
std::string render_question_text(TemplateId t, const std::string& color1,
                                 const std::string& color2 = "");

// Probability that a multi-element question is assigned a "yes" answer, given
// the share of forced-yes questions implied by the element-count range.
double yes_probability(const CorpusConfig& config);

}  // namespace fignet

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fignet/palette.hpp"

namespace fignet {

enum class FigureType { vbar, hbar, pie };

std::string to_string(FigureType t);
FigureType figure_type_from_string(const std::string& s);

enum class TemplateId { min, max, low_median, high_median, less_than, greater_than };

std::string to_string(TemplateId t);
TemplateId template_from_string(const std::string& s);
bool template_has_second_color(TemplateId t);

// One bar or pie sector: a palette color carrying a positive magnitude.
struct PlotElement {
    int color_id = 0;
    double value = 0.0;
};

// Symbolic chart description. `elements` is stored in reading order:
// left to right for vertical bars, bottom to top for horizontal bars,
// anti-clockwise from 0 degrees for pies.
struct FigureSpec {
    std::string figure_id;
    FigureType figure_type = FigureType::vbar;
    std::vector<PlotElement> elements;

    int element_count() const { return static_cast<int>(elements.size()); }
    void validate(int max_elements = 10) const;
    bool has_color(int color_id) const;
    double value_of(int color_id) const;  // throws InputError when absent
};

struct QuestionRecord {
    std::string figure_id;
    TemplateId template_id = TemplateId::min;
    int color1_id = 0;
    std::optional<int> color2_id;
    std::string text;
    bool answer = false;
};

struct CorpusConfig {
    int palette_size = 100;
    int min_elements = 1;
    int max_elements = 10;
    int image_size = 128;
    double value_lo = 1.0;
    double value_hi = 100.0;
    double tie_rel_gap = 0.01;  // resample while |v_i - v_j| < gap * max(values)

    Palette palette;  // filled from palette_size when empty

    void validate() const;
    Palette effective_palette() const;
};

}  // namespace fignet

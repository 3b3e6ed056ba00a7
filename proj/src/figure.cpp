#include "fignet/figure.hpp"

#include <algorithm>
#include <set>

#include "fignet/common.hpp"

namespace fignet {

std::string to_string(FigureType t) {
    switch (t) {
        case FigureType::vbar: return "vbar";
        case FigureType::hbar: return "hbar";
        case FigureType::pie: return "pie";
    }
    throw InputError("bad figure type");
}

FigureType figure_type_from_string(const std::string& s) {
    if (s == "vbar") return FigureType::vbar;
    if (s == "hbar") return FigureType::hbar;
    if (s == "pie") return FigureType::pie;
    throw LoadError("unknown figure_type token: '" + s + "'");
}

std::string to_string(TemplateId t) {
    switch (t) {
        case TemplateId::min: return "min";
        case TemplateId::max: return "max";
        case TemplateId::low_median: return "low_median";
        case TemplateId::high_median: return "high_median";
        case TemplateId::less_than: return "less_than";
        case TemplateId::greater_than: return "greater_than";
    }
    throw InputError("bad template id");
}

TemplateId template_from_string(const std::string& s) {
    if (s == "min") return TemplateId::min;
    if (s == "max") return TemplateId::max;
    if (s == "low_median") return TemplateId::low_median;
    if (s == "high_median") return TemplateId::high_median;
    if (s == "less_than") return TemplateId::less_than;
    if (s == "greater_than") return TemplateId::greater_than;
    throw LoadError("unknown template_id token: '" + s + "'");
}

bool template_has_second_color(TemplateId t) {
    return t == TemplateId::less_than || t == TemplateId::greater_than;
}

void FigureSpec::validate(int max_elements) const {
    if (elements.empty()) throw InputError("figure " + figure_id + " has no elements");
    if (element_count() > max_elements)
        throw InputError("figure " + figure_id + " exceeds max elements");
    std::set<int> colors;
    for (const auto& e : elements) {
        if (e.value <= 0.0) throw InputError("figure " + figure_id + " has a non-positive value");
        if (!colors.insert(e.color_id).second)
            throw InputError("figure " + figure_id + " repeats a color");
    }
    for (std::size_t i = 0; i < elements.size(); ++i)
        for (std::size_t j = i + 1; j < elements.size(); ++j)
            if (elements[i].value == elements[j].value)
                throw InputError("figure " + figure_id + " has tied values");
}

bool FigureSpec::has_color(int color_id) const {
    return std::any_of(elements.begin(), elements.end(),
                       [&](const PlotElement& e) { return e.color_id == color_id; });
}

double FigureSpec::value_of(int color_id) const {
    for (const auto& e : elements)
        if (e.color_id == color_id) return e.value;
    throw InputError("color " + std::to_string(color_id) + " absent from figure " + figure_id);
}

void CorpusConfig::validate() const {
    const Palette pal = effective_palette();
    if (min_elements < 1) throw ConfigError("min_elements must be >= 1");
    if (min_elements > max_elements) throw ConfigError("min_elements > max_elements");
    if (max_elements > 10) throw ConfigError("max_elements must be <= 10");
    if (max_elements > pal.size()) throw ConfigError("max_elements exceeds palette size");
    if (value_lo <= 0.0 || value_lo >= value_hi) throw ConfigError("bad value range");
    if (image_size < 32) throw ConfigError("image_size too small");
}

Palette CorpusConfig::effective_palette() const {
    if (!palette.entries.empty()) {
        palette.validate();
        return palette;
    }
    return x11_palette(palette_size);
}

}  // namespace fignet

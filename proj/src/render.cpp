#include "fignet/render.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fignet/common.hpp"

namespace fignet {

namespace {

struct PlotRect {
    int left, right, top, bottom;  // plot area [left,right) x [top,bottom)
};

PlotRect plot_rect(int s) {
    return {s * 12 / 128, s - s * 4 / 128, s * 4 / 128, s - s * 8 / 128};
}

double max_value(const FigureSpec& spec) {
    double m = 0.0;
    for (const auto& e : spec.elements) m = std::max(m, e.value);
    return m;
}

void fill_rect(ImageU8& img, int y0, int y1, int x0, int x1, const std::array<std::uint8_t, 3>& rgb) {
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) img.set(y, x, rgb);
}

void render_vbar(ImageU8& img, const FigureSpec& spec, const Palette& pal, const PlotRect& r) {
    // axes
    fill_rect(img, r.top, r.bottom + 1, r.left - 1, r.left, kAxisRgb);
    fill_rect(img, r.bottom, r.bottom + 1, r.left - 1, r.right, kAxisRgb);

    const int k = spec.element_count();
    const double vmax = max_value(spec);
    const int span = r.right - r.left;
    const int slot = span / k;
    const int bar_w = std::max(1, slot * 7 / 10);
    const int plot_h = r.bottom - r.top;
    for (int i = 0; i < k; ++i) {
        const auto& e = spec.elements[static_cast<std::size_t>(i)];
        const int h = std::max(1, static_cast<int>(std::lround(e.value / vmax * plot_h)));
        const int x0 = r.left + i * slot + (slot - bar_w) / 2;
        fill_rect(img, r.bottom - h, r.bottom, x0, x0 + bar_w, pal.at(e.color_id).rgb);
    }
}

void render_hbar(ImageU8& img, const FigureSpec& spec, const Palette& pal, const PlotRect& r) {
    fill_rect(img, r.top, r.bottom + 1, r.left - 1, r.left, kAxisRgb);
    fill_rect(img, r.bottom, r.bottom + 1, r.left - 1, r.right, kAxisRgb);

    const int k = spec.element_count();
    const double vmax = max_value(spec);
    const int span = r.bottom - r.top;
    const int slot = span / k;
    const int bar_h = std::max(1, slot * 7 / 10);
    const int plot_w = r.right - r.left;
    // reading order is bottom to top: element 0 in the lowest slot
    for (int i = 0; i < k; ++i) {
        const auto& e = spec.elements[static_cast<std::size_t>(i)];
        const int w = std::max(1, static_cast<int>(std::lround(e.value / vmax * plot_w)));
        const int y1 = r.bottom - i * slot - (slot - bar_h) / 2;
        fill_rect(img, y1 - bar_h, y1, r.left, r.left + w, pal.at(e.color_id).rgb);
    }
}

void render_pie(ImageU8& img, const FigureSpec& spec, const Palette& pal, int s) {
    const int k = spec.element_count();
    double total = 0.0;
    for (const auto& e : spec.elements) total += e.value;
    if (total <= 0.0) throw NumericError("pie with non-positive total value");

    std::vector<double> bounds(static_cast<std::size_t>(k) + 1, 0.0);
    for (int i = 0; i < k; ++i)
        bounds[static_cast<std::size_t>(i) + 1] =
            bounds[static_cast<std::size_t>(i)] +
            spec.elements[static_cast<std::size_t>(i)].value / total * 2.0 * M_PI;
    bounds.back() = 2.0 * M_PI;

    const double cx = s / 2.0, cy = s / 2.0;
    const double radius = s * 54.0 / 128.0;
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            const double dx = (x + 0.5) - cx;
            const double dy = cy - (y + 0.5);  // image y grows downward
            if (dx * dx + dy * dy > radius * radius) continue;
            double ang = std::atan2(dy, dx);
            if (ang < 0.0) ang += 2.0 * M_PI;
            int sector = k - 1;
            for (int i = 0; i < k; ++i) {
                if (ang < bounds[static_cast<std::size_t>(i) + 1]) {
                    sector = i;
                    break;
                }
            }
            img.set(y, x, pal.at(spec.elements[static_cast<std::size_t>(sector)].color_id).rgb);
        }
    }
}

}  // namespace

ImageU8 render(const FigureSpec& spec, const CorpusConfig& config) {
    spec.validate(config.max_elements);
    const Palette pal = config.effective_palette();
    const int s = config.image_size;
    ImageU8 img(s, s);
    const PlotRect r = plot_rect(s);
    switch (spec.figure_type) {
        case FigureType::vbar: render_vbar(img, spec, pal, r); break;
        case FigureType::hbar: render_hbar(img, spec, pal, r); break;
        case FigureType::pie: render_pie(img, spec, pal, s); break;
    }
    return img;
}

std::vector<long> element_extents(const ImageU8& img, const FigureSpec& spec,
                                  const CorpusConfig& config) {
    const Palette pal = config.effective_palette();
    std::vector<long> extents;
    for (const auto& e : spec.elements) {
        const auto rgb = pal.at(e.color_id).rgb;
        std::set<int> rows, cols;
        long count = 0;
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                if (img.get(y, x) == rgb) {
                    rows.insert(y);
                    cols.insert(x);
                    ++count;
                }
            }
        }
        switch (spec.figure_type) {
            case FigureType::vbar: extents.push_back(static_cast<long>(rows.size())); break;
            case FigureType::hbar: extents.push_back(static_cast<long>(cols.size())); break;
            case FigureType::pie: extents.push_back(count); break;
        }
    }
    return extents;
}

}  // namespace fignet

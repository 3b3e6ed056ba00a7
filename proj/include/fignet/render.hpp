#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fignet/figure.hpp"

namespace fignet {

// RGB image, row-major, 8 bits per channel. The model consumes the float
// view (values / 255).
struct ImageU8 {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // height*width*3

    ImageU8() = default;
    ImageU8(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 255) {}

    std::uint8_t* px(int y, int x) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* px(int y, int x) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    void set(int y, int x, const std::array<std::uint8_t, 3>& rgb) {
        auto* p = px(y, x);
        p[0] = rgb[0];
        p[1] = rgb[1];
        p[2] = rgb[2];
    }
    std::array<std::uint8_t, 3> get(int y, int x) const {
        const auto* p = px(y, x);
        return {p[0], p[1], p[2]};
    }
};

inline constexpr std::array<std::uint8_t, 3> kBackgroundRgb{255, 255, 255};
inline constexpr std::array<std::uint8_t, 3> kAxisRgb{0, 0, 0};

// Rasterizes a figure at config.image_size with nearest-neighbor fills and
// no anti-aliasing: every pixel is the background, the axis color, or one
// element's exact palette rgb.
ImageU8 render(const FigureSpec& spec, const CorpusConfig& config);

// Pixel extent of each element in reading order: bar height (vbar), bar
// width (hbar) or sector pixel count (pie). Used by proportionality checks.
std::vector<long> element_extents(const ImageU8& img, const FigureSpec& spec,
                                  const CorpusConfig& config);

void write_png(const std::string& path, const ImageU8& img);
ImageU8 read_png(const std::string& path);

}  // namespace fignet

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fignet {

struct PaletteColor {
    int id = 0;
    std::string name;
    std::array<std::uint8_t, 3> rgb{};
};

// Ordered set of plot-element colors. Ids are contiguous from 0; names and
// rgb triples are unique. Black and white are reserved for axes and
// background and never appear here.
struct Palette {
    std::vector<PaletteColor> entries;

    int size() const { return static_cast<int>(entries.size()); }
    const PaletteColor& at(int id) const;
    int find_by_rgb(const std::array<std::uint8_t, 3>& rgb) const;  // -1 if absent
    void validate() const;
};

// First `k` entries of the built-in X11-style color table (max 100).
Palette x11_palette(int k);

}  // namespace fignet

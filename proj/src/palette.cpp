#include "fignet/palette.hpp"

#include <map>
#include <set>

#include "fignet/common.hpp"

namespace fignet {

namespace {

struct NamedColor {
    const char* name;
    std::uint8_t r, g, b;
};

// X11 color values. The first entries carry the colors used by the worked
// examples so that small palettes still contain them. Black and white are
// deliberately absent (axis and background colors).
constexpr NamedColor kColorTable[] = {
    {"Royal Blue", 65, 105, 225},
    {"Aqua", 0, 255, 255},
    {"Midnight Blue", 25, 25, 112},
    {"Purple", 160, 32, 240},
    {"Tomato", 255, 99, 71},
    {"Forest Green", 34, 139, 34},
    {"Gold", 255, 215, 0},
    {"Hot Pink", 255, 105, 180},
    {"Chocolate", 210, 105, 30},
    {"Steel Blue", 70, 130, 180},
    {"Crimson", 220, 20, 60},
    {"Dark Orange", 255, 140, 0},
    {"Dark Green", 0, 100, 0},
    {"Navy", 0, 0, 128},
    {"Olive", 128, 128, 0},
    {"Teal", 0, 128, 128},
    {"Maroon", 176, 48, 96},
    {"Salmon", 250, 128, 114},
    {"Orchid", 218, 112, 214},
    {"Slate Blue", 106, 90, 205},
    {"Sea Green", 46, 139, 87},
    {"Sienna", 160, 82, 45},
    {"Khaki", 240, 230, 140},
    {"Plum", 221, 160, 221},
    {"Coral", 255, 127, 80},
    {"Turquoise", 64, 224, 208},
    {"Indigo", 75, 0, 130},
    {"Violet", 238, 130, 238},
    {"Lime Green", 50, 205, 50},
    {"Firebrick", 178, 34, 34},
    {"Deep Pink", 255, 20, 147},
    {"Sky Blue", 135, 206, 235},
    {"Lavender", 230, 230, 250},
    {"Tan", 210, 180, 140},
    {"Beige", 245, 245, 220},
    {"Peru", 205, 133, 63},
    {"Dark Violet", 148, 0, 211},
    {"Cadet Blue", 95, 158, 160},
    {"Dodger Blue", 30, 144, 255},
    {"Goldenrod", 218, 165, 32},
    {"Dark Salmon", 233, 150, 122},
    {"Medium Orchid", 186, 85, 211},
    {"Dark Khaki", 189, 183, 107},
    {"Pale Green", 152, 251, 152},
    {"Powder Blue", 176, 224, 230},
    {"Rosy Brown", 188, 143, 143},
    {"Saddle Brown", 139, 69, 19},
    {"Medium Sea Green", 60, 179, 113},
    {"Dark Slate Gray", 47, 79, 79},
    {"Light Coral", 240, 128, 128},
    {"Olive Drab", 107, 142, 35},
    {"Medium Blue", 0, 0, 205},
    {"Spring Green", 0, 255, 127},
    {"Dark Turquoise", 0, 206, 209},
    {"Chartreuse", 127, 255, 0},
    {"Indian Red", 205, 92, 92},
    {"Slate Gray", 112, 128, 144},
    {"Light Sea Green", 32, 178, 170},
    {"Dark Red", 139, 0, 0},
    {"Dark Blue", 0, 0, 139},
    {"Dark Cyan", 0, 139, 139},
    {"Dark Magenta", 139, 0, 139},
    {"Orange Red", 255, 69, 0},
    {"Light Salmon", 255, 160, 122},
    {"Medium Purple", 147, 112, 219},
    {"Dark Sea Green", 143, 188, 143},
    {"Pale Violet Red", 219, 112, 147},
    {"Medium Violet Red", 199, 21, 133},
    {"Dark Goldenrod", 184, 134, 11},
    {"Medium Slate Blue", 123, 104, 238},
    {"Cornflower Blue", 100, 149, 237},
    {"Medium Aquamarine", 102, 205, 170},
    {"Thistle", 216, 191, 216},
    {"Light Pink", 255, 182, 193},
    {"Burlywood", 222, 184, 135},
    {"Gainsboro", 220, 220, 220},
    {"Red", 255, 0, 0},
    {"Green", 0, 255, 0},
    {"Blue", 0, 0, 255},
    {"Yellow", 255, 255, 0},
    {"Magenta", 255, 0, 255},
    {"Orange", 255, 165, 0},
    {"Brown", 165, 42, 42},
    {"Deep Sky Blue", 0, 191, 255},
    {"Medium Spring Green", 0, 250, 154},
    {"Dark Olive Green", 85, 107, 47},
    {"Light Goldenrod", 238, 221, 130},
    {"Pale Goldenrod", 238, 232, 170},
    {"Wheat", 245, 222, 179},
    {"Aquamarine", 127, 255, 212},
    {"Light Steel Blue", 176, 196, 222},
    {"Light Slate Gray", 119, 136, 153},
    {"Dim Gray", 105, 105, 105},
    {"Gray", 190, 190, 190},
    {"Dark Gray", 169, 169, 169},
    {"Silver", 192, 192, 192},
    {"Rebecca Purple", 102, 51, 153},
    {"Yellow Green", 154, 205, 50},
    {"Green Yellow", 173, 255, 47},
    {"Light Green", 144, 238, 144},
};

static_assert(std::size(kColorTable) == 100);

}  // namespace

const PaletteColor& Palette::at(int id) const {
    if (id < 0 || id >= size()) throw InputError("palette id out of range: " + std::to_string(id));
    return entries[static_cast<std::size_t>(id)];
}

int Palette::find_by_rgb(const std::array<std::uint8_t, 3>& rgb) const {
    for (const auto& e : entries)
        if (e.rgb == rgb) return e.id;
    return -1;
}

void Palette::validate() const {
    if (size() < 2) throw ConfigError("palette needs at least 2 colors");
    std::set<std::string> names;
    std::set<std::array<std::uint8_t, 3>> rgbs;
    for (int i = 0; i < size(); ++i) {
        const auto& e = entries[static_cast<std::size_t>(i)];
        if (e.id != i) throw ConfigError("palette ids must be contiguous from 0");
        if (!names.insert(e.name).second) throw ConfigError("duplicate palette name: " + e.name);
        if (!rgbs.insert(e.rgb).second) throw ConfigError("duplicate palette rgb for: " + e.name);
        if (e.rgb == std::array<std::uint8_t, 3>{0, 0, 0} ||
            e.rgb == std::array<std::uint8_t, 3>{255, 255, 255})
            throw ConfigError("palette may not contain the axis or background color");
    }
}

Palette x11_palette(int k) {
    if (k < 2 || k > 100) throw ConfigError("palette size must be in [2,100], got " + std::to_string(k));
    Palette p;
    p.entries.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const auto& c = kColorTable[i];
        p.entries.push_back({i, c.name, {c.r, c.g, c.b}});
    }
    p.validate();
    return p;
}

}  // namespace fignet

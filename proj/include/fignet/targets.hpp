#pragma once

#include <array>

#include "fignet/figure.hpp"

namespace fignet {

inline constexpr int kMaxSlots = 11;

// Label sequences for module pre-training. Both sequences have one entry per
// output slot; absent slots carry STOP (spectral) or 0 (order).
struct SpectralTarget {
    std::array<int, kMaxSlots> labels{};  // color ids, then STOP = palette size
};

struct OrderTarget {
    std::array<int, kMaxSlots> ranks{};  // dense ranks 1..k (1 = smallest), then 0
};

// labels[i] = color of the i-th element in reading order; tail = stop_class
// (callers pass the palette size).
SpectralTarget spectral_target(const FigureSpec& spec, int stop_class);

// ranks[i] = 1 + number of elements with a smaller value; tail = 0.
OrderTarget order_target(const FigureSpec& spec);

}  // namespace fignet

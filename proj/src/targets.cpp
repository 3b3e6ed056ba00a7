#include "fignet/targets.hpp"

#include "fignet/common.hpp"

namespace fignet {

SpectralTarget spectral_target(const FigureSpec& spec, int stop_class) {
    spec.validate();
    if (spec.element_count() >= kMaxSlots)
        throw InputError("figure " + spec.figure_id + " has too many elements for the slot budget");
    SpectralTarget t;
    t.labels.fill(stop_class);
    for (int i = 0; i < spec.element_count(); ++i) {
        const int c = spec.elements[static_cast<std::size_t>(i)].color_id;
        if (c >= stop_class) throw InputError("color id collides with the stop class");
        t.labels[static_cast<std::size_t>(i)] = c;
    }
    return t;
}

OrderTarget order_target(const FigureSpec& spec) {
    spec.validate();  // rejects tied values
    if (spec.element_count() >= kMaxSlots)
        throw InputError("figure " + spec.figure_id + " has too many elements for the slot budget");
    OrderTarget t;
    t.ranks.fill(0);
    const int k = spec.element_count();
    for (int i = 0; i < k; ++i) {
        int rank = 1;
        for (int j = 0; j < k; ++j)
            if (spec.elements[static_cast<std::size_t>(j)].value <
                spec.elements[static_cast<std::size_t>(i)].value)
                ++rank;
        t.ranks[static_cast<std::size_t>(i)] = rank;
    }
    return t;
}

}  // namespace fignet

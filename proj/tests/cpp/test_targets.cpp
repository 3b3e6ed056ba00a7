#include <doctest.h>
#include "fignet/common.hpp"

#include <algorithm>
#include <numeric>

#include "fignet/plotgen.hpp"
#include "fignet/targets.hpp"

using namespace fignet;

namespace {

FigureSpec spec_with(const std::vector<std::pair<int, double>>& elems) {
    FigureSpec spec;
    spec.figure_id = "fig_test";
    spec.figure_type = FigureType::vbar;
    for (const auto& [c, v] : elems) spec.elements.push_back({c, v});
    return spec;
}

// independent oracle: selection-sort ranks and an explicit stop tail
std::vector<int> brute_order(const FigureSpec& spec) {
    std::vector<double> values;
    for (const auto& e : spec.elements) values.push_back(e.value);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> out(11, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto it = std::find(sorted.begin(), sorted.end(), values[i]);
        out[i] = static_cast<int>(it - sorted.begin()) + 1;
    }
    return out;
}

}  // namespace

TEST_CASE("worked example: five bars in reading order") {
    // element colors Royal Blue, Aqua, Midnight Blue, Purple, Tomato with the
    // value pattern v1 < v5 < v4 < v3 < v2
    const auto spec = spec_with({{0, 10.0}, {1, 90.0}, {2, 70.0}, {3, 50.0}, {4, 30.0}});
    const auto st = spectral_target(spec, 100);
    const std::vector<int> expect_labels = {0, 1, 2, 3, 4, 100, 100, 100, 100, 100, 100};
    CHECK(std::equal(st.labels.begin(), st.labels.end(), expect_labels.begin()));

    const auto ot = order_target(spec);
    const std::vector<int> expect_ranks = {1, 5, 4, 3, 2, 0, 0, 0, 0, 0, 0};
    CHECK(std::equal(ot.ranks.begin(), ot.ranks.end(), expect_ranks.begin()));
}

TEST_CASE("single element targets") {
    const auto spec = spec_with({{6, 4.2}});
    const auto st = spectral_target(spec, 8);
    CHECK(st.labels[0] == 6);
    for (int i = 1; i < 11; ++i) CHECK(st.labels[static_cast<std::size_t>(i)] == 8);
    const auto ot = order_target(spec);
    CHECK(ot.ranks[0] == 1);
    for (int i = 1; i < 11; ++i) CHECK(ot.ranks[static_cast<std::size_t>(i)] == 0);
}

TEST_CASE("hand-sorted example") {
    const auto spec = spec_with({{0, 2.0}, {1, 9.0}, {2, 4.0}});
    const auto ot = order_target(spec);
    CHECK(ot.ranks[0] == 1);
    CHECK(ot.ranks[1] == 3);
    CHECK(ot.ranks[2] == 2);
    CHECK(ot.ranks[3] == 0);
}

TEST_CASE("10k generated figures match the brute-force oracle exactly") {
    CorpusConfig cc;
    cc.palette_size = 12;
    cc.max_elements = 10;
    long checked = 0;
    for (std::uint64_t seed = 0; checked < 10000; ++seed, ++checked) {
        const FigureSpec spec = sample_figure(cc, seed);
        const auto st = spectral_target(spec, cc.palette_size);
        const auto ot = order_target(spec);
        const auto expect = brute_order(spec);
        const int k = spec.element_count();
        for (int i = 0; i < 11; ++i) {
            const int want_label =
                i < k ? spec.elements[static_cast<std::size_t>(i)].color_id : cc.palette_size;
            REQUIRE(st.labels[static_cast<std::size_t>(i)] == want_label);
            REQUIRE(ot.ranks[static_cast<std::size_t>(i)] == expect[static_cast<std::size_t>(i)]);
        }
    }
    CHECK(checked == 10000);
}

TEST_CASE("stop and zero tails align; ranks form a permutation; inverse sorts") {
    CorpusConfig cc;
    cc.palette_size = 10;
    cc.max_elements = 8;
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        const FigureSpec spec = sample_figure(cc, seed);
        const auto st = spectral_target(spec, cc.palette_size);
        const auto ot = order_target(spec);
        const int k = spec.element_count();
        for (int i = 0; i < 11; ++i) {
            const bool stop = st.labels[static_cast<std::size_t>(i)] == cc.palette_size;
            const bool zero = ot.ranks[static_cast<std::size_t>(i)] == 0;
            CHECK(stop == zero);
            CHECK(stop == (i >= k));
        }
        std::vector<int> prefix(ot.ranks.begin(), ot.ranks.begin() + k);
        std::vector<int> sorted = prefix;
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < k; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i + 1);
        // applying the inverse permutation to reading-order values sorts them
        std::vector<double> by_rank(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i)
            by_rank[static_cast<std::size_t>(prefix[static_cast<std::size_t>(i)] - 1)] =
                spec.elements[static_cast<std::size_t>(i)].value;
        CHECK(std::is_sorted(by_rank.begin(), by_rank.end()));
    }
}

TEST_CASE("tied values are a precondition violation for order targets") {
    const auto spec = spec_with({{0, 3.0}, {1, 3.0}});
    CHECK_THROWS_AS(order_target(spec), InputError);
}

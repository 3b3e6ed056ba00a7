#include "fignet/plotgen.hpp"

#include <algorithm>
#include <numeric>

#include "fignet/common.hpp"
#include "fignet/rng.hpp"

namespace fignet {

namespace {

// 1-indexed rank of each element by ascending value (1 = smallest).
std::vector<int> dense_ranks(const FigureSpec& spec) {
    const int k = spec.element_count();
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return spec.elements[static_cast<std::size_t>(a)].value <
               spec.elements[static_cast<std::size_t>(b)].value;
    });
    std::vector<int> rank(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r + 1;
    return rank;
}

int rank_of_color(const FigureSpec& spec, int color_id) {
    const auto ranks = dense_ranks(spec);
    for (std::size_t i = 0; i < spec.elements.size(); ++i)
        if (spec.elements[i].color_id == color_id) return ranks[i];
    throw InputError("color " + std::to_string(color_id) + " absent from figure " + spec.figure_id);
}

// Low/high median ranks, 1-indexed. Odd counts share the middle rank; even
// counts use k/2 and k/2+1.
std::pair<int, int> median_ranks(int k) {
    if (k % 2 == 1) {
        const int m = (k + 1) / 2;
        return {m, m};
    }
    return {k / 2, k / 2 + 1};
}

int color_at_rank(const FigureSpec& spec, int rank) {
    const auto ranks = dense_ranks(spec);
    for (std::size_t i = 0; i < spec.elements.size(); ++i)
        if (ranks[i] == rank) return spec.elements[i].color_id;
    throw InputError("rank out of range");
}

int pick_other_color(const FigureSpec& spec, int excluded, Rng& rng) {
    std::vector<int> pool;
    for (const auto& e : spec.elements)
        if (e.color_id != excluded) pool.push_back(e.color_id);
    return pool[rng.uniform_int(pool.size())];
}

}  // namespace

FigureSpec sample_figure(const CorpusConfig& config, std::uint64_t seed) {
    config.validate();
    const Palette pal = config.effective_palette();
    Rng rng(seed);

    FigureSpec spec;
    const int type_pick = static_cast<int>(rng.uniform_int(3));
    spec.figure_type = static_cast<FigureType>(type_pick);

    const int span = config.max_elements - config.min_elements + 1;
    const int k = config.min_elements + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span)));

    // colors without replacement: partial Fisher-Yates over palette ids
    std::vector<int> ids(static_cast<std::size_t>(pal.size()));
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(pal.size() - i)));
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    }

    // values: redraw the whole vector while any pair is closer than
    // tie_rel_gap * max(values)
    std::vector<double> values(static_cast<std::size_t>(k));
    for (int attempt = 0;; ++attempt) {
        if (attempt > 1000) throw NumericError("tie-free value sampling did not converge");
        for (auto& v : values) v = rng.uniform(config.value_lo, config.value_hi);
        const double vmax = *std::max_element(values.begin(), values.end());
        bool ok = true;
        for (std::size_t i = 0; i < values.size() && ok; ++i)
            for (std::size_t j = i + 1; j < values.size() && ok; ++j)
                if (std::abs(values[i] - values[j]) < config.tie_rel_gap * vmax) ok = false;
        if (ok) break;
    }

    spec.elements.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        spec.elements.push_back({ids[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(i)]});
    spec.validate(config.max_elements);
    return spec;
}

std::vector<PlotElement> reading_order(const FigureSpec& spec) {
    spec.validate();
    return spec.elements;
}

bool answer_oracle(const FigureSpec& spec, const QuestionRecord& q) {
    if (!spec.has_color(q.color1_id))
        throw InputError("question color " + std::to_string(q.color1_id) + " absent from figure");
    const int k = spec.element_count();
    switch (q.template_id) {
        case TemplateId::min:
            return rank_of_color(spec, q.color1_id) == 1;
        case TemplateId::max:
            return rank_of_color(spec, q.color1_id) == k;
        case TemplateId::low_median:
            return rank_of_color(spec, q.color1_id) == median_ranks(k).first;
        case TemplateId::high_median:
            return rank_of_color(spec, q.color1_id) == median_ranks(k).second;
        case TemplateId::less_than:
        case TemplateId::greater_than: {
            if (!q.color2_id) throw InputError("pair template without second color");
            const double v1 = spec.value_of(q.color1_id);
            const double v2 = spec.value_of(*q.color2_id);
            return q.template_id == TemplateId::less_than ? v1 < v2 : v1 > v2;
        }
    }
    throw InputError("bad template id");
}

std::string render_question_text(TemplateId t, const std::string& color1, const std::string& color2) {
    switch (t) {
        case TemplateId::min: return "Is " + color1 + " the minimum?";
        case TemplateId::max: return "Is " + color1 + " the maximum?";
        case TemplateId::low_median: return "Is " + color1 + " the low median?";
        case TemplateId::high_median: return "Is " + color1 + " the high median?";
        case TemplateId::less_than: return "Is " + color1 + " less than " + color2 + "?";
        case TemplateId::greater_than: return "Is " + color1 + " greater than " + color2 + "?";
    }
    throw InputError("bad template id");
}

double yes_probability(const CorpusConfig& config) {
    const int span = config.max_elements - config.min_elements + 1;
    const double p1 = config.min_elements == 1 ? 1.0 / span : 0.0;
    if (p1 >= 1.0) return 1.0;  // degenerate: only forced-yes questions exist
    const double p = 0.5 - p1 / (3.0 * (1.0 - p1));
    return std::clamp(p, 0.0, 1.0);
}

std::vector<QuestionRecord> gen_questions(const FigureSpec& spec, const CorpusConfig& config,
                                          std::uint64_t seed) {
    spec.validate(config.max_elements);
    const Palette pal = config.effective_palette();
    Rng rng(seed);
    const int k = spec.element_count();
    const double p_yes = yes_probability(config);

    std::vector<QuestionRecord> out;
    const TemplateId singles[] = {TemplateId::min, TemplateId::max, TemplateId::low_median,
                                  TemplateId::high_median};
    for (TemplateId t : singles) {
        QuestionRecord q;
        q.figure_id = spec.figure_id;
        q.template_id = t;
        if (k == 1) {
            q.color1_id = spec.elements[0].color_id;
        } else {
            const bool want_yes = rng.bernoulli(p_yes);
            int true_rank = 1;
            if (t == TemplateId::max) true_rank = k;
            else if (t == TemplateId::low_median) true_rank = median_ranks(k).first;
            else if (t == TemplateId::high_median) true_rank = median_ranks(k).second;
            const int true_color = color_at_rank(spec, true_rank);
            q.color1_id = want_yes ? true_color : pick_other_color(spec, true_color, rng);
        }
        q.text = render_question_text(t, pal.at(q.color1_id).name);
        q.answer = answer_oracle(spec, q);
        out.push_back(std::move(q));
    }

    if (k >= 2) {
        for (TemplateId t : {TemplateId::less_than, TemplateId::greater_than}) {
            QuestionRecord q;
            q.figure_id = spec.figure_id;
            q.template_id = t;
            const bool want_yes = rng.bernoulli(p_yes);
            const auto a = rng.uniform_int(static_cast<std::uint64_t>(k));
            auto b = rng.uniform_int(static_cast<std::uint64_t>(k - 1));
            if (b >= a) ++b;
            const auto& ea = spec.elements[static_cast<std::size_t>(a)];
            const auto& eb = spec.elements[static_cast<std::size_t>(b)];
            const PlotElement& lo = ea.value < eb.value ? ea : eb;
            const PlotElement& hi = ea.value < eb.value ? eb : ea;
            if (t == TemplateId::less_than) {
                q.color1_id = want_yes ? lo.color_id : hi.color_id;
                q.color2_id = want_yes ? hi.color_id : lo.color_id;
            } else {
                q.color1_id = want_yes ? hi.color_id : lo.color_id;
                q.color2_id = want_yes ? lo.color_id : hi.color_id;
            }
            q.text = render_question_text(t, pal.at(q.color1_id).name, pal.at(*q.color2_id).name);
            q.answer = answer_oracle(spec, q);
            out.push_back(std::move(q));
        }
    }
    return out;
}

}  // namespace fignet

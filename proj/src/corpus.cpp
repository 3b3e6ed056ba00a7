#include "fignet/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <unordered_map>

#include "fignet/common.hpp"
#include "fignet/plotgen.hpp"
#include "fignet/render.hpp"
#include "fignet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fignet {

namespace {

constexpr const char* kMedianRule =
    "even k: low=rank k/2, high=rank k/2+1 (1-indexed); odd k: both=rank ceil(k/2)";
constexpr const char* kQuestionDensity =
    "one question per applicable template: 4 for single-element figures, 6 otherwise";

std::string figure_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fig_%06d", index);
    return buf;
}

json config_to_json(const CorpusConfig& c) {
    return json{{"palette_size", c.palette_size}, {"min_elements", c.min_elements},
                {"max_elements", c.max_elements}, {"image_size", c.image_size},
                {"value_lo", c.value_lo},         {"value_hi", c.value_hi},
                {"tie_rel_gap", c.tie_rel_gap}};
}

CorpusConfig config_from_json(const json& j) {
    CorpusConfig c;
    c.palette_size = j.value("palette_size", c.palette_size);
    c.min_elements = j.value("min_elements", c.min_elements);
    c.max_elements = j.value("max_elements", c.max_elements);
    c.image_size = j.value("image_size", c.image_size);
    c.value_lo = j.value("value_lo", c.value_lo);
    c.value_hi = j.value("value_hi", c.value_hi);
    c.tie_rel_gap = j.value("tie_rel_gap", c.tie_rel_gap);
    return c;
}

json parse_line(const std::string& line, const std::string& file, std::size_t lineno) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw LoadError(file + " line " + std::to_string(lineno) + ": " + e.what());
    }
}

template <typename Fn>
auto field_or_throw(const json& j, const char* key, const std::string& ctx, Fn&& get) {
    if (!j.contains(key)) throw LoadError(ctx + ": missing field '" + key + "'");
    try {
        return get(j.at(key));
    } catch (const json::exception& e) {
        throw LoadError(ctx + ": field '" + key + "': " + e.what());
    }
}

bool is_native_layout(const fs::path& dir) { return fs::exists(dir / "annotations.jsonl"); }
bool is_public_layout(const fs::path& dir) {
    return fs::exists(dir / "annotations.json") && fs::exists(dir / "qa_pairs.json");
}

Corpus read_native(const fs::path& dir);
Corpus read_public(const fs::path& dir);

}  // namespace

const FigureSpec& Corpus::figure_by_id(const std::string& id) const {
    for (const auto& f : figures)
        if (f.figure_id == id) return f;
    throw InputError("unknown figure id: " + id);
}

Corpus generate_corpus(const CorpusConfig& config, int n_figures, std::uint64_t master_seed) {
    config.validate();
    if (n_figures < 1) throw ConfigError("corpus needs at least one figure");
    Corpus corpus;
    corpus.config = config;
    corpus.palette = config.effective_palette();
    corpus.master_seed = master_seed;
    corpus.figures.reserve(static_cast<std::size_t>(n_figures));
    for (int i = 0; i < n_figures; ++i) {
        FigureSpec spec = sample_figure(config, derive_seed(master_seed, 2ull * i));
        spec.figure_id = figure_name(i);
        auto qs = gen_questions(spec, config, derive_seed(master_seed, 2ull * i + 1));
        corpus.figures.push_back(std::move(spec));
        for (auto& q : qs) corpus.questions.push_back(std::move(q));
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "images");

    {
        json pal = json::array();
        for (const auto& e : corpus.palette.entries)
            pal.push_back({{"id", e.id}, {"name", e.name}, {"rgb", {e.rgb[0], e.rgb[1], e.rgb[2]}}});
        std::ofstream out(fs::path(dir) / "palette.json");
        out << pal.dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "annotations.jsonl");
        for (const auto& f : corpus.figures) {
            json elems = json::array();
            int idx = 0;
            for (const auto& e : f.elements)
                elems.push_back({{"color_id", e.color_id}, {"value", e.value}, {"reading_index", idx++}});
            out << json{{"figure_id", f.figure_id},
                        {"figure_type", to_string(f.figure_type)},
                        {"elements", elems}}
                       .dump()
                << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "qa.jsonl");
        for (const auto& q : corpus.questions) {
            json j{{"figure_id", q.figure_id},
                   {"template_id", to_string(q.template_id)},
                   {"color1_id", q.color1_id},
                   {"color2_id", q.color2_id ? json(*q.color2_id) : json(nullptr)},
                   {"text", q.text},
                   {"answer", q.answer}};
            out << j.dump() << "\n";
        }
    }
    {
        json meta{{"master_seed", corpus.master_seed},
                  {"median_rule", kMedianRule},
                  {"question_density", kQuestionDensity},
                  {"config", config_to_json(corpus.config)}};
        std::ofstream out(fs::path(dir) / "meta.json");
        out << meta.dump(2) << "\n";
    }
    for (const auto& f : corpus.figures)
        write_png((fs::path(dir) / "images" / (f.figure_id + ".png")).string(),
                  render(f, corpus.config));
}

namespace {

Corpus read_native(const fs::path& dir) {
    Corpus corpus;

    {
        std::ifstream in(dir / "palette.json");
        if (!in) throw LoadError("missing file: " + (dir / "palette.json").string());
        json pal;
        try {
            in >> pal;
        } catch (const json::exception& e) {
            throw LoadError("palette.json: " + std::string(e.what()));
        }
        for (const auto& e : pal) {
            PaletteColor c;
            c.id = field_or_throw(e, "id", "palette.json", [](const json& v) { return v.get<int>(); });
            c.name = field_or_throw(e, "name", "palette.json",
                                    [](const json& v) { return v.get<std::string>(); });
            auto rgb = field_or_throw(e, "rgb", "palette.json",
                                      [](const json& v) { return v.get<std::vector<int>>(); });
            if (rgb.size() != 3) throw LoadError("palette.json: rgb must have 3 entries");
            c.rgb = {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                     static_cast<std::uint8_t>(rgb[2])};
            corpus.palette.entries.push_back(std::move(c));
        }
        corpus.palette.validate();
    }

    if (fs::exists(dir / "meta.json")) {
        std::ifstream in(dir / "meta.json");
        json meta;
        try {
            in >> meta;
        } catch (const json::exception& e) {
            throw LoadError("meta.json: " + std::string(e.what()));
        }
        corpus.master_seed = meta.value("master_seed", 0ull);
        if (meta.contains("config")) corpus.config = config_from_json(meta.at("config"));
    }
    corpus.config.palette = corpus.palette;
    corpus.config.palette_size = corpus.palette.size();

    {
        std::ifstream in(dir / "annotations.jsonl");
        if (!in) throw LoadError("missing file: " + (dir / "annotations.jsonl").string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const json j = parse_line(line, "annotations.jsonl", lineno);
            const std::string ctx = "annotations.jsonl line " + std::to_string(lineno);
            FigureSpec f;
            f.figure_id =
                field_or_throw(j, "figure_id", ctx, [](const json& v) { return v.get<std::string>(); });
            f.figure_type = figure_type_from_string(field_or_throw(
                j, "figure_type", ctx, [](const json& v) { return v.get<std::string>(); }));
            const json elems =
                field_or_throw(j, "elements", ctx, [](const json& v) { return v; });
            std::vector<std::pair<int, PlotElement>> indexed;
            for (const auto& e : elems) {
                PlotElement pe;
                pe.color_id =
                    field_or_throw(e, "color_id", ctx, [](const json& v) { return v.get<int>(); });
                pe.value =
                    field_or_throw(e, "value", ctx, [](const json& v) { return v.get<double>(); });
                const int ri = field_or_throw(e, "reading_index", ctx,
                                              [](const json& v) { return v.get<int>(); });
                if (pe.color_id < 0 || pe.color_id >= corpus.palette.size())
                    throw LoadError(ctx + ": color_id " + std::to_string(pe.color_id) +
                                    " outside palette of size " + std::to_string(corpus.palette.size()));
                indexed.emplace_back(ri, pe);
            }
            std::sort(indexed.begin(), indexed.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [ri, pe] : indexed) f.elements.push_back(pe);
            try {
                f.validate();
            } catch (const std::exception& e) {
                throw LoadError(ctx + ": " + e.what());
            }
            corpus.figures.push_back(std::move(f));
        }
    }

    {
        std::ifstream in(dir / "qa.jsonl");
        if (!in) throw LoadError("missing file: " + (dir / "qa.jsonl").string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const json j = parse_line(line, "qa.jsonl", lineno);
            const std::string ctx = "qa.jsonl line " + std::to_string(lineno);
            QuestionRecord q;
            q.figure_id =
                field_or_throw(j, "figure_id", ctx, [](const json& v) { return v.get<std::string>(); });
            q.template_id = template_from_string(field_or_throw(
                j, "template_id", ctx, [](const json& v) { return v.get<std::string>(); }));
            q.color1_id =
                field_or_throw(j, "color1_id", ctx, [](const json& v) { return v.get<int>(); });
            if (!j.contains("color2_id")) throw LoadError(ctx + ": missing field 'color2_id'");
            if (!j.at("color2_id").is_null()) q.color2_id = j.at("color2_id").get<int>();
            if (q.color2_id.has_value() != template_has_second_color(q.template_id))
                throw LoadError(ctx + ": color2_id inconsistent with template");
            q.text = field_or_throw(j, "text", ctx, [](const json& v) { return v.get<std::string>(); });
            q.answer = field_or_throw(j, "answer", ctx, [](const json& v) { return v.get<bool>(); });
            const FigureSpec& f = corpus.figure_by_id(q.figure_id);
            if (!f.has_color(q.color1_id) || (q.color2_id && !f.has_color(*q.color2_id)))
                throw LoadError(ctx + ": question references a color absent from its figure");
            corpus.questions.push_back(std::move(q));
        }
    }
    return corpus;
}

// Maps the public dataset's directory layout (annotations.json, qa_pairs.json,
// png/<image_index>.png) onto the native types. Element values are read from
// "value", or the first entry of "ys"/"widths"/"spans".
Corpus read_public(const fs::path& dir) {
    Corpus corpus;
    json ann, qa;
    {
        std::ifstream in(dir / "annotations.json");
        try {
            in >> ann;
        } catch (const json::exception& e) {
            throw LoadError("annotations.json: " + std::string(e.what()));
        }
    }
    {
        std::ifstream in(dir / "qa_pairs.json");
        try {
            in >> qa;
        } catch (const json::exception& e) {
            throw LoadError("qa_pairs.json: " + std::string(e.what()));
        }
    }

    auto map_type = [](const std::string& t) -> FigureType {
        if (t.rfind("vbar", 0) == 0) return FigureType::vbar;
        if (t.rfind("hbar", 0) == 0) return FigureType::hbar;
        if (t.rfind("pie", 0) == 0) return FigureType::pie;
        throw LoadError("annotations.json: unsupported figure type: '" + t + "'");
    };
    auto element_value = [](const json& model, const std::string& ctx) -> double {
        if (model.contains("value")) return model.at("value").get<double>();
        for (const char* key : {"ys", "widths", "spans"})
            if (model.contains(key) && model.at(key).is_array() && !model.at(key).empty())
                return model.at(key).at(0).get<double>();
        throw LoadError(ctx + ": model carries no usable value field");
    };

    std::unordered_map<int, std::string> index_to_id;
    int record = 0;
    for (const auto& fig : ann) {
        const std::string ctx = "annotations.json record " + std::to_string(record++);
        FigureSpec f;
        const int image_index =
            field_or_throw(fig, "image_index", ctx, [](const json& v) { return v.get<int>(); });
        f.figure_id = std::to_string(image_index);
        f.figure_type = map_type(
            field_or_throw(fig, "type", ctx, [](const json& v) { return v.get<std::string>(); }));
        const json models = field_or_throw(fig, "models", ctx, [](const json& v) { return v; });
        for (const auto& m : models) {
            PlotElement e;
            const std::string name =
                field_or_throw(m, "name", ctx, [](const json& v) { return v.get<std::string>(); });
            std::array<std::uint8_t, 3> rgb{0, 0, 0};
            bool have_rgb = false;
            if (m.contains("color") && m.at("color").is_array() && m.at("color").size() == 3) {
                const auto& c = m.at("color");
                rgb = {static_cast<std::uint8_t>(c.at(0).get<int>()),
                       static_cast<std::uint8_t>(c.at(1).get<int>()),
                       static_cast<std::uint8_t>(c.at(2).get<int>())};
                have_rgb = true;
            }
            int id = -1;
            for (const auto& pe : corpus.palette.entries)
                if (pe.name == name) id = pe.id;
            if (id < 0) {
                id = corpus.palette.size();
                if (!have_rgb) {
                    // synthesize a unique placeholder so palette invariants hold
                    rgb = {static_cast<std::uint8_t>(1 + id % 254),
                           static_cast<std::uint8_t>(1 + (id / 254) % 254), 1};
                }
                corpus.palette.entries.push_back({id, name, rgb});
            }
            e.color_id = id;
            e.value = element_value(m, ctx);
            f.elements.push_back(e);
        }
        try {
            f.validate();
        } catch (const std::exception& e) {
            throw LoadError(ctx + ": " + e.what());
        }
        index_to_id[image_index] = f.figure_id;
        corpus.figures.push_back(std::move(f));
    }
    corpus.palette.validate();
    corpus.config.palette = corpus.palette;
    corpus.config.palette_size = corpus.palette.size();

    const json pairs = qa.contains("qa_pairs") ? qa.at("qa_pairs") : qa;
    record = 0;
    for (const auto& p : pairs) {
        const std::string ctx = "qa_pairs.json record " + std::to_string(record++);
        QuestionRecord q;
        const int image_index =
            field_or_throw(p, "image_index", ctx, [](const json& v) { return v.get<int>(); });
        const auto it = index_to_id.find(image_index);
        if (it == index_to_id.end())
            throw LoadError(ctx + ": image_index " + std::to_string(image_index) + " not annotated");
        q.figure_id = it->second;
        q.text = field_or_throw(p, "question_string", ctx,
                                [](const json& v) { return v.get<std::string>(); });
        q.color1_id =
            field_or_throw(p, "color1_id", ctx, [](const json& v) { return v.get<int>(); });
        if (p.contains("color2_id") && !p.at("color2_id").is_null() &&
            p.at("color2_id").get<int>() >= 0)
            q.color2_id = p.at("color2_id").get<int>();
        const int ans =
            field_or_throw(p, "answer", ctx, [](const json& v) { return v.get<int>(); });
        q.answer = ans != 0;
        // recover the template from the question text
        if (q.text.find(" less than ") != std::string::npos) q.template_id = TemplateId::less_than;
        else if (q.text.find(" greater than ") != std::string::npos)
            q.template_id = TemplateId::greater_than;
        else if (q.text.find(" low median") != std::string::npos) q.template_id = TemplateId::low_median;
        else if (q.text.find(" high median") != std::string::npos)
            q.template_id = TemplateId::high_median;
        else if (q.text.find(" minimum") != std::string::npos) q.template_id = TemplateId::min;
        else if (q.text.find(" maximum") != std::string::npos) q.template_id = TemplateId::max;
        else throw LoadError(ctx + ": cannot classify question: '" + q.text + "'");
        if (!q.color2_id.has_value() && template_has_second_color(q.template_id))
            throw LoadError(ctx + ": pair template without second color");
        corpus.questions.push_back(std::move(q));
    }
    return corpus;
}

}  // namespace

Corpus read_corpus(const std::string& dir) {
    const fs::path p(dir);
    if (!fs::exists(p)) throw LoadError("corpus directory does not exist: " + dir);
    if (is_native_layout(p)) return read_native(p);
    if (is_public_layout(p)) return read_public(p);
    throw LoadError("unrecognized corpus layout in: " + dir);
}

std::string image_path(const std::string& dir, const std::string& figure_id) {
    const fs::path native = fs::path(dir) / "images" / (figure_id + ".png");
    if (fs::exists(native)) return native.string();
    const fs::path pub = fs::path(dir) / "png" / (figure_id + ".png");
    if (fs::exists(pub)) return pub.string();
    throw LoadError("image not found for figure " + figure_id + " in " + dir);
}

}  // namespace fignet

#include "fignet/evalreport.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "fignet/baselines.hpp"
#include "fignet/model/config_json.hpp"
#include "fignet/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fignet::eval {

namespace {

const std::vector<std::string> kTemplates = {"min",         "max",      "low_median",
                                             "high_median", "less_than", "greater_than"};
const std::vector<std::string> kFigureTypes = {"vbar", "hbar", "pie"};

// Published full-scale accuracies, rendered only in reference columns.
const std::map<std::string, double> kPaperOverall = {
    {"cnn_lstm", 59.94}, {"rn", 77.33}, {"figurenet", 84.29}};
const std::map<std::string, double> kPaperModules = {{"spectral", 80.82}, {"order", 74.31}};
const std::map<std::string, double> kPaperAblation = {
    {"full", 84.29}, {"sampling", 81.61}, {"lstm1", 75.29}, {"no_lstm", 73.19}};

void tally(EvalReport& report, const train::Dataset& ds, const std::vector<bool>& predicted_yes) {
    for (const auto& t : kFigureTypes) report.per_figure_type[t];
    for (const auto& t : kTemplates) report.per_template[t];
    for (std::size_t qi = 0; qi < ds.meta.questions.size(); ++qi) {
        const auto& q = ds.meta.questions[qi];
        const bool hit = predicted_yes[qi] == q.answer;
        const auto& fig = ds.meta.figures[static_cast<std::size_t>(
            ds.question_figure[qi])];
        auto bump = [&](Cell& cell) {
            ++cell.total;
            if (hit) ++cell.correct;
        };
        bump(report.overall);
        bump(report.per_figure_type[to_string(fig.figure_type)]);
        bump(report.per_template[to_string(q.template_id)]);
    }
}

std::vector<bool> answer_figurenet(const std::string& ckpt_path, const train::Dataset& ds,
                                   int micro_batch, std::string* variant) {
    train::LoadedModel lm = train::model_from_checkpoint(ckpt_path);
    if (lm.cfg.palette_size != ds.meta.palette.size())
        throw ConfigError("checkpoint palette size differs from the corpus");
    *variant = lm.cfg.ablation.tag();
    const nn::MatF reps = train::compute_figure_reps(lm.net, ds, micro_batch);
    const auto tokens = ds.encode_questions(lm.vocab);
    std::vector<bool> yes(ds.meta.questions.size());
    std::vector<int> questions(static_cast<std::size_t>(ds.question_count()));
    std::iota(questions.begin(), questions.end(), 0);
    for (std::size_t off = 0; off < questions.size(); off += static_cast<std::size_t>(micro_batch)) {
        const auto count = std::min<std::size_t>(micro_batch, questions.size() - off);
        std::vector<std::vector<int>> toks(count);
        std::vector<std::pair<int, std::optional<int>>> colors(count);
        for (std::size_t i = 0; i < count; ++i) {
            const auto& q = ds.meta.questions[static_cast<std::size_t>(questions[off + i])];
            toks[i] = tokens[static_cast<std::size_t>(questions[off + i])];
            colors[i] = {q.color1_id, q.color2_id};
        }
        const nn::MatF q_enc = lm.net.question.forward(toks);
        const nn::MatF c_enc = encode_question_colors<float>(colors, lm.cfg.palette_size);
        nn::MatF x(static_cast<Eigen::Index>(count), reps.cols() + q_enc.cols() + c_enc.cols());
        for (std::size_t i = 0; i < count; ++i) {
            const int fig = ds.question_figure[static_cast<std::size_t>(questions[off + i])];
            x.block(static_cast<Eigen::Index>(i), 0, 1, reps.cols()) = reps.row(fig);
            x.block(static_cast<Eigen::Index>(i), reps.cols(), 1, q_enc.cols()) =
                q_enc.row(static_cast<Eigen::Index>(i));
            x.block(static_cast<Eigen::Index>(i), reps.cols() + q_enc.cols(), 1, c_enc.cols()) =
                c_enc.row(static_cast<Eigen::Index>(i));
        }
        const nn::MatF logits = lm.net.answer.forward(x);
        for (std::size_t i = 0; i < count; ++i)
            yes[static_cast<std::size_t>(questions[off + i])] =
                logits(static_cast<Eigen::Index>(i), 0) >= 0.0f;
    }
    return yes;
}

std::vector<bool> answer_baseline(const std::string& ckpt_path, const std::string& kind,
                                  const json& header, const train::Dataset& ds, int micro_batch) {
    const Vocab vocab = Vocab::from_json(header.at("vocab").dump());
    const int side = header.value("image_size", 128);
    if (side != ds.image_side()) throw ConfigError("checkpoint image size differs from the corpus");
    CnnLstm<float> cnn;
    RelationNetwork<float> rn;
    const Checkpoint ck = load_checkpoint(ckpt_path);
    if (kind == "cnn_lstm") {
        cnn.configure(side, vocab.size());
        apply_checkpoint(ck, cnn.params());
    } else {
        rn.configure(side, vocab.size());
        apply_checkpoint(ck, rn.params());
    }
    const auto tokens = ds.encode_questions(vocab);
    std::vector<bool> yes(ds.meta.questions.size());
    std::vector<int> questions(static_cast<std::size_t>(ds.question_count()));
    std::iota(questions.begin(), questions.end(), 0);
    for (std::size_t off = 0; off < questions.size(); off += static_cast<std::size_t>(micro_batch)) {
        const auto count = std::min<std::size_t>(micro_batch, questions.size() - off);
        std::vector<int> q_figs(count);
        std::vector<std::vector<int>> toks(count);
        for (std::size_t i = 0; i < count; ++i) {
            q_figs[i] = ds.question_figure[static_cast<std::size_t>(questions[off + i])];
            toks[i] = tokens[static_cast<std::size_t>(questions[off + i])];
        }
        const nn::MatF imgs = ds.image_batch(q_figs, 0, count);
        const nn::MatF logits = kind == "cnn_lstm" ? cnn.forward(imgs, static_cast<int>(count), toks)
                                                   : rn.forward(imgs, static_cast<int>(count), toks);
        for (std::size_t i = 0; i < count; ++i)
            yes[static_cast<std::size_t>(questions[off + i])] =
                logits(static_cast<Eigen::Index>(i), 0) >= 0.0f;
    }
    return yes;
}

}  // namespace

EvalReport evaluate(const std::string& ckpt_path, const train::Dataset& ds, int micro_batch) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    const json header = json::parse(ck.header_json);
    const std::string kind = header.value("model_kind", "figurenet");
    EvalReport report;
    report.model_kind = kind;
    report.checkpoint = ckpt_path;
    std::vector<bool> yes;
    if (kind == "figurenet")
        yes = answer_figurenet(ckpt_path, ds, micro_batch, &report.variant);
    else
        yes = answer_baseline(ckpt_path, kind, header, ds, micro_batch);
    tally(report, ds, yes);
    return report;
}

ModuleAcc evaluate_module(const std::string& module_ckpt, const std::string& which,
                          const train::Dataset& ds, int micro_batch) {
    if (which != "spectral" && which != "order") throw ConfigError("unknown module: " + which);
    const Checkpoint ck = load_checkpoint(module_ckpt);
    const json header = json::parse(ck.header_json);
    std::string cfg_json;
    if (header.value("kind", "") == "module") {
        if (header.value("module", "") != which)
            throw LoadError("checkpoint holds the " + header.value("module", "?") + " module");
        cfg_json = header.at("model").dump();
    } else if (header.value("kind", "") == "full" &&
               header.value("model_kind", "") == "figurenet") {
        cfg_json = header.at("model").dump();
    } else {
        throw LoadError("not a module or figurenet checkpoint: " + module_ckpt);
    }
    const ModelConfig cfg = model_config_from_json(cfg_json);
    if (cfg.palette_size != ds.meta.palette.size())
        throw ConfigError("checkpoint palette size differs from the corpus");
    const bool spectral = which == "spectral";
    SlotModule<float> module;
    module.configure(which, cfg, spectral);
    nn::ParamRefs<float> params;
    module.collect(params);
    apply_checkpoint(ck, params);
    const auto [per_element, full_sequence] =
        train::module_accuracy(module, ds, spectral, micro_batch, train::eval_feed(cfg));
    return {per_element, full_sequence};
}

std::string report_json(const EvalReport& r) {
    auto cell = [](const Cell& c) {
        return json{{"correct", c.correct}, {"total", c.total}, {"accuracy", c.accuracy()}};
    };
    json per_type = json::object(), per_template = json::object(), modules = json::object(),
         timings = json::object();
    for (const auto& [k, v] : r.per_figure_type) per_type[k] = cell(v);
    for (const auto& [k, v] : r.per_template) per_template[k] = cell(v);
    for (const auto& [k, v] : r.module_acc)
        modules[k] = {{"per_element", v.per_element}, {"full_sequence", v.full_sequence}};
    for (const auto& [k, v] : r.timings_seconds) timings[k] = v;
    json j{{"version", 1},
           {"model_kind", r.model_kind},
           {"checkpoint", r.checkpoint},
           {"split", r.split},
           {"variant", r.variant},
           {"overall", cell(r.overall)},
           {"per_figure_type", per_type},
           {"per_template", per_template},
           {"module_acc", modules},
           {"timings_seconds", timings}};
    return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw LoadError("report: " + std::string(e.what()));
    }
    EvalReport r;
    auto cell = [](const json& c) {
        Cell out;
        out.correct = c.value("correct", 0l);
        out.total = c.value("total", 0l);
        return out;
    };
    r.model_kind = j.value("model_kind", "");
    r.checkpoint = j.value("checkpoint", "");
    r.split = j.value("split", "");
    r.variant = j.value("variant", "full");
    r.overall = cell(j.value("overall", json::object()));
    const json types = j.value("per_figure_type", json::object());
    for (const auto& [k, v] : types.items()) r.per_figure_type[k] = cell(v);
    const json templates = j.value("per_template", json::object());
    for (const auto& [k, v] : templates.items()) r.per_template[k] = cell(v);
    const json modules = j.value("module_acc", json::object());
    for (const auto& [k, v] : modules.items())
        r.module_acc[k] = {v.value("per_element", 0.0), v.value("full_sequence", 0.0)};
    const json timings = j.value("timings_seconds", json::object());
    for (const auto& [k, v] : timings.items()) r.timings_seconds[k] = v.get<double>();
    return r;
}

namespace {

std::string pct(double accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", accuracy * 100.0);
    return buf;
}

std::string model_label(const EvalReport& r) {
    if (r.model_kind == "cnn_lstm") return "CNN + LSTM";
    if (r.model_kind == "rn") return "RN";
    return r.variant == "full" ? "FigureNet" : "FigureNet[" + r.variant + "]";
}

std::string paper_overall_ref(const EvalReport& r) {
    if (r.model_kind == "figurenet") {
        const auto it = kPaperAblation.find(r.variant);
        return it == kPaperAblation.end() ? "-" : pct(it->second / 100.0);
    }
    const auto it = kPaperOverall.find(r.model_kind);
    return it == kPaperOverall.end() ? "-" : pct(it->second / 100.0);
}

void render_text(const std::vector<EvalReport>& reports, std::ostream& out) {
    out << "== Accuracy (measured | paper@full-scale) ==\n";
    for (const auto& r : reports)
        out << "  " << model_label(r) << " [" << r.split << "]: " << pct(r.overall.accuracy())
            << " | " << paper_overall_ref(r) << "\n";
    for (const auto& r : reports) {
        out << "\n== " << model_label(r) << " [" << r.split << "] ==\n";
        out << "  per figure type:\n";
        for (const auto& t : kFigureTypes) {
            const auto it = r.per_figure_type.find(t);
            if (it != r.per_figure_type.end())
                out << "    " << t << ": " << pct(it->second.accuracy()) << " (" << it->second.correct
                    << "/" << it->second.total << ")\n";
        }
        out << "  per question type:\n";
        for (const auto& t : kTemplates) {
            const auto it = r.per_template.find(t);
            if (it != r.per_template.end())
                out << "    " << t << ": " << pct(it->second.accuracy()) << " (" << it->second.correct
                    << "/" << it->second.total << ")\n";
        }
        if (!r.module_acc.empty()) {
            out << "  modules (per-element / full-sequence | paper@full-scale per-module):\n";
            for (const auto& [k, v] : r.module_acc) {
                const auto it = kPaperModules.find(k);
                out << "    " << k << ": " << pct(v.per_element) << " / " << pct(v.full_sequence)
                    << " | " << (it == kPaperModules.end() ? "-" : pct(it->second / 100.0)) << "\n";
            }
        }
        if (!r.timings_seconds.empty()) {
            double total = 0.0;
            out << "  stage timings (seconds):\n";
            for (const auto& [k, v] : r.timings_seconds) {
                out << "    " << k << ": " << v << "\n";
                total += v;
            }
            out << "    total: " << total << "\n";
        }
    }
}

void render_csv(const std::vector<EvalReport>& reports, std::ostream& out) {
    out << "model,variant,split,cell,correct,total,accuracy,paper_full_scale\n";
    for (const auto& r : reports) {
        out << model_label(r) << "," << r.variant << "," << r.split << ",overall,"
            << r.overall.correct << "," << r.overall.total << "," << r.overall.accuracy() << ","
            << paper_overall_ref(r) << "\n";
        for (const auto& [k, v] : r.per_figure_type)
            out << model_label(r) << "," << r.variant << "," << r.split << ",figure_type:" << k << ","
                << v.correct << "," << v.total << "," << v.accuracy() << ",-\n";
        for (const auto& [k, v] : r.per_template)
            out << model_label(r) << "," << r.variant << "," << r.split << ",template:" << k << ","
                << v.correct << "," << v.total << "," << v.accuracy() << ",-\n";
        for (const auto& [k, v] : r.module_acc) {
            const auto it = kPaperModules.find(k);
            out << model_label(r) << "," << r.variant << "," << r.split << ",module:" << k << ",,,"
                << v.per_element << "," << (it == kPaperModules.end() ? std::string("-") : pct(it->second / 100.0))
                << "\n";
        }
        for (const auto& [k, v] : r.timings_seconds)
            out << model_label(r) << "," << r.variant << "," << r.split << ",timing:" << k << ",,,"
                << v << ",-\n";
    }
}

}  // namespace

void render_tables(const std::vector<EvalReport>& reports, const std::string& format,
                   const std::string& out_dir) {
    fs::create_directories(out_dir);
    if (format == "json") {
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(json::parse(report_json(r)));
        std::ofstream out(fs::path(out_dir) / "report.json");
        out << arr.dump(2) << "\n";
    } else if (format == "csv") {
        std::ofstream out(fs::path(out_dir) / "report.csv");
        render_csv(reports, out);
    } else if (format == "text") {
        std::ofstream out(fs::path(out_dir) / "report.txt");
        render_text(reports, out);
    } else {
        throw ConfigError("unknown report format: " + format);
    }
}

namespace {

bool validate_node(const json& value, const json& schema, const std::string& path,
                   std::string* error) {
    const std::string type = schema.value("type", "");
    auto fail = [&](const std::string& msg) {
        if (error) *error = path + ": " + msg;
        return false;
    };
    if (type == "object") {
        if (!value.is_object()) return fail("expected object");
        for (const auto& req : schema.value("required", json::array()))
            if (!value.contains(req.get<std::string>()))
                return fail("missing required field '" + req.get<std::string>() + "'");
        const json props = schema.value("properties", json::object());
        for (const auto& [k, sub] : props.items())
            if (value.contains(k) && !validate_node(value.at(k), sub, path + "/" + k, error))
                return false;
        if (schema.contains("additionalProperties") &&
            schema.at("additionalProperties").is_object()) {
            for (const auto& [k, v] : value.items())
                if (!props.contains(k) &&
                    !validate_node(v, schema.at("additionalProperties"), path + "/" + k, error))
                    return false;
        }
        return true;
    }
    if (type == "array") {
        if (!value.is_array()) return fail("expected array");
        if (schema.contains("items"))
            for (std::size_t i = 0; i < value.size(); ++i)
                if (!validate_node(value.at(i), schema.at("items"), path + "[" + std::to_string(i) + "]",
                                   error))
                    return false;
        return true;
    }
    if (type == "number") return value.is_number() ? true : fail("expected number");
    if (type == "integer") return value.is_number_integer() ? true : fail("expected integer");
    if (type == "string") return value.is_string() ? true : fail("expected string");
    if (type == "boolean") return value.is_boolean() ? true : fail("expected boolean");
    return true;
}

}  // namespace

bool validate_report_json(const std::string& report_text, const std::string& schema_text,
                          std::string* error) {
    json report, schema;
    try {
        report = json::parse(report_text);
        schema = json::parse(schema_text);
    } catch (const json::exception& e) {
        if (error) *error = e.what();
        return false;
    }
    return validate_node(report, schema, "", error);
}

}  // namespace fignet::eval

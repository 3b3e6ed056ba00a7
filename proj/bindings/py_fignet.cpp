#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fignet/corpus.hpp"
#include "fignet/evalreport.hpp"
#include "fignet/nn/decoder.hpp"
#include "fignet/plotgen.hpp"
#include "fignet/render.hpp"
#include "fignet/targets.hpp"
#include "fignet/train/trainer.hpp"

namespace py = pybind11;
using namespace fignet;

namespace {

using ArrayD = py::array_t<double, py::array::c_style | py::array::forcecast>;

nn::MatD fmap_to_mat(const ArrayD& fmap) {
    if (fmap.ndim() != 3) throw ShapeError("feature map must be (H, W, C)");
    const auto h = fmap.shape(0), w = fmap.shape(1), c = fmap.shape(2);
    nn::MatD m(h * w, c);
    std::memcpy(m.data(), fmap.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return m;
}

py::array_t<double> mat_to_fmap(const nn::MatD& m, py::ssize_t h, py::ssize_t w) {
    py::array_t<double> out({h, w, static_cast<py::ssize_t>(m.cols())});
    std::memcpy(out.mutable_data(), m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return out;
}

py::array_t<double> py_scaling_layer(const ArrayD& fmap, const ArrayD& scale) {
    if (scale.ndim() != 1) throw ShapeError("scale must be a vector");
    nn::Scaling<double> layer;
    layer.configure("scaling", static_cast<int>(scale.shape(0)), false);
    for (py::ssize_t i = 0; i < scale.shape(0); ++i) layer.p.w(0, i) = scale.at(i);
    const nn::MatD out = layer.forward(fmap_to_mat(fmap));
    return mat_to_fmap(out, fmap.shape(0), fmap.shape(1));
}

py::array_t<double> py_depthwise_reduce(const ArrayD& fmap, const ArrayD& kernels) {
    if (kernels.ndim() != 3) throw ShapeError("kernels must be (M, H, W)");
    if (kernels.shape(1) != fmap.shape(0) || kernels.shape(2) != fmap.shape(1))
        throw ShapeError("kernel spatial dims must equal the feature map dims");
    const auto m = kernels.shape(0);
    const auto hw = fmap.shape(0) * fmap.shape(1);
    nn::DepthwiseReduce<double> layer;
    layer.configure("depthwise", static_cast<int>(m), static_cast<int>(hw), false);
    std::memcpy(layer.k.w.data(), kernels.data(),
                sizeof(double) * static_cast<std::size_t>(m * hw));
    const nn::MatD out = layer.forward(fmap_to_mat(fmap), 1);
    py::array_t<double> res({m, fmap.shape(2)});
    std::memcpy(res.mutable_data(), out.data(),
                sizeof(double) * static_cast<std::size_t>(out.size()));
    return res;
}

py::array_t<double> py_decoder_forward(int steps, int classes, const ArrayD& rep,
                                       std::uint64_t param_seed, const std::string& mode,
                                       int hidden, int layers, std::uint64_t sample_seed) {
    if (rep.ndim() != 1) throw ShapeError("representation must be a vector");
    nn::SlotDecoder<double> dec;
    dec.configure("decoder", steps, classes, static_cast<int>(rep.shape(0)), hidden, layers, false);
    Rng rng(param_seed);
    dec.init(rng);
    nn::MatD r(1, rep.shape(0));
    for (py::ssize_t i = 0; i < rep.shape(0); ++i) r(0, i) = rep.at(i);
    nn::FeedMode fm = nn::FeedMode::prob_feed;
    if (mode == "sample_train") fm = nn::FeedMode::sample_train;
    else if (mode == "argmax_eval") fm = nn::FeedMode::argmax_eval;
    else if (mode != "prob_feed") throw ConfigError("unknown feed mode: " + mode);
    Rng sampler(sample_seed);
    const auto probs = dec.forward(r, fm, &sampler);
    py::array_t<double> out({static_cast<py::ssize_t>(steps), static_cast<py::ssize_t>(classes)});
    for (int t = 0; t < steps; ++t)
        for (int c = 0; c < classes; ++c)
            out.mutable_at(t, c) = probs[static_cast<std::size_t>(t)](0, c);
    return out;
}

py::array_t<float> py_render(const FigureSpec& spec, int palette_size, int image_size) {
    CorpusConfig cc;
    cc.palette_size = palette_size;
    cc.image_size = image_size;
    const ImageU8 img = render(spec, cc);
    py::array_t<float> out({static_cast<py::ssize_t>(img.height), static_cast<py::ssize_t>(img.width),
                            static_cast<py::ssize_t>(3)});
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < 3; ++ch)
                out.mutable_at(y, x, ch) = static_cast<float>(img.get(y, x)[static_cast<std::size_t>(ch)]) / 255.0f;
    return out;
}

py::dict record_dict(const train::RunRecord& r) {
    py::dict d;
    d["stage"] = r.stage;
    d["best_epoch"] = r.best_epoch;
    d["best_metric"] = r.best_metric;
    d["total_seconds"] = r.total_seconds;
    py::list epochs;
    for (const auto& e : r.epochs) {
        py::dict ed;
        ed["train_loss"] = e.train_loss;
        ed["val_metric"] = e.val_metric;
        ed["seconds"] = e.seconds;
        epochs.append(ed);
    }
    d["epochs"] = epochs;
    return d;
}

train::StagePlan make_plan(const std::string& stage, int epochs, double lr, std::uint64_t seed,
                           int batch, int micro) {
    train::StagePlan p;
    p.stage = stage;
    p.epochs = epochs;
    p.lr = lr;
    p.seed = seed;
    p.batch_size = batch;
    p.micro_batch = micro;
    return p;
}

ModelConfig profile_config(const std::string& profile, int palette, int image_size) {
    ModelConfig mc =
        profile == "desk" ? ModelConfig::desk(palette) : ModelConfig::paper(palette);
    mc.image_size = image_size;
    return mc;
}

}  // namespace

PYBIND11_MODULE(_fignet, m) {
    m.doc() = "FigureNet laboratory core";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<ShapeError>(m, "ShapeError");
    py::register_exception<LoadError>(m, "LoadError");
    py::register_exception<NumericError>(m, "NumericError");
    py::register_exception<InputError>(m, "InputError");

    py::class_<PlotElement>(m, "PlotElement")
        .def(py::init<>())
        .def_readwrite("color_id", &PlotElement::color_id)
        .def_readwrite("value", &PlotElement::value);

    py::class_<FigureSpec>(m, "FigureSpec")
        .def(py::init<>())
        .def_readwrite("figure_id", &FigureSpec::figure_id)
        .def_property(
            "figure_type", [](const FigureSpec& s) { return to_string(s.figure_type); },
            [](FigureSpec& s, const std::string& t) { s.figure_type = figure_type_from_string(t); })
        .def_readwrite("elements", &FigureSpec::elements);

    py::class_<QuestionRecord>(m, "QuestionRecord")
        .def(py::init<>())
        .def_readwrite("figure_id", &QuestionRecord::figure_id)
        .def_property(
            "template_id", [](const QuestionRecord& q) { return to_string(q.template_id); },
            [](QuestionRecord& q, const std::string& t) { q.template_id = template_from_string(t); })
        .def_readwrite("color1_id", &QuestionRecord::color1_id)
        .def_property(
            "color2_id",
            [](const QuestionRecord& q) {
                return q.color2_id ? py::cast(*q.color2_id) : py::none();
            },
            [](QuestionRecord& q, py::object v) {
                if (v.is_none()) q.color2_id.reset();
                else q.color2_id = v.cast<int>();
            })
        .def_readwrite("text", &QuestionRecord::text)
        .def_readwrite("answer", &QuestionRecord::answer);

    m.def("palette", [](int k) {
        py::list out;
        for (const auto& e : x11_palette(k).entries) {
            py::dict d;
            d["id"] = e.id;
            d["name"] = e.name;
            d["rgb"] = py::make_tuple(e.rgb[0], e.rgb[1], e.rgb[2]);
            out.append(d);
        }
        return out;
    }, py::arg("k") = 100);

    m.def(
        "sample_figure",
        [](int palette, int min_elements, int max_elements, std::uint64_t seed) {
            CorpusConfig cc;
            cc.palette_size = palette;
            cc.min_elements = min_elements;
            cc.max_elements = max_elements;
            return sample_figure(cc, seed);
        },
        py::arg("palette") = 100, py::arg("min_elements") = 1, py::arg("max_elements") = 10,
        py::arg("seed") = 0);

    m.def("render", &py_render, py::arg("spec"), py::arg("palette") = 100,
          py::arg("image_size") = 128);

    m.def("answer_oracle", &answer_oracle);
    m.def(
        "gen_questions",
        [](const FigureSpec& spec, int palette, int min_elements, int max_elements,
           std::uint64_t seed) {
            CorpusConfig cc;
            cc.palette_size = palette;
            cc.min_elements = min_elements;
            cc.max_elements = max_elements;
            return gen_questions(spec, cc, seed);
        },
        py::arg("spec"), py::arg("palette") = 100, py::arg("min_elements") = 1,
        py::arg("max_elements") = 10, py::arg("seed") = 0);

    m.def(
        "generate_corpus",
        [](const std::string& dir, int figures, int palette, int min_elements, int max_elements,
           int image_size, std::uint64_t seed) {
            CorpusConfig cc;
            cc.palette_size = palette;
            cc.min_elements = min_elements;
            cc.max_elements = max_elements;
            cc.image_size = image_size;
            const Corpus corpus = generate_corpus(cc, figures, seed);
            write_corpus(corpus, dir);
            return py::make_tuple(corpus.figures.size(), corpus.questions.size());
        },
        py::arg("dir"), py::arg("figures"), py::arg("palette") = 100, py::arg("min_elements") = 1,
        py::arg("max_elements") = 10, py::arg("image_size") = 128, py::arg("seed") = 0);

    m.def("read_corpus", [](const std::string& dir) {
        const Corpus c = read_corpus(dir);
        py::dict d;
        d["palette_size"] = c.palette.size();
        d["figures"] = c.figures;
        d["questions"] = c.questions;
        return d;
    });

    m.def("spectral_target", [](const FigureSpec& spec, int stop_class) {
        const auto t = spectral_target(spec, stop_class);
        return std::vector<int>(t.labels.begin(), t.labels.end());
    });
    m.def("order_target", [](const FigureSpec& spec) {
        const auto t = order_target(spec);
        return std::vector<int>(t.ranks.begin(), t.ranks.end());
    });

    m.def("scaling_layer", &py_scaling_layer, py::arg("fmap"), py::arg("scale"));
    m.def("depthwise_reduce", &py_depthwise_reduce, py::arg("fmap"), py::arg("kernels"));
    m.def("decoder_forward", &py_decoder_forward, py::arg("steps"), py::arg("classes"),
          py::arg("rep"), py::arg("param_seed") = 1, py::arg("mode") = "prob_feed",
          py::arg("hidden") = 64, py::arg("layers") = 2, py::arg("sample_seed") = 1);

    m.def(
        "pretrain",
        [](const std::string& train_dir, const std::string& val_dir, const std::string& module,
           const std::string& profile, int epochs, double lr, std::uint64_t seed, int batch,
           int micro, const std::string& out_dir) {
            const auto train_ds = train::load_dataset(train_dir);
            const auto val_ds = train::load_dataset(val_dir);
            const ModelConfig mc =
                profile_config(profile, train_ds.meta.palette.size(), train_ds.image_side());
            const auto result = train::run_pretrain(
                train_ds, val_ds, module == "spectral", mc,
                make_plan("pretrain_" + module, epochs, lr, seed, batch, micro), out_dir);
            py::dict d = record_dict(result.record);
            d["checkpoint"] = result.checkpoint_path;
            return d;
        },
        py::arg("train_dir"), py::arg("val_dir"), py::arg("module"), py::arg("profile") = "desk",
        py::arg("epochs") = 5, py::arg("lr") = 2.5e-4, py::arg("seed") = 1, py::arg("batch") = 64,
        py::arg("micro") = 16, py::arg("out_dir") = "runs/py_pretrain");

    m.def(
        "evaluate",
        [](const std::string& ckpt, const std::string& split_dir) {
            const auto ds = train::load_dataset(split_dir);
            return eval::report_json(eval::evaluate(ckpt, ds));
        },
        py::arg("checkpoint"), py::arg("split_dir"));

    m.def(
        "evaluate_module",
        [](const std::string& ckpt, const std::string& which, const std::string& split_dir) {
            const auto ds = train::load_dataset(split_dir);
            const auto acc = eval::evaluate_module(ckpt, which, ds);
            return py::make_tuple(acc.per_element, acc.full_sequence);
        },
        py::arg("checkpoint"), py::arg("which"), py::arg("split_dir"));
}

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fignet/corpus.hpp"
#include "fignet/evalreport.hpp"
#include "fignet/model/config_json.hpp"
#include "fignet/train/flatconfig.hpp"
#include "fignet/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace fignet;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string device;
    std::string out_dir;
    std::uint64_t seed = 1;
    bool seed_given = false;
};

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&t));
    return buf;
}

void check_device(const std::string& flag) {
    std::string device = flag;
    if (device.empty()) {
        const char* env = std::getenv("FIGNET_DEVICE");
        device = env ? env : "cpu";
    }
    if (device != "cpu")
        throw ConfigError("device '" + device + "' is not available in this build (cpu only)");
}

train::FlatConfig effective_config(const GlobalOpts& g) {
    train::FlatConfig cfg;
    if (!g.config_path.empty()) cfg = train::FlatConfig::parse_file(g.config_path);
    for (const auto& kv : g.overrides) cfg.set_kv(kv);
    return cfg;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::string tok;
    std::istringstream in(csv);
    while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

ModelConfig model_config_from(const train::FlatConfig& cfg, int palette_size, int image_size) {
    const std::string profile = cfg.get_str("model.profile", "paper");
    ModelConfig mc;
    if (profile == "paper") mc = ModelConfig::paper(palette_size);
    else if (profile == "desk") mc = ModelConfig::desk(palette_size);
    else throw ConfigError("model.profile must be paper or desk, got '" + profile + "'");
    mc.image_size = image_size;
    mc.decoder_hidden = static_cast<int>(cfg.get_int("model.decoder_hidden", mc.decoder_hidden));
    mc.depthwise_kernels =
        static_cast<int>(cfg.get_int("model.depthwise_kernels", mc.depthwise_kernels));
    mc.question_embed = static_cast<int>(cfg.get_int("model.question_embed", mc.question_embed));
    mc.scaling_bias = cfg.get_bool("model.scaling_bias", mc.scaling_bias);
    mc.depthwise_bias = cfg.get_bool("model.depthwise_bias", mc.depthwise_bias);
    mc.decoder_init_both = cfg.get_bool("model.decoder_init_both", mc.decoder_init_both);
    if (cfg.has("model.conv_widths")) mc.conv_widths = parse_int_list(cfg.get_str("model.conv_widths", ""));
    if (cfg.has("model.spectral_fc")) mc.spectral_fc = parse_int_list(cfg.get_str("model.spectral_fc", ""));
    if (cfg.has("model.order_fc")) mc.order_fc = parse_int_list(cfg.get_str("model.order_fc", ""));
    if (cfg.has("model.answer_fc")) mc.answer_fc = parse_int_list(cfg.get_str("model.answer_fc", ""));
    mc.validate();
    return mc;
}

train::StagePlan stage_plan(const train::FlatConfig& cfg, const std::string& stage,
                            int default_epochs, double default_lr, const GlobalOpts& g) {
    train::StagePlan plan;
    plan.stage = stage;
    const std::string key = "stage." + stage + ".";
    plan.epochs = static_cast<int>(cfg.get_int(key + "epochs", default_epochs));
    plan.lr = cfg.get_double(key + "lr", default_lr);
    plan.batch_size = static_cast<int>(cfg.get_int(key + "batch", 64));
    plan.micro_batch = static_cast<int>(cfg.get_int(key + "micro", 16));
    plan.seed = static_cast<std::uint64_t>(
        cfg.get_int(key + "seed", static_cast<std::int64_t>(g.seed)));
    if (g.seed_given) plan.seed = g.seed;
    plan.early_stop_metric = cfg.get_double(key + "early_stop", 0.0);
    if (stage == "train_head") plan.frozen = {"spectral", "order"};
    plan.validate();
    return plan;
}

train::PipelinePlans pipeline_plans(const train::FlatConfig& cfg, const GlobalOpts& g) {
    train::PipelinePlans plans;
    plans.pretrain_spectral = stage_plan(cfg, "pretrain_spectral", 60, 2.5e-4, g);
    plans.pretrain_order = stage_plan(cfg, "pretrain_order", 60, 2.5e-4, g);
    plans.train_head = stage_plan(cfg, "train_head", 50, 2.5e-4, g);
    plans.finetune = stage_plan(cfg, "finetune_e2e", 50, 2.5e-5, g);
    return plans;
}

std::string resolve_out(const GlobalOpts& g, const std::string& stage) {
    if (!g.out_dir.empty()) return g.out_dir;
    return (fs::path("runs") / stage / timestamp()).string();
}

void echo_config(const std::string& out_dir, const train::FlatConfig& cfg) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "effective_config.txt");
    out << cfg.dump();
}

std::string split_dir(const std::string& corpus, const std::string& split) {
    const fs::path direct(corpus);
    if (fs::exists(direct / split)) return (direct / split).string();
    // a bare split directory is accepted as-is
    if (fs::exists(direct / "annotations.jsonl") || fs::exists(direct / "annotations.json"))
        return corpus;
    throw LoadError("no '" + split + "' split under: " + corpus);
}

int run_gen(const GlobalOpts& g, const std::string& out, int figures, int val_figures,
            int test_figures, int palette, int min_elements, int max_elements, int image_size) {
    CorpusConfig cc;
    cc.palette_size = palette;
    cc.min_elements = min_elements;
    cc.max_elements = max_elements;
    cc.image_size = image_size;
    const train::FlatConfig cfg = effective_config(g);
    cc.value_lo = cfg.get_double("corpus.value_lo", cc.value_lo);
    cc.value_hi = cfg.get_double("corpus.value_hi", cc.value_hi);
    cc.tie_rel_gap = cfg.get_double("corpus.tie_rel_gap", cc.tie_rel_gap);
    cc.validate();
    struct Split {
        const char* name;
        int count;
        std::uint64_t stream;
    };
    const Split splits[] = {{"train", figures, 0}, {"val", val_figures, 1}, {"test", test_figures, 2}};
    for (const auto& s : splits) {
        if (s.count <= 0) continue;
        const Corpus corpus = generate_corpus(cc, s.count, derive_seed(g.seed, 0xC0DE + s.stream));
        write_corpus(corpus, (fs::path(out) / s.name).string());
        std::cout << "wrote " << s.count << " figures, " << corpus.questions.size() << " questions -> "
                  << (fs::path(out) / s.name).string() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FigureNet laboratory: corpus generation, staged training, evaluation"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalOpts g;
    app.add_option("--config", g.config_path, "flat TOML-style config file")->envname("FIGNET_CONFIG");
    app.add_option("--set", g.overrides, "override a config key (key=value), repeatable");
    app.add_option("--device", g.device, "device selector (cpu)");
    auto* seed_opt = app.add_option("--seed", g.seed, "master seed");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus with train/val/test splits");
    std::string gen_out = "corpus";
    int gen_figures = 100, gen_val = -1, gen_test = -1, gen_palette = 100;
    int gen_min = 1, gen_max = 10, gen_img = 128;
    gen->add_option("--out", gen_out, "output corpus root");
    gen->add_option("--figures", gen_figures, "training figures");
    gen->add_option("--val-figures", gen_val, "validation figures (default figures/5)");
    gen->add_option("--test-figures", gen_test, "test figures (default figures/5)");
    gen->add_option("--palette", gen_palette, "palette size K");
    gen->add_option("--min-elements", gen_min, "minimum plot elements");
    gen->add_option("--max-elements", gen_max, "maximum plot elements");
    gen->add_option("--image-size", gen_img, "square image side");

    // pretrain
    auto* pretrain = app.add_subcommand("pretrain", "pre-train the spectral or order module");
    std::string pt_module, pt_corpus;
    pretrain->add_option("module", pt_module, "spectral | order")->required();
    pretrain->add_option("--corpus", pt_corpus, "corpus root")->required();
    pretrain->add_option("--out", g.out_dir, "run directory");

    // train-head
    auto* head = app.add_subcommand("train-head", "train the answer head on frozen modules");
    std::string th_corpus, th_spectral, th_order;
    head->add_option("--corpus", th_corpus, "corpus root")->required();
    head->add_option("--spectral-ckpt", th_spectral, "spectral module checkpoint")->required();
    head->add_option("--order-ckpt", th_order, "order module checkpoint")->required();
    head->add_option("--out", g.out_dir, "run directory");

    // finetune
    auto* ft = app.add_subcommand("finetune", "fine-tune the whole model end to end");
    std::string ft_corpus, ft_ckpt;
    ft->add_option("--corpus", ft_corpus, "corpus root")->required();
    ft->add_option("--ckpt", ft_ckpt, "train-head checkpoint")->required();
    ft->add_option("--out", g.out_dir, "run directory");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a corpus split");
    std::string ev_corpus, ev_ckpt, ev_split = "val", ev_format = "text", ev_module;
    ev->add_option("--corpus", ev_corpus, "corpus root")->required();
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--split", ev_split, "val | test")->check(CLI::IsMember({"val", "test", "train"}));
    ev->add_option("--format", ev_format, "text | csv | json")
        ->check(CLI::IsMember({"text", "csv", "json"}));
    ev->add_option("--module", ev_module, "evaluate one module instead (spectral | order)");
    ev->add_option("--out", g.out_dir, "report directory");

    // ablate
    auto* ab = app.add_subcommand("ablate", "run an ablation variant pipeline");
    std::string ab_variant, ab_corpus, ab_stages = "full";
    ab->add_option("--variant", ab_variant, "sampling | lstm1 | no_lstm | conv3x3")
        ->required()
        ->check(CLI::IsMember({"sampling", "lstm1", "no_lstm", "conv3x3"}));
    ab->add_option("--corpus", ab_corpus, "corpus root")->required();
    ab->add_option("--stages", ab_stages, "full | pretrain")
        ->check(CLI::IsMember({"full", "pretrain"}));
    ab->add_option("--out", g.out_dir, "run directory");

    // full-pipeline
    auto* fp = app.add_subcommand("full-pipeline", "pretrain both modules, train head, fine-tune");
    std::string fp_corpus;
    fp->add_option("--corpus", fp_corpus, "corpus root")->required();
    fp->add_option("--out", g.out_dir, "run directory");

    // train-baseline
    auto* tb = app.add_subcommand("train-baseline", "train a comparator model");
    std::string tb_model = "cnn_lstm", tb_corpus;
    tb->add_option("--model", tb_model, "cnn_lstm | rn")->check(CLI::IsMember({"cnn_lstm", "rn"}));
    tb->add_option("--corpus", tb_corpus, "corpus root")->required();
    tb->add_option("--out", g.out_dir, "run directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    g.seed_given = seed_opt->count() > 0;

    std::string stage = "startup";
    try {
        check_device(g.device);
        const train::FlatConfig cfg = effective_config(g);

        if (*gen) {
            stage = "gen";
            if (gen_val < 0) gen_val = std::max(1, gen_figures / 5);
            if (gen_test < 0) gen_test = std::max(1, gen_figures / 5);
            return run_gen(g, gen_out, gen_figures, gen_val, gen_test, gen_palette, gen_min, gen_max,
                           gen_img);
        }
        if (*pretrain) {
            stage = "pretrain_" + pt_module;
            if (pt_module != "spectral" && pt_module != "order")
                throw ConfigError("module must be spectral or order");
            const auto train_ds = train::load_dataset(split_dir(pt_corpus, "train"));
            const auto val_ds = train::load_dataset(split_dir(pt_corpus, "val"));
            const ModelConfig mc =
                model_config_from(cfg, train_ds.meta.palette.size(), train_ds.image_side());
            const auto plan = stage_plan(cfg, stage, 60, 2.5e-4, g);
            const std::string out = resolve_out(g, stage);
            echo_config(out, cfg);
            const auto result =
                train::run_pretrain(train_ds, val_ds, pt_module == "spectral", mc, plan, out);
            std::cout << stage << ": best val per-element accuracy " << result.record.best_metric
                      << " (epoch " << result.record.best_epoch << ") -> "
                      << result.checkpoint_path << "\n";
            return 0;
        }
        if (*head) {
            stage = "train_head";
            const auto train_ds = train::load_dataset(split_dir(th_corpus, "train"));
            const auto val_ds = train::load_dataset(split_dir(th_corpus, "val"));
            const auto plan = stage_plan(cfg, stage, 50, 2.5e-4, g);
            const std::string out = resolve_out(g, stage);
            echo_config(out, cfg);
            const auto result =
                train::run_train_head(train_ds, val_ds, th_spectral, th_order, plan, out);
            std::cout << stage << ": best val accuracy " << result.record.best_metric << " -> "
                      << result.checkpoint_path << "\n";
            return 0;
        }
        if (*ft) {
            stage = "finetune_e2e";
            const auto train_ds = train::load_dataset(split_dir(ft_corpus, "train"));
            const auto val_ds = train::load_dataset(split_dir(ft_corpus, "val"));
            const auto plan = stage_plan(cfg, stage, 50, 2.5e-5, g);
            const std::string out = resolve_out(g, stage);
            echo_config(out, cfg);
            const auto result = train::run_finetune(train_ds, val_ds, ft_ckpt, plan, out);
            std::cout << stage << ": best val accuracy " << result.record.best_metric << " -> "
                      << result.checkpoint_path << "\n";
            return 0;
        }
        if (*ev) {
            stage = "eval";
            const auto ds = train::load_dataset(split_dir(ev_corpus, ev_split));
            const std::string out = resolve_out(g, stage);
            if (!ev_module.empty()) {
                const auto acc = eval::evaluate_module(ev_ckpt, ev_module, ds);
                std::cout << ev_module << " per-element " << acc.per_element << " full-sequence "
                          << acc.full_sequence << "\n";
                return 0;
            }
            eval::EvalReport report = eval::evaluate(ev_ckpt, ds);
            report.split = ev_split;
            eval::render_tables({report}, ev_format, out);
            std::cout << "overall accuracy " << report.overall.accuracy() << " on " << ev_split
                      << " -> " << out << "\n";
            return 0;
        }
        if (*ab) {
            stage = "ablate_" + ab_variant;
            const auto train_ds = train::load_dataset(split_dir(ab_corpus, "train"));
            const auto val_ds = train::load_dataset(split_dir(ab_corpus, "val"));
            ModelConfig mc = model_config_from(cfg, train_ds.meta.palette.size(), train_ds.image_side());
            if (ab_variant == "sampling") mc.ablation.use_sampling = true;
            else if (ab_variant == "lstm1") mc.ablation.lstm_layers = 1;
            else if (ab_variant == "no_lstm") mc.ablation.no_lstm = true;
            else mc.ablation.replace_depthwise_3x3 = true;
            mc.validate();
            const std::string out = resolve_out(g, stage);
            echo_config(out, cfg);
            auto plans = pipeline_plans(cfg, g);
            if (ab_stages == "pretrain") {
                const auto sp = train::run_pretrain(train_ds, val_ds, true, mc,
                                                    plans.pretrain_spectral,
                                                    (fs::path(out) / "pretrain_spectral").string());
                const auto od = train::run_pretrain(train_ds, val_ds, false, mc,
                                                    plans.pretrain_order,
                                                    (fs::path(out) / "pretrain_order").string());
                std::cout << stage << ": spectral " << sp.record.best_metric << ", order "
                          << od.record.best_metric << "\n";
                return 0;
            }
            const auto result = train::run_full_pipeline(train_ds, val_ds, mc, plans, out);
            std::cout << stage << ": final val accuracy " << result.finetune.record.best_metric
                      << " -> " << result.finetune.checkpoint_path << "\n";
            return 0;
        }
        if (*fp) {
            stage = "full-pipeline";
            const auto train_ds = train::load_dataset(split_dir(fp_corpus, "train"));
            const auto val_ds = train::load_dataset(split_dir(fp_corpus, "val"));
            const ModelConfig mc =
                model_config_from(cfg, train_ds.meta.palette.size(), train_ds.image_side());
            const std::string out = resolve_out(g, stage);
            echo_config(out, cfg);
            const auto result = train::run_full_pipeline(train_ds, val_ds, mc, pipeline_plans(cfg, g), out);
            std::cout << "pipeline: final val accuracy " << result.finetune.record.best_metric
                      << " -> " << result.finetune.checkpoint_path << "\n";
            return 0;
        }
        if (*tb) {
            stage = "baseline_" + tb_model;
            const auto train_ds = train::load_dataset(split_dir(tb_corpus, "train"));
            const auto val_ds = train::load_dataset(split_dir(tb_corpus, "val"));
            auto plan = stage_plan(cfg, "baseline", 20, 2.5e-4, g);
            plan.stage = stage;
            const std::string out = resolve_out(g, stage);
            echo_config(out, cfg);
            const auto result = train::run_train_baseline(train_ds, val_ds, tb_model, plan, out);
            std::cout << stage << ": best val accuracy " << result.record.best_metric << " -> "
                      << result.checkpoint_path << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

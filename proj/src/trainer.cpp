#include "fignet/train/trainer.hpp"

#include <chrono>
#include <filesystem>
#include <json.hpp>
#include <numeric>

#include "fignet/model/config_json.hpp"
#include "fignet/train/adam.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fignet::train {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const auto j = rng.uniform_int(static_cast<std::uint64_t>(i) + 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

std::vector<std::vector<int>> slot_targets(const Dataset& ds, bool spectral,
                                           const std::vector<int>& figs, std::size_t offset,
                                           std::size_t count) {
    std::vector<std::vector<int>> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& arr = spectral ? ds.spectral_targets[static_cast<std::size_t>(figs[offset + i])]
                                   : ds.order_targets[static_cast<std::size_t>(figs[offset + i])];
        out[i].assign(arr.begin(), arr.end());
    }
    return out;
}

struct Snapshot {
    std::vector<nn::MatF> values;
    void capture(const nn::ParamRefs<float>& params) {
        values.clear();
        for (const auto* p : params) values.push_back(p->w);
    }
    void restore(const nn::ParamRefs<float>& params) const {
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->w = values[i];
    }
};

void check_dataset(const Dataset& ds, const ModelConfig& cfg) {
    if (ds.meta.figures.empty()) throw ConfigError("corpus split has no figures");
    if (ds.meta.questions.empty() && ds.meta.figures.empty())
        throw ConfigError("corpus split has no annotations");
    if (ds.meta.palette.size() != cfg.palette_size)
        throw ConfigError("model palette size " + std::to_string(cfg.palette_size) +
                          " != corpus palette size " + std::to_string(ds.meta.palette.size()));
    if (ds.image_side() != cfg.image_size)
        throw ConfigError("model image size != corpus image size");
    if (cfg.slots != kMaxSlots) throw ConfigError("training requires the 11-slot configuration");
}

std::string module_header(const std::string& stage, const std::string& module,
                          const ModelConfig& cfg, int best_epoch, double val_metric) {
    json j{{"format", 1},
           {"kind", "module"},
           {"module", module},
           {"stage", stage},
           {"epoch", best_epoch},
           {"val_metric", val_metric},
           {"model", json::parse(model_config_json(cfg))}};
    return j.dump();
}

std::string full_header(const std::string& stage, const ModelConfig& cfg, const Vocab& vocab,
                        int best_epoch, double val_metric, const std::string& model_kind) {
    json j{{"format", 1},
           {"kind", "full"},
           {"model_kind", model_kind},
           {"stage", stage},
           {"epoch", best_epoch},
           {"val_metric", val_metric},
           {"model", json::parse(model_config_json(cfg))},
           {"vocab", json::parse(vocab.to_json())}};
    return j.dump();
}

// answer-head input rows for a list of questions
nn::MatF gather_answer_input(const nn::MatF& fig_reps, const nn::MatF& q_enc,
                             const nn::MatF& color_enc, const Dataset& ds,
                             const std::vector<int>& questions, std::size_t offset,
                             std::size_t count, const std::vector<int>* local_fig) {
    const Eigen::Index d_rep = fig_reps.cols(), d_q = q_enc.cols(), d_c = color_enc.cols();
    nn::MatF x(static_cast<Eigen::Index>(count), d_rep + d_q + d_c);
    for (std::size_t i = 0; i < count; ++i) {
        const int qi = questions[offset + i];
        const int fig = local_fig ? (*local_fig)[i] : ds.question_figure[static_cast<std::size_t>(qi)];
        x.block(static_cast<Eigen::Index>(i), 0, 1, d_rep) = fig_reps.row(fig);
        x.block(static_cast<Eigen::Index>(i), d_rep, 1, d_q) = q_enc.row(static_cast<Eigen::Index>(i));
        x.block(static_cast<Eigen::Index>(i), d_rep + d_q, 1, d_c) =
            color_enc.row(static_cast<Eigen::Index>(i));
    }
    return x;
}

std::vector<std::pair<int, std::optional<int>>> question_colors(const Dataset& ds,
                                                                const std::vector<int>& questions,
                                                                std::size_t offset,
                                                                std::size_t count) {
    std::vector<std::pair<int, std::optional<int>>> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& q = ds.meta.questions[static_cast<std::size_t>(questions[offset + i])];
        out[i] = {q.color1_id, q.color2_id};
    }
    return out;
}

std::vector<float> question_labels(const Dataset& ds, const std::vector<int>& questions,
                                   std::size_t offset, std::size_t count) {
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = ds.meta.questions[static_cast<std::size_t>(questions[offset + i])].answer ? 1.0f : 0.0f;
    return out;
}

std::vector<std::vector<int>> gather_tokens(const std::vector<std::vector<int>>& all,
                                            const std::vector<int>& questions, std::size_t offset,
                                            std::size_t count) {
    std::vector<std::vector<int>> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = all[static_cast<std::size_t>(questions[offset + i])];
    return out;
}

// QA accuracy of the answer path given fixed per-figure representations
double qa_accuracy(FigureNet<float>& net, const Dataset& ds, const nn::MatF& fig_reps,
                   const std::vector<std::vector<int>>& tokens, int micro) {
    std::vector<int> questions(static_cast<std::size_t>(ds.question_count()));
    std::iota(questions.begin(), questions.end(), 0);
    long correct = 0;
    for (std::size_t off = 0; off < questions.size(); off += static_cast<std::size_t>(micro)) {
        const auto count = std::min<std::size_t>(micro, questions.size() - off);
        const nn::MatF q_enc = net.question.forward(gather_tokens(tokens, questions, off, count));
        const nn::MatF c_enc = encode_question_colors<float>(
            question_colors(ds, questions, off, count), net.cfg.palette_size);
        const nn::MatF x = gather_answer_input(fig_reps, q_enc, c_enc, ds, questions, off, count, nullptr);
        const nn::MatF logits = net.answer.forward(x);
        for (std::size_t i = 0; i < count; ++i) {
            const bool yes = logits(static_cast<Eigen::Index>(i), 0) >= 0.0f;
            if (yes == ds.meta.questions[static_cast<std::size_t>(questions[off + i])].answer) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(ds.question_count());
}

}  // namespace

std::uint64_t hash_params(const nn::ParamRefs<float>& params) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto* p : params)
        h = fnv1a64(p->w.data(), static_cast<std::size_t>(p->w.size()) * sizeof(float), h);
    return h;
}

std::pair<double, double> sequence_accuracy(const std::vector<std::array<int, kMaxSlots>>& predicted,
                                            const std::vector<std::array<int, kMaxSlots>>& target) {
    if (predicted.size() != target.size()) throw ShapeError("prediction/target count mismatch");
    if (predicted.empty()) return {0.0, 0.0};
    long element_hits = 0, sequence_hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        bool all = true;
        for (int t = 0; t < kMaxSlots; ++t) {
            if (predicted[i][static_cast<std::size_t>(t)] == target[i][static_cast<std::size_t>(t)])
                ++element_hits;
            else
                all = false;
        }
        if (all) ++sequence_hits;
    }
    const double denom = static_cast<double>(predicted.size());
    return {static_cast<double>(element_hits) / (denom * kMaxSlots),
            static_cast<double>(sequence_hits) / denom};
}

std::pair<double, double> module_accuracy(SlotModule<float>& module, const Dataset& ds,
                                          bool spectral, int micro_batch, nn::FeedMode mode) {
    std::vector<int> figs(static_cast<std::size_t>(ds.figure_count()));
    std::iota(figs.begin(), figs.end(), 0);
    std::vector<std::array<int, kMaxSlots>> predicted(figs.size());
    for (std::size_t off = 0; off < figs.size(); off += static_cast<std::size_t>(micro_batch)) {
        const auto count = std::min<std::size_t>(micro_batch, figs.size() - off);
        const nn::MatF imgs = ds.image_batch(figs, off, count);
        const auto probs = module.forward(imgs, static_cast<int>(count), mode, nullptr);
        for (std::size_t i = 0; i < count; ++i)
            for (int t = 0; t < module.slots; ++t) {
                Eigen::Index argmax = 0;
                probs[static_cast<std::size_t>(t)].row(static_cast<Eigen::Index>(i)).maxCoeff(&argmax);
                predicted[off + i][static_cast<std::size_t>(t)] = static_cast<int>(argmax);
            }
    }
    std::vector<std::array<int, kMaxSlots>> target(figs.size());
    for (std::size_t i = 0; i < figs.size(); ++i)
        target[i] = spectral ? ds.spectral_targets[i] : ds.order_targets[i];
    return sequence_accuracy(predicted, target);
}

void save_model_checkpoint(const std::string& path, FigureNet<float>& net, const Vocab& vocab,
                           const std::string& stage, int epoch, double val_metric) {
    save_checkpoint(path, full_header(stage, net.cfg, vocab, epoch, val_metric, "figurenet"),
                    net.all_params());
}

StageResult run_pretrain(const Dataset& train, const Dataset& val, bool spectral,
                         const ModelConfig& cfg, const StagePlan& plan, const std::string& out_dir) {
    plan.validate();
    cfg.validate();
    check_dataset(train, cfg);
    check_dataset(val, cfg);
    if (train.meta.figures.empty()) throw ConfigError("pretraining needs an annotated corpus");

    const std::string name = spectral ? "spectral" : "order";
    SlotModule<float> module;
    module.configure(name, cfg, spectral);
    Rng init_rng(derive_seed(plan.seed, spectral ? 0 : 1));
    module.init(init_rng);
    nn::ParamRefs<float> params;
    module.collect(params);
    Adam adam(params, plan.lr);

    RunRecord record;
    record.stage = plan.stage;
    Snapshot best;
    for (int epoch = 0; epoch < plan.epochs; ++epoch) {
        const auto t0 = Clock::now();
        Rng shuffle_rng(derive_seed(plan.seed, 100 + static_cast<std::uint64_t>(epoch)));
        Rng sample_rng(derive_seed(plan.seed, 10000 + static_cast<std::uint64_t>(epoch)));
        const auto figs = shuffled_indices(train.figure_count(), shuffle_rng);
        double epoch_loss = 0.0;
        long seen = 0;
        for (std::size_t bstart = 0; bstart < figs.size();
             bstart += static_cast<std::size_t>(plan.batch_size)) {
            const auto bcount = std::min<std::size_t>(plan.batch_size, figs.size() - bstart);
            adam.zero_grad();
            for (std::size_t off = bstart; off < bstart + bcount;
                 off += static_cast<std::size_t>(plan.micro_batch)) {
                const auto count = std::min<std::size_t>(plan.micro_batch, bstart + bcount - off);
                const nn::MatF imgs = train.image_batch(figs, off, count);
                const auto probs =
                    module.forward(imgs, static_cast<int>(count), train_feed(cfg), &sample_rng);
                const auto targets = slot_targets(train, spectral, figs, off, count);
                std::vector<nn::MatF> dprobs;
                const double loss = nn::sequence_cross_entropy(probs, targets, &dprobs);
                const float w = static_cast<float>(count) / static_cast<float>(bcount);
                for (auto& d : dprobs) d *= w;
                module.backward(dprobs, train_feed(cfg));
                epoch_loss += loss * static_cast<double>(count);
                seen += static_cast<long>(count);
            }
            adam.step();
        }
        EpochLog log;
        log.train_loss = epoch_loss / static_cast<double>(seen);
        log.val_metric = module_accuracy(module, val, spectral, plan.micro_batch, eval_feed(cfg)).first;
        log.seconds = elapsed(t0);
        const bool improved = record.epochs.empty() || log.val_metric > record.best_metric;
        record.note_epoch(log);
        if (improved) best.capture(params);
        if (plan.early_stop_metric > 0.0 && record.best_metric >= plan.early_stop_metric) break;
    }
    best.restore(params);

    fs::create_directories(out_dir);
    StageResult result;
    result.record = record;
    result.checkpoint_path = (fs::path(out_dir) / "checkpoint.fnck").string();
    save_checkpoint(result.checkpoint_path,
                    module_header(plan.stage, name, cfg, record.best_epoch, record.best_metric),
                    params);
    write_run_record(out_dir, record, plan);
    return result;
}

nn::MatF compute_figure_reps(FigureNet<float>& net, const Dataset& ds, int micro_batch) {
    std::vector<int> figs(static_cast<std::size_t>(ds.figure_count()));
    std::iota(figs.begin(), figs.end(), 0);
    nn::MatF reps(ds.figure_count(), net.cfg.figure_rep_dim());
    for (std::size_t off = 0; off < figs.size(); off += static_cast<std::size_t>(micro_batch)) {
        const auto count = std::min<std::size_t>(micro_batch, figs.size() - off);
        const nn::MatF imgs = ds.image_batch(figs, off, count);
        const auto sp = net.spectral.forward(imgs, static_cast<int>(count), eval_feed(net.cfg), nullptr);
        const auto od = net.order.forward(imgs, static_cast<int>(count), eval_feed(net.cfg), nullptr);
        reps.middleRows(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(count)) =
            build_figure_representation(sp, od);
    }
    return reps;
}

StageResult run_train_head(const Dataset& train, const Dataset& val,
                           const std::string& spectral_ckpt, const std::string& order_ckpt,
                           const StagePlan& plan, const std::string& out_dir) {
    plan.validate();
    const Checkpoint sp_ck = load_checkpoint(spectral_ckpt);
    const Checkpoint od_ck = load_checkpoint(order_ckpt);
    const json sp_header = json::parse(sp_ck.header_json);
    const json od_header = json::parse(od_ck.header_json);
    if (sp_header.value("module", "") != "spectral")
        throw LoadError("expected a spectral module checkpoint: " + spectral_ckpt);
    if (od_header.value("module", "") != "order")
        throw LoadError("expected an order module checkpoint: " + order_ckpt);
    if (sp_header.at("model").dump() != od_header.at("model").dump())
        throw LoadError("module checkpoints were trained with different configs");
    const ModelConfig cfg = model_config_from_json(sp_header.at("model").dump());
    check_dataset(train, cfg);
    check_dataset(val, cfg);
    if (train.meta.questions.empty()) throw ConfigError("head training needs question records");

    std::vector<std::string> texts;
    for (const auto& q : train.meta.questions) texts.push_back(q.text);
    const Vocab vocab = Vocab::build(texts);

    FigureNet<float> net;
    net.build(cfg, vocab.size());
    net.init(plan.seed);
    apply_checkpoint(sp_ck, net.partition("spectral"));
    apply_checkpoint(od_ck, net.partition("order"));

    // modules are frozen for this stage: representations are fixed
    const nn::MatF reps_train = compute_figure_reps(net, train, plan.micro_batch);
    const nn::MatF reps_val = compute_figure_reps(net, val, plan.micro_batch);
    const auto tokens_train = train.encode_questions(vocab);
    const auto tokens_val = val.encode_questions(vocab);

    nn::ParamRefs<float> trainable;
    for (auto* p : net.partition("question")) trainable.push_back(p);
    for (auto* p : net.partition("answer")) trainable.push_back(p);
    Adam adam(trainable, plan.lr);

    nn::ParamRefs<float> frozen;
    for (auto* p : net.partition("spectral")) frozen.push_back(p);
    for (auto* p : net.partition("order")) frozen.push_back(p);
    const std::uint64_t frozen_hash = hash_params(frozen);

    RunRecord record;
    record.stage = plan.stage;
    Snapshot best;
    nn::ParamRefs<float> all = net.all_params();
    for (int epoch = 0; epoch < plan.epochs; ++epoch) {
        const auto t0 = Clock::now();
        Rng shuffle_rng(derive_seed(plan.seed, 100 + static_cast<std::uint64_t>(epoch)));
        auto questions = shuffled_indices(train.question_count(), shuffle_rng);
        double epoch_loss = 0.0;
        long seen = 0;
        for (std::size_t bstart = 0; bstart < questions.size();
             bstart += static_cast<std::size_t>(plan.batch_size)) {
            const auto bcount = std::min<std::size_t>(plan.batch_size, questions.size() - bstart);
            adam.zero_grad();
            for (std::size_t off = bstart; off < bstart + bcount;
                 off += static_cast<std::size_t>(plan.micro_batch)) {
                const auto count = std::min<std::size_t>(plan.micro_batch, bstart + bcount - off);
                const nn::MatF q_enc =
                    net.question.forward(gather_tokens(tokens_train, questions, off, count));
                const nn::MatF c_enc = encode_question_colors<float>(
                    question_colors(train, questions, off, count), cfg.palette_size);
                const nn::MatF x =
                    gather_answer_input(reps_train, q_enc, c_enc, train, questions, off, count, nullptr);
                const nn::MatF logits = net.answer.forward(x);
                nn::MatF dlogits;
                const double loss = nn::sigmoid_cross_entropy(
                    logits, question_labels(train, questions, off, count), &dlogits);
                dlogits *= static_cast<float>(count) / static_cast<float>(bcount);
                const nn::MatF dx = net.answer.backward(dlogits);
                net.question.backward(dx.middleCols(reps_train.cols(), q_enc.cols()));
                epoch_loss += loss * static_cast<double>(count);
                seen += static_cast<long>(count);
            }
            adam.step();
        }
        if (hash_params(frozen) != frozen_hash)
            throw NumericError("frozen partition changed during train_head");
        EpochLog log;
        log.train_loss = epoch_loss / static_cast<double>(seen);
        log.val_metric = qa_accuracy(net, val, reps_val, tokens_val, plan.micro_batch);
        log.seconds = elapsed(t0);
        const bool improved = record.epochs.empty() || log.val_metric > record.best_metric;
        record.note_epoch(log);
        if (improved) best.capture(all);
        if (plan.early_stop_metric > 0.0 && record.best_metric >= plan.early_stop_metric) break;
    }
    best.restore(all);

    fs::create_directories(out_dir);
    StageResult result;
    result.record = record;
    result.checkpoint_path = (fs::path(out_dir) / "checkpoint.fnck").string();
    save_checkpoint(result.checkpoint_path,
                    full_header(plan.stage, cfg, vocab, record.best_epoch, record.best_metric,
                                "figurenet"),
                    all);
    write_run_record(out_dir, record, plan);
    return result;
}

LoadedModel model_from_checkpoint(const std::string& path) {
    const Checkpoint ck = load_checkpoint(path);
    const json header = json::parse(ck.header_json);
    if (header.value("kind", "") != "full")
        throw LoadError("not a full-model checkpoint: " + path);
    LoadedModel m;
    m.cfg = model_config_from_json(header.at("model").dump());
    m.vocab = Vocab::from_json(header.at("vocab").dump());
    m.net.build(m.cfg, m.vocab.size());
    apply_checkpoint(ck, m.net.all_params());
    return m;
}

StageResult run_finetune(const Dataset& train, const Dataset& val, const std::string& head_ckpt,
                         const StagePlan& plan, const std::string& out_dir) {
    plan.validate();
    LoadedModel lm = model_from_checkpoint(head_ckpt);
    FigureNet<float>& net = lm.net;
    const ModelConfig& cfg = lm.cfg;
    check_dataset(train, cfg);
    check_dataset(val, cfg);

    const auto tokens_train = train.encode_questions(lm.vocab);
    const auto tokens_val = val.encode_questions(lm.vocab);

    nn::ParamRefs<float> all = net.all_params();
    Adam adam(all, plan.lr);

    RunRecord record;
    record.stage = plan.stage;
    Snapshot best;
    const Eigen::Index rep_dim = cfg.figure_rep_dim();
    for (int epoch = 0; epoch < plan.epochs; ++epoch) {
        const auto t0 = Clock::now();
        Rng shuffle_rng(derive_seed(plan.seed, 100 + static_cast<std::uint64_t>(epoch)));
        Rng sample_rng(derive_seed(plan.seed, 10000 + static_cast<std::uint64_t>(epoch)));
        const auto figs = shuffled_indices(train.figure_count(), shuffle_rng);
        double epoch_loss = 0.0;
        long seen = 0;
        for (std::size_t bstart = 0; bstart < figs.size();
             bstart += static_cast<std::size_t>(plan.batch_size)) {
            const auto bcount = std::min<std::size_t>(plan.batch_size, figs.size() - bstart);
            // questions in this figure batch (loss is a mean over questions)
            std::size_t batch_questions = 0;
            for (std::size_t i = bstart; i < bstart + bcount; ++i)
                batch_questions +=
                    train.figure_questions[static_cast<std::size_t>(figs[i])].size();
            if (batch_questions == 0) continue;
            adam.zero_grad();
            for (std::size_t off = bstart; off < bstart + bcount;
                 off += static_cast<std::size_t>(plan.micro_batch)) {
                const auto count = std::min<std::size_t>(plan.micro_batch, bstart + bcount - off);
                std::vector<int> questions;
                std::vector<int> local_fig;  // question -> row inside the micro group
                for (std::size_t i = 0; i < count; ++i)
                    for (int qi : train.figure_questions[static_cast<std::size_t>(figs[off + i])]) {
                        questions.push_back(qi);
                        local_fig.push_back(static_cast<int>(i));
                    }
                if (questions.empty()) continue;

                const nn::MatF imgs = train.image_batch(figs, off, count);
                const auto sp =
                    net.spectral.forward(imgs, static_cast<int>(count), train_feed(cfg), &sample_rng);
                const auto od =
                    net.order.forward(imgs, static_cast<int>(count), train_feed(cfg), &sample_rng);
                const nn::MatF reps = build_figure_representation(sp, od);

                const nn::MatF q_enc =
                    net.question.forward(gather_tokens(tokens_train, questions, 0, questions.size()));
                const nn::MatF c_enc = encode_question_colors<float>(
                    question_colors(train, questions, 0, questions.size()), cfg.palette_size);
                const nn::MatF x = gather_answer_input(reps, q_enc, c_enc, train, questions, 0,
                                                       questions.size(), &local_fig);
                const nn::MatF logits = net.answer.forward(x);
                nn::MatF dlogits;
                const double loss = nn::sigmoid_cross_entropy(
                    logits, question_labels(train, questions, 0, questions.size()), &dlogits);
                dlogits *= static_cast<float>(questions.size()) / static_cast<float>(batch_questions);
                const nn::MatF dx = net.answer.backward(dlogits);
                net.question.backward(dx.middleCols(rep_dim, q_enc.cols()));

                // scatter per-question representation gradients back to figures
                nn::MatF dreps = nn::MatF::Zero(static_cast<Eigen::Index>(count), rep_dim);
                for (std::size_t i = 0; i < questions.size(); ++i)
                    dreps.row(local_fig[i]) += dx.block(static_cast<Eigen::Index>(i), 0, 1, rep_dim);
                auto [dsp, dod] = split_figure_representation(dreps, cfg.slots,
                                                              cfg.spectral_classes(),
                                                              cfg.order_classes());
                net.spectral.backward(dsp, train_feed(cfg));
                net.order.backward(dod, train_feed(cfg));
                epoch_loss += loss * static_cast<double>(questions.size());
                seen += static_cast<long>(questions.size());
            }
            adam.step();
        }
        EpochLog log;
        log.train_loss = epoch_loss / static_cast<double>(seen);
        const nn::MatF reps_val = compute_figure_reps(net, val, plan.micro_batch);
        log.val_metric = qa_accuracy(net, val, reps_val, tokens_val, plan.micro_batch);
        log.seconds = elapsed(t0);
        const bool improved = record.epochs.empty() || log.val_metric > record.best_metric;
        record.note_epoch(log);
        if (improved) best.capture(all);
        if (plan.early_stop_metric > 0.0 && record.best_metric >= plan.early_stop_metric) break;
    }
    best.restore(all);

    fs::create_directories(out_dir);
    StageResult result;
    result.record = record;
    result.checkpoint_path = (fs::path(out_dir) / "checkpoint.fnck").string();
    save_checkpoint(result.checkpoint_path,
                    full_header(plan.stage, cfg, lm.vocab, record.best_epoch, record.best_metric,
                                "figurenet"),
                    all);
    write_run_record(out_dir, record, plan);
    return result;
}

StageResult run_train_baseline(const Dataset& train, const Dataset& val, const std::string& kind,
                               const StagePlan& plan, const std::string& out_dir) {
    plan.validate();
    if (kind != "cnn_lstm" && kind != "rn") throw ConfigError("unknown baseline: " + kind);
    if (train.meta.questions.empty()) throw ConfigError("baseline training needs question records");

    std::vector<std::string> texts;
    for (const auto& q : train.meta.questions) texts.push_back(q.text);
    const Vocab vocab = Vocab::build(texts);
    const auto tokens_train = train.encode_questions(vocab);
    const auto tokens_val = val.encode_questions(vocab);
    const int side = train.image_side();

    CnnLstm<float> cnn;
    RelationNetwork<float> rn;
    nn::ParamRefs<float> params;
    Rng init_rng(derive_seed(plan.seed, 7));
    if (kind == "cnn_lstm") {
        cnn.configure(side, vocab.size());
        cnn.init(init_rng);
        params = cnn.params();
    } else {
        rn.configure(side, vocab.size());
        rn.init(init_rng);
        params = rn.params();
    }
    Adam adam(params, plan.lr);

    auto evaluate_split = [&](const Dataset& ds, const std::vector<std::vector<int>>& tokens) {
        long correct = 0;
        std::vector<int> questions(static_cast<std::size_t>(ds.question_count()));
        std::iota(questions.begin(), questions.end(), 0);
        for (std::size_t off = 0; off < questions.size();
             off += static_cast<std::size_t>(plan.micro_batch)) {
            const auto count = std::min<std::size_t>(plan.micro_batch, questions.size() - off);
            std::vector<int> q_figs(count);
            for (std::size_t i = 0; i < count; ++i)
                q_figs[i] = ds.question_figure[static_cast<std::size_t>(questions[off + i])];
            const nn::MatF imgs = ds.image_batch(q_figs, 0, count);
            const auto toks = gather_tokens(tokens, questions, off, count);
            const nn::MatF logits = kind == "cnn_lstm"
                                        ? cnn.forward(imgs, static_cast<int>(count), toks)
                                        : rn.forward(imgs, static_cast<int>(count), toks);
            for (std::size_t i = 0; i < count; ++i) {
                const bool yes = logits(static_cast<Eigen::Index>(i), 0) >= 0.0f;
                if (yes == ds.meta.questions[static_cast<std::size_t>(questions[off + i])].answer)
                    ++correct;
            }
        }
        return static_cast<double>(correct) / static_cast<double>(ds.question_count());
    };

    RunRecord record;
    record.stage = plan.stage.empty() ? ("baseline_" + kind) : plan.stage;
    Snapshot best;
    for (int epoch = 0; epoch < plan.epochs; ++epoch) {
        const auto t0 = Clock::now();
        Rng shuffle_rng(derive_seed(plan.seed, 100 + static_cast<std::uint64_t>(epoch)));
        double epoch_loss = 0.0;
        long seen = 0;
        if (kind == "cnn_lstm") {
            // figure-grouped batches: one stem pass per figure
            const auto figs = shuffled_indices(train.figure_count(), shuffle_rng);
            for (std::size_t bstart = 0; bstart < figs.size();
                 bstart += static_cast<std::size_t>(plan.batch_size)) {
                const auto bcount = std::min<std::size_t>(plan.batch_size, figs.size() - bstart);
                std::size_t batch_questions = 0;
                for (std::size_t i = bstart; i < bstart + bcount; ++i)
                    batch_questions +=
                        train.figure_questions[static_cast<std::size_t>(figs[i])].size();
                if (batch_questions == 0) continue;
                adam.zero_grad();
                for (std::size_t off = bstart; off < bstart + bcount;
                     off += static_cast<std::size_t>(plan.micro_batch)) {
                    const auto count = std::min<std::size_t>(plan.micro_batch, bstart + bcount - off);
                    std::vector<int> questions;
                    std::vector<int> local_fig;
                    for (std::size_t i = 0; i < count; ++i)
                        for (int qi :
                             train.figure_questions[static_cast<std::size_t>(figs[off + i])]) {
                            questions.push_back(qi);
                            local_fig.push_back(static_cast<int>(i));
                        }
                    if (questions.empty()) continue;
                    const nn::MatF imgs = train.image_batch(figs, off, count);
                    const nn::MatF emb = cnn.image_embedding(imgs, static_cast<int>(count));
                    nn::MatF emb_rows(static_cast<Eigen::Index>(questions.size()), emb.cols());
                    for (std::size_t i = 0; i < questions.size(); ++i)
                        emb_rows.row(static_cast<Eigen::Index>(i)) = emb.row(local_fig[i]);
                    const nn::MatF logits = cnn.forward_joint(
                        emb_rows, gather_tokens(tokens_train, questions, 0, questions.size()));
                    nn::MatF dlogits;
                    const double loss = nn::sigmoid_cross_entropy(
                        logits, question_labels(train, questions, 0, questions.size()), &dlogits);
                    dlogits *=
                        static_cast<float>(questions.size()) / static_cast<float>(batch_questions);
                    const nn::MatF demb_rows = cnn.backward_joint(dlogits);
                    nn::MatF demb = nn::MatF::Zero(static_cast<Eigen::Index>(count), emb.cols());
                    for (std::size_t i = 0; i < questions.size(); ++i)
                        demb.row(local_fig[i]) += demb_rows.row(static_cast<Eigen::Index>(i));
                    cnn.backward_image(demb);
                    epoch_loss += loss * static_cast<double>(questions.size());
                    seen += static_cast<long>(questions.size());
                }
                adam.step();
            }
        } else {
            auto questions = shuffled_indices(train.question_count(), shuffle_rng);
            for (std::size_t bstart = 0; bstart < questions.size();
                 bstart += static_cast<std::size_t>(plan.batch_size)) {
                const auto bcount = std::min<std::size_t>(plan.batch_size, questions.size() - bstart);
                adam.zero_grad();
                for (std::size_t off = bstart; off < bstart + bcount;
                     off += static_cast<std::size_t>(plan.micro_batch)) {
                    const auto count = std::min<std::size_t>(plan.micro_batch, bstart + bcount - off);
                    std::vector<int> q_figs(count);
                    for (std::size_t i = 0; i < count; ++i)
                        q_figs[i] = train.question_figure[static_cast<std::size_t>(questions[off + i])];
                    const nn::MatF imgs = train.image_batch(q_figs, 0, count);
                    const nn::MatF logits = rn.forward(
                        imgs, static_cast<int>(count), gather_tokens(tokens_train, questions, off, count));
                    nn::MatF dlogits;
                    const double loss = nn::sigmoid_cross_entropy(
                        logits, question_labels(train, questions, off, count), &dlogits);
                    dlogits *= static_cast<float>(count) / static_cast<float>(bcount);
                    rn.backward(dlogits, static_cast<int>(count));
                    epoch_loss += loss * static_cast<double>(count);
                    seen += static_cast<long>(count);
                }
                adam.step();
            }
        }
        EpochLog log;
        log.train_loss = epoch_loss / static_cast<double>(seen);
        log.val_metric = evaluate_split(val, tokens_val);
        log.seconds = elapsed(t0);
        const bool improved = record.epochs.empty() || log.val_metric > record.best_metric;
        record.note_epoch(log);
        if (improved) best.capture(params);
    }
    best.restore(params);

    fs::create_directories(out_dir);
    json header{{"format", 1},
                {"kind", "full"},
                {"model_kind", kind},
                {"stage", record.stage},
                {"epoch", record.best_epoch},
                {"val_metric", record.best_metric},
                {"image_size", side},
                {"palette_size", train.meta.palette.size()},
                {"vocab", json::parse(vocab.to_json())}};
    StageResult result;
    result.record = record;
    result.checkpoint_path = (fs::path(out_dir) / "checkpoint.fnck").string();
    save_checkpoint(result.checkpoint_path, header.dump(), params);
    write_run_record(out_dir, record, plan);
    return result;
}

PipelineResult run_full_pipeline(const Dataset& train, const Dataset& val, const ModelConfig& cfg,
                                 const PipelinePlans& plans, const std::string& out_root) {
    PipelineResult result;
    result.pretrain_spectral = run_pretrain(train, val, true, cfg, plans.pretrain_spectral,
                                            (fs::path(out_root) / "pretrain_spectral").string());
    result.pretrain_order = run_pretrain(train, val, false, cfg, plans.pretrain_order,
                                         (fs::path(out_root) / "pretrain_order").string());
    result.train_head = run_train_head(train, val, result.pretrain_spectral.checkpoint_path,
                                       result.pretrain_order.checkpoint_path, plans.train_head,
                                       (fs::path(out_root) / "train_head").string());
    result.finetune = run_finetune(train, val, result.train_head.checkpoint_path, plans.finetune,
                                   (fs::path(out_root) / "finetune").string());
    return result;
}

}  // namespace fignet::train

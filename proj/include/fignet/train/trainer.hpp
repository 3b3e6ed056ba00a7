#pragma once

#include "fignet/baselines.hpp"
#include "fignet/model/checkpoint.hpp"
#include "fignet/model/figurenet.hpp"
#include "fignet/train/dataset.hpp"
#include "fignet/train/plan.hpp"

namespace fignet::train {

struct StageResult {
    RunRecord record;
    std::string checkpoint_path;
};

inline nn::FeedMode train_feed(const ModelConfig& cfg) {
    return cfg.ablation.use_sampling ? nn::FeedMode::sample_train : nn::FeedMode::prob_feed;
}
inline nn::FeedMode eval_feed(const ModelConfig& cfg) {
    return cfg.ablation.use_sampling ? nn::FeedMode::argmax_eval : nn::FeedMode::prob_feed;
}

std::uint64_t hash_params(const nn::ParamRefs<float>& params);

// Supervised pre-training of one slot module against its label sequences.
// Checkpoints the epoch with the best validation per-element accuracy.
StageResult run_pretrain(const Dataset& train, const Dataset& val, bool spectral,
                         const ModelConfig& cfg, const StagePlan& plan, const std::string& out_dir);

// Trains the question encoder and answer head on top of the two frozen
// modules (their representations are precomputed once).
StageResult run_train_head(const Dataset& train, const Dataset& val,
                           const std::string& spectral_ckpt, const std::string& order_ckpt,
                           const StagePlan& plan, const std::string& out_dir);

// End-to-end fine-tuning of all partitions from a head checkpoint.
StageResult run_finetune(const Dataset& train, const Dataset& val, const std::string& head_ckpt,
                         const StagePlan& plan, const std::string& out_dir);

// Baseline comparators trained on the question answering task.
StageResult run_train_baseline(const Dataset& train, const Dataset& val, const std::string& kind,
                               const StagePlan& plan, const std::string& out_dir);

struct PipelinePlans {
    StagePlan pretrain_spectral{"pretrain_spectral", 60, 2.5e-4};
    StagePlan pretrain_order{"pretrain_order", 60, 2.5e-4};
    StagePlan train_head{"train_head", 50, 2.5e-4, {"spectral", "order"}};
    StagePlan finetune{"finetune_e2e", 50, 2.5e-5};
};

struct PipelineResult {
    StageResult pretrain_spectral, pretrain_order, train_head, finetune;
};

// The three-stage schedule: pre-train both modules, train the head with the
// modules frozen, then fine-tune end to end at the lowered learning rate.
PipelineResult run_full_pipeline(const Dataset& train, const Dataset& val, const ModelConfig& cfg,
                                 const PipelinePlans& plans, const std::string& out_root);

// A full model instance restored from a train_head/finetune checkpoint.
struct LoadedModel {
    ModelConfig cfg;
    Vocab vocab;
    FigureNet<float> net;
};
LoadedModel model_from_checkpoint(const std::string& path);

// Per-figure flattened probability sequences under the eval feed mode.
nn::MatF compute_figure_reps(FigureNet<float>& net, const Dataset& ds, int micro_batch);

// Slot-module accuracy against dataset targets: (per_element, full_sequence).
std::pair<double, double> module_accuracy(SlotModule<float>& module, const Dataset& ds,
                                          bool spectral, int micro_batch, nn::FeedMode mode);

// (per_element, full_sequence) accuracy of predicted label sequences.
std::pair<double, double> sequence_accuracy(const std::vector<std::array<int, kMaxSlots>>& predicted,
                                            const std::vector<std::array<int, kMaxSlots>>& target);

// Writes a full-model checkpoint loadable by model_from_checkpoint.
void save_model_checkpoint(const std::string& path, FigureNet<float>& net, const Vocab& vocab,
                           const std::string& stage, int epoch, double val_metric);

}  // namespace fignet::train

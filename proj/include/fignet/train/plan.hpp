#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fignet/common.hpp"

namespace fignet::train {

struct StagePlan {
    std::string stage;  // pretrain_spectral | pretrain_order | train_head | finetune_e2e
    int epochs = 60;
    double lr = 2.5e-4;
    std::set<std::string> frozen;
    std::uint64_t seed = 1;
    int batch_size = 64;
    int micro_batch = 16;
    double early_stop_metric = 0.0;  // stop once the validation metric reaches this (0 = off)

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (lr <= 0.0) throw ConfigError("learning_rate must be > 0");
        if (batch_size < 1 || micro_batch < 1) throw ConfigError("batch sizes must be >= 1");
    }
};

struct EpochLog {
    double train_loss = 0.0;
    double val_metric = 0.0;
    double seconds = 0.0;
};

struct RunRecord {
    std::string stage;
    std::vector<EpochLog> epochs;
    int best_epoch = 0;  // 1-indexed
    double best_metric = 0.0;
    double total_seconds = 0.0;

    void note_epoch(const EpochLog& log) {
        epochs.push_back(log);
        total_seconds += log.seconds;
        if (best_epoch == 0 || log.val_metric > best_metric) {
            best_epoch = static_cast<int>(epochs.size());
            best_metric = log.val_metric;
        }
    }
};

std::string run_record_json(const RunRecord& record, const StagePlan& plan);
RunRecord run_record_from_json(const std::string& text);
void write_run_record(const std::string& dir, const RunRecord& record, const StagePlan& plan);

}  // namespace fignet::train

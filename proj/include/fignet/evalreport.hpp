#pragma once

#include <map>
#include <string>
#include <vector>

#include "fignet/train/dataset.hpp"

namespace fignet::eval {

struct Cell {
    long correct = 0;
    long total = 0;
    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct ModuleAcc {
    double per_element = 0.0;
    double full_sequence = 0.0;
};

struct EvalReport {
    std::string model_kind;  // figurenet | cnn_lstm | rn
    std::string checkpoint;
    std::string split;
    std::string variant = "full";
    Cell overall;
    std::map<std::string, Cell> per_figure_type;
    std::map<std::string, Cell> per_template;
    std::map<std::string, ModuleAcc> module_acc;
    std::map<std::string, double> timings_seconds;
};

// Answers every question in the split with the checkpointed model
// (threshold 0.5 on the sigmoid output, ties answered "yes") and fills all
// cells with counts.
EvalReport evaluate(const std::string& ckpt_path, const train::Dataset& split, int micro_batch = 16);

// Per-element and full-sequence accuracy of one pre-trained module.
ModuleAcc evaluate_module(const std::string& module_ckpt, const std::string& which,
                          const train::Dataset& split, int micro_batch = 16);

std::string report_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// Writes report.json / report.csv / report.txt renders of the given reports
// into out_dir. Measured cells never mix with published full-scale values;
// those appear only in columns labeled "paper@full-scale".
void render_tables(const std::vector<EvalReport>& reports, const std::string& format,
                   const std::string& out_dir);

// Structural validation against the shipped schema subset.
bool validate_report_json(const std::string& report_text, const std::string& schema_text,
                          std::string* error = nullptr);

}  // namespace fignet::eval

#include "fignet/train/plan.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>

using nlohmann::json;

namespace fignet::train {

std::string run_record_json(const RunRecord& record, const StagePlan& plan) {
    json epochs = json::array();
    for (const auto& e : record.epochs)
        epochs.push_back(
            {{"train_loss", e.train_loss}, {"val_metric", e.val_metric}, {"seconds", e.seconds}});
    json j{{"stage", record.stage},
           {"plan",
            {{"epochs", plan.epochs},
             {"learning_rate", plan.lr},
             {"seed", plan.seed},
             {"batch_size", plan.batch_size},
             {"micro_batch", plan.micro_batch},
             {"frozen", std::vector<std::string>(plan.frozen.begin(), plan.frozen.end())}}},
           {"epochs", epochs},
           {"best_epoch", record.best_epoch},
           {"best_metric", record.best_metric},
           {"total_seconds", record.total_seconds}};
    return j.dump(2);
}

RunRecord run_record_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw LoadError("run record: " + std::string(e.what()));
    }
    RunRecord r;
    r.stage = j.value("stage", "");
    for (const auto& e : j.value("epochs", json::array()))
        r.epochs.push_back({e.value("train_loss", 0.0), e.value("val_metric", 0.0),
                            e.value("seconds", 0.0)});
    r.best_epoch = j.value("best_epoch", 0);
    r.best_metric = j.value("best_metric", 0.0);
    r.total_seconds = j.value("total_seconds", 0.0);
    return r;
}

void write_run_record(const std::string& dir, const RunRecord& record, const StagePlan& plan) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(std::filesystem::path(dir) / "record.json");
        out << run_record_json(record, plan) << "\n";
    }
    {
        std::ofstream out(std::filesystem::path(dir) / "epochs.csv");
        out << "epoch,train_loss,val_metric,seconds\n";
        for (std::size_t i = 0; i < record.epochs.size(); ++i)
            out << i + 1 << "," << record.epochs[i].train_loss << "," << record.epochs[i].val_metric
                << "," << record.epochs[i].seconds << "\n";
    }
}

}  // namespace fignet::train

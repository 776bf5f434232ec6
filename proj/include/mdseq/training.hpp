#pragma once

#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdseq/batching.hpp"
#include "mdseq/checkpoint.hpp"
#include "mdseq/types.hpp"

namespace mdseq {

struct TrainConfig {
    ModelKind kind = ModelKind::lstm;
    LstmConfig lstm{0, 128, 1024};
    TransformerConfig transformer;

    int seq_len = 100;
    int batch_size = 64;
    int epochs = 1;
    bool stateful = true;  // recurrent state carry; meaningful for the LSTM
    double val_fraction = 0.1;
    std::uint64_t seed = 0;

    AdamConfig adam;            // beta1 0.9, beta2 0.98, eps 1e-9
    std::string schedule = "";  // "constant" | "noam"; empty picks per model kind
    double lr = 1e-3;           // constant-schedule rate
    int warmup_steps = 4000;

    std::string out_dir;  // checkpoint + loss history location; empty keeps everything in memory
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct LossRow {
    long step = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool has_val = false;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<LossRow> history;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
};

/// Full training loop: deterministic split into train/validation
/// trajectories, epoch loop over the batch plan, Adam with the configured
/// schedule, a checkpoint per epoch, and divergence detection (non-finite
/// loss halts with the last good checkpoint on disk).
TrainResult train(const std::vector<Trajectory>& data, const TrainConfig& cfg);

/// Continue a run from its checkpoint; reproduces exactly the losses an
/// uninterrupted run would have produced. target_epochs <= 0 trains up to
/// the epoch count recorded in the checkpoint config.
TrainResult resume(const std::vector<Trajectory>& data, const Checkpoint& ckpt,
                   int target_epochs = 0, const std::string& out_dir = "");

/// Models rebuilt from checkpoints.
LstmModel lstm_from_checkpoint(const Checkpoint& ckpt);
TransformerModel transformer_from_checkpoint(const Checkpoint& ckpt);

void write_loss_history_csv(const std::string& path, const std::vector<LossRow>& rows);

}  // namespace mdseq

#pragma once

#include <cstdint>
#include <vector>

#include "mdseq/checkpoint.hpp"
#include "mdseq/types.hpp"

namespace mdseq {

struct GenerationConfig {
    int n_trajectories = 100;
    long length = 10000;     // total frames per trajectory, context included
    int context_len = 100;   // seed window taken from reference data
    double temperature = 1.0;
    bool argmax = false;     // greedy decoding instead of sampling
    int forbid_token = -1;   // token id never sampled (run-length unknown id)
    std::uint64_t seed = 0;
};

/// Autoregressive generation: each trajectory seeds from the first
/// context_len frames of a randomly chosen reference trajectory, then
/// repeatedly samples the next state from the temperature-scaled softmax
/// and appends it. The LSTM threads its hidden state; the transformer
/// re-encodes a sliding window. Deterministic for fixed seeds (one derived
/// seed per trajectory).
std::vector<Trajectory> generate(const LstmModel& model, const std::vector<Trajectory>& reference,
                                 const GenerationConfig& cfg);
std::vector<Trajectory> generate(const TransformerModel& model,
                                 const std::vector<Trajectory>& reference,
                                 const GenerationConfig& cfg);

/// Dispatch on a checkpoint.
std::vector<Trajectory> generate(const Checkpoint& ckpt, const std::vector<Trajectory>& reference,
                                 const GenerationConfig& cfg);

/// Temperature-scaled sampling from a logits row; temperature 0 (or the
/// argmax flag) decodes greedily. `forbid` excludes one token id entirely.
int sample_logits(const RowVectorXd& logits, double temperature, bool argmax, Rng& rng,
                  int forbid = -1);

}  // namespace mdseq

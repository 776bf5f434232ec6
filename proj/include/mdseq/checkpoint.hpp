#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "mdseq/lstm.hpp"
#include "mdseq/optimizer.hpp"
#include "mdseq/transformer.hpp"

namespace mdseq {

enum class ModelKind { lstm, transformer };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct NamedTensor {
    std::string name;
    MatrixXd data;
};

/// Versioned training snapshot: named parameter tensors, optimizer
/// moments, the RNG stream state and the full resolved configuration.
/// See docs/formats.md for the exact byte layout.
struct Checkpoint {
    ModelKind kind = ModelKind::lstm;
    nlohmann::json config;
    long opt_step = 0;
    long epochs_done = 0;
    std::vector<NamedTensor> tensors;
    std::vector<NamedTensor> opt_m;
    std::vector<NamedTensor> opt_v;
    std::string rng_state;

    std::string config_hash() const { return hex64(fnv1a64(config.dump())); }
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Snapshot and restore helpers keyed by tensor name with shape checks.
std::vector<NamedTensor> snapshot_params(const std::vector<const Param*>& params);
void restore_params(const std::vector<Param*>& params, const std::vector<NamedTensor>& tensors);

Checkpoint make_checkpoint(ModelKind kind, const std::vector<Param*>& params,
                           const AdamState& opt, const nlohmann::json& config,
                           long epochs_done, const std::string& rng_state);
void restore_optimizer(const std::vector<Param*>& params, const Checkpoint& ckpt,
                       AdamState& opt);

}  // namespace mdseq

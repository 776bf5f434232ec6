#pragma once

#include <cstdint>
#include <vector>

#include "mdseq/common.hpp"
#include "mdseq/types.hpp"

namespace mdseq {

/// Deterministic schedule of training windows. steps[s][b] names the
/// window that batch row b processes at optimizer step s. In stateful mode
/// row b at step s+1 continues the source slice row b held at step s, and
/// reset marks the positions (trajectory starts and section boundaries)
/// where the recurrent state must be zeroed.
struct BatchPlan {
    struct Slot {
        int traj = 0;
        long start = 0;
        bool reset = true;
    };
    int seq_len = 0;
    int batch_size = 0;
    std::vector<std::vector<Slot>> steps;
};

/// Stateful plan: disjoint windows of seq_len frames walk each trajectory
/// in order (the tail shorter than seq_len is dropped); the ordered window
/// list is split into batch_size contiguous sections, one per row.
/// Leftover windows that do not fill a whole step are dropped.
BatchPlan make_stateful_plan(const std::vector<long>& traj_lengths, int seq_len, int batch_size);

/// Stateless plan: every slot is an independent random window (uniform
/// over all trajectory offsets), state reset every batch. n_steps defaults
/// to the stateful step count for comparability.
BatchPlan make_stateless_plan(const std::vector<long>& traj_lengths, int seq_len, int batch_size,
                              int n_steps, Rng& rng);

/// Token windows for one step of a plan.
std::vector<std::vector<int>> materialize_batch(const std::vector<Trajectory>& trajs,
                                                const BatchPlan& plan, int step);

}  // namespace mdseq

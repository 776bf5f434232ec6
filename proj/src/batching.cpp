#include "mdseq/batching.hpp"

#include <string>

namespace mdseq {

BatchPlan make_stateful_plan(const std::vector<long>& traj_lengths, int seq_len,
                             int batch_size) {
    require(seq_len >= 2, "stateful plan: seq_len must be >= 2");
    require(batch_size >= 1, "stateful plan: batch_size must be >= 1");

    struct Window {
        int traj;
        long start;
    };
    std::vector<Window> windows;
    for (std::size_t t = 0; t < traj_lengths.size(); ++t)
        for (long start = 0; start + seq_len <= traj_lengths[t]; start += seq_len)
            windows.push_back({static_cast<int>(t), start});

    const long n_steps = static_cast<long>(windows.size()) / batch_size;
    if (n_steps < 1) {
        throw std::runtime_error(
            "stateful plan: insufficient data; need at least " + std::to_string(batch_size) +
            " windows of " + std::to_string(seq_len) + " frames, have " +
            std::to_string(windows.size()));
    }

    BatchPlan plan;
    plan.seq_len = seq_len;
    plan.batch_size = batch_size;
    plan.steps.assign(static_cast<std::size_t>(n_steps),
                      std::vector<BatchPlan::Slot>(batch_size));
    // Row b owns the contiguous run windows[b*n_steps .. (b+1)*n_steps).
    for (int b = 0; b < batch_size; ++b) {
        for (long s = 0; s < n_steps; ++s) {
            const Window& w = windows[static_cast<std::size_t>(b) * n_steps + s];
            BatchPlan::Slot slot;
            slot.traj = w.traj;
            slot.start = w.start;
            if (s == 0) {
                slot.reset = true;
            } else {
                const Window& prev = windows[static_cast<std::size_t>(b) * n_steps + s - 1];
                slot.reset = !(prev.traj == w.traj && prev.start + seq_len == w.start);
            }
            plan.steps[s][b] = slot;
        }
    }
    return plan;
}

BatchPlan make_stateless_plan(const std::vector<long>& traj_lengths, int seq_len, int batch_size,
                              int n_steps, Rng& rng) {
    require(seq_len >= 2, "stateless plan: seq_len must be >= 2");
    require(batch_size >= 1 && n_steps >= 1, "stateless plan: bad batch/step counts");

    // Enumerate all admissible window offsets across trajectories.
    std::vector<long> offsets_per_traj;
    long total = 0;
    for (long len : traj_lengths) {
        const long n = len >= seq_len ? len - seq_len + 1 : 0;
        offsets_per_traj.push_back(n);
        total += n;
    }
    require(total > 0, "stateless plan: insufficient data; need at least one window of " +
                           std::to_string(seq_len) + " frames");

    BatchPlan plan;
    plan.seq_len = seq_len;
    plan.batch_size = batch_size;
    plan.steps.assign(static_cast<std::size_t>(n_steps),
                      std::vector<BatchPlan::Slot>(batch_size));
    for (auto& step : plan.steps)
        for (auto& slot : step) {
            long pick = static_cast<long>(rng.uniform_int(static_cast<std::uint64_t>(total)));
            for (std::size_t t = 0; t < offsets_per_traj.size(); ++t) {
                if (pick < offsets_per_traj[t]) {
                    slot.traj = static_cast<int>(t);
                    slot.start = pick;
                    break;
                }
                pick -= offsets_per_traj[t];
            }
            slot.reset = true;
        }
    return plan;
}

std::vector<std::vector<int>> materialize_batch(const std::vector<Trajectory>& trajs,
                                                const BatchPlan& plan, int step) {
    require(step >= 0 && step < static_cast<int>(plan.steps.size()),
            "materialize_batch: step out of range");
    std::vector<std::vector<int>> batch;
    batch.reserve(plan.steps[step].size());
    for (const auto& slot : plan.steps[step]) {
        const Trajectory& t = trajs.at(static_cast<std::size_t>(slot.traj));
        require(slot.start + plan.seq_len <= static_cast<long>(t.size()),
                "materialize_batch: window exceeds trajectory");
        batch.emplace_back(t.states.begin() + slot.start,
                           t.states.begin() + slot.start + plan.seq_len);
    }
    return batch;
}

}  // namespace mdseq

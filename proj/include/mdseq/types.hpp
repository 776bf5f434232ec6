#pragma once

#include <string>
#include <vector>

#include "mdseq/common.hpp"

namespace mdseq {

/// Continuous-coordinate snapshots at a fixed time step. Frames are flat
/// coordinate vectors sharing one dimension.
struct FrameSeries {
    double dt_ps = 0.0;
    std::vector<std::vector<double>> frames;
    std::string meta;       // generator provenance
    std::uint64_t seed = 0;

    std::size_t size() const { return frames.size(); }
    int dim() const { return frames.empty() ? 0 : static_cast<int>(frames.front().size()); }

    void validate() const {
        require(dt_ps > 0.0, "FrameSeries: dt must be positive");
        require(!frames.empty(), "FrameSeries: no frames");
        const std::size_t d = frames.front().size();
        for (const auto& f : frames)
            require(f.size() == d, "FrameSeries: frames of mixed dimension");
    }
};

/// Discrete state-index sequence with a physical time step. The common
/// currency between simulation, discretization, coarse-graining, models
/// and evaluation.
struct Trajectory {
    double dt_ps = 0.0;
    int n_states = 0;
    std::vector<int> states;

    std::size_t size() const { return states.size(); }

    void validate() const {
        require(dt_ps > 0.0, "Trajectory: dt must be positive");
        require(n_states > 0, "Trajectory: n_states must be positive");
        require(!states.empty(), "Trajectory: empty state sequence");
        for (std::size_t i = 0; i < states.size(); ++i)
            require(states[i] >= 0 && states[i] < n_states,
                    "Trajectory: state out of range at frame " + std::to_string(i));
    }
};

/// Keep every m-th frame; dt scales by m. Emulates a coarser saving
/// interval of the generator.
inline Trajectory subsample(const Trajectory& traj, int m) {
    require(m >= 1, "subsample: factor must be >= 1");
    Trajectory out;
    out.dt_ps = traj.dt_ps * m;
    out.n_states = traj.n_states;
    for (std::size_t i = 0; i < traj.states.size(); i += m)
        out.states.push_back(traj.states[i]);
    return out;
}

inline FrameSeries subsample(const FrameSeries& fs, int m) {
    require(m >= 1, "subsample: factor must be >= 1");
    FrameSeries out;
    out.dt_ps = fs.dt_ps * m;
    out.meta = fs.meta;
    out.seed = fs.seed;
    for (std::size_t i = 0; i < fs.frames.size(); i += m)
        out.frames.push_back(fs.frames[i]);
    return out;
}

}  // namespace mdseq

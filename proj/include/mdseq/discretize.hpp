#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdseq/types.hpp"

namespace mdseq {

/// Uniform binning of a periodic 1D coordinate (degrees by default).
struct BinningSpec {
    int n_bins = 20;
    double lo = -180.0;
    double hi = 180.0;
    bool periodic = true;  // wrap out-of-range values by the range span
};

/// Pluggable point-to-point metric over flat coordinate frames.
/// "euclidean" works for any dimension; "rmsd" expects N x 3 frames and
/// uses minimal RMSD after superposition.
double frame_distance(const std::string& metric, const std::vector<double>& a,
                      const std::vector<double>& b);

struct ClusterModel {
    std::string metric = "euclidean";
    std::vector<int> center_frames;  // indices into the source FrameSeries
    std::vector<std::vector<double>> centers;
    double radius = 0.0;  // max distance of any training frame to its center
};

/// state = floor((theta - lo)/width), with the upper edge clamped into the
/// last bin. Angles outside [lo, hi) are wrapped by multiples of the span.
Trajectory bin_torsion(const std::vector<double>& angles, const BinningSpec& spec,
                       double dt_ps = 1.0);

/// Greedy farthest-point k-center clustering (2-approximation of the
/// optimal covering radius). The first center is the lowest-index frame;
/// distance ties break toward the lowest frame index.
ClusterModel k_center_cluster(const FrameSeries& frames, int k, const std::string& metric,
                              std::uint64_t seed = 0);

/// Nearest-center assignment; ties break toward the lowest center index.
Trajectory assign(const FrameSeries& frames, const ClusterModel& model);

}  // namespace mdseq

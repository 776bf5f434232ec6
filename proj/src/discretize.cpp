#include "mdseq/discretize.hpp"

#include <cmath>
#include <limits>

#include "mdseq/common.hpp"
#include "mdseq/rmsd.hpp"

namespace mdseq {

double frame_distance(const std::string& metric, const std::vector<double>& a,
                      const std::vector<double>& b) {
    if (metric == "euclidean") {
        require(a.size() == b.size(), "frame_distance: dimension mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return std::sqrt(s);
    }
    if (metric == "rmsd") return minimal_rmsd(a, b);
    throw std::runtime_error("frame_distance: unknown metric '" + metric + "'");
}

Trajectory bin_torsion(const std::vector<double>& angles, const BinningSpec& spec, double dt_ps) {
    require(spec.n_bins >= 2, "bin_torsion: need at least 2 bins");
    require(spec.hi > spec.lo, "bin_torsion: empty range");
    const double span = spec.hi - spec.lo;
    const double width = span / spec.n_bins;

    Trajectory out;
    out.dt_ps = dt_ps;
    out.n_states = spec.n_bins;
    out.states.reserve(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) {
        double theta = angles[i];
        require(std::isfinite(theta),
                "bin_torsion: non-finite angle at index " + std::to_string(i));
        if (spec.periodic) theta -= span * std::floor((theta - spec.lo) / span);
        int state = static_cast<int>(std::floor((theta - spec.lo) / width));
        if (state < 0) state = 0;
        if (state >= spec.n_bins) state = spec.n_bins - 1;
        out.states.push_back(state);
    }
    return out;
}

ClusterModel k_center_cluster(const FrameSeries& frames, int k, const std::string& metric,
                              std::uint64_t /*seed*/) {
    frames.validate();
    const int n = static_cast<int>(frames.size());
    require(k >= 1, "k_center_cluster: k must be >= 1");
    require(k <= n, "k_center_cluster: k exceeds the number of frames");

    ClusterModel model;
    model.metric = metric;
    model.center_frames.push_back(0);  // deterministic first pick

    // nearest[i]: distance of frame i to its nearest chosen center
    std::vector<double> nearest(n);
    std::vector<bool> chosen(n, false);
    chosen[0] = true;
    for (int i = 0; i < n; ++i)
        nearest[i] = frame_distance(metric, frames.frames[i], frames.frames[0]);

    while (static_cast<int>(model.center_frames.size()) < k) {
        int far_idx = -1;
        double far_dist = -1.0;
        for (int i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            if (nearest[i] > far_dist) {
                far_dist = nearest[i];
                far_idx = i;
            }
        }
        chosen[far_idx] = true;
        model.center_frames.push_back(far_idx);
        for (int i = 0; i < n; ++i) {
            const double d = frame_distance(metric, frames.frames[i], frames.frames[far_idx]);
            if (d < nearest[i]) nearest[i] = d;
        }
    }

    model.radius = 0.0;
    for (int i = 0; i < n; ++i) model.radius = std::max(model.radius, nearest[i]);
    for (int idx : model.center_frames) model.centers.push_back(frames.frames[idx]);
    return model;
}

Trajectory assign(const FrameSeries& frames, const ClusterModel& model) {
    frames.validate();
    require(!model.centers.empty(), "assign: cluster model has no centers");

    Trajectory out;
    out.dt_ps = frames.dt_ps;
    out.n_states = static_cast<int>(model.centers.size());
    out.states.reserve(frames.size());
    for (const auto& f : frames.frames) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < model.centers.size(); ++c) {
            const double d = frame_distance(model.metric, f, model.centers[c]);
            if (d < best_d) {  // strict: ties keep the lowest center index
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        out.states.push_back(best);
    }
    return out;
}

}  // namespace mdseq

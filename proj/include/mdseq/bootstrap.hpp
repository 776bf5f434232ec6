#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mdseq/types.hpp"

namespace mdseq {

struct BootstrapResult {
    double mean = 0.0;
    double std = 0.0;
    int n_failed = 0;  // replicates where the metric threw; dropped from the stats
    std::vector<double> replicates;
};

/// Resample trajectories with replacement n_boot times and report the
/// metric's mean and sample standard deviation over the replicates.
BootstrapResult bootstrap_metric(const std::vector<Trajectory>& ensemble,
                                 const std::function<double(const std::vector<Trajectory>&)>& metric,
                                 int n_boot = 50, std::uint64_t seed = 0);

/// Vector-valued variant used by the report builder: the metric returns
/// one value per statistic; mean/std are taken entrywise over replicates,
/// ignoring non-finite entries (their count is reported per entry).
struct VectorBootstrapResult {
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<int> n_bad;
    int n_failed = 0;
};

VectorBootstrapResult bootstrap_vector_metric(
    const std::vector<Trajectory>& ensemble,
    const std::function<std::vector<double>(const std::vector<Trajectory>&)>& metric,
    int n_boot = 50, std::uint64_t seed = 0);

}  // namespace mdseq

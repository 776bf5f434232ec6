#include "mdseq/bootstrap.hpp"

#include <cmath>

#include "mdseq/common.hpp"

namespace mdseq {

namespace {

std::vector<Trajectory> resample(const std::vector<Trajectory>& ensemble, Rng& rng) {
    std::vector<Trajectory> out;
    out.reserve(ensemble.size());
    for (std::size_t i = 0; i < ensemble.size(); ++i)
        out.push_back(ensemble[rng.uniform_int(ensemble.size())]);
    return out;
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
    if (xs.empty()) {
        mean = std::nan("");
        sd = std::nan("");
        return;
    }
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) {
        sd = 0.0;
        return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

BootstrapResult bootstrap_metric(const std::vector<Trajectory>& ensemble,
                                 const std::function<double(const std::vector<Trajectory>&)>& metric,
                                 int n_boot, std::uint64_t seed) {
    require(!ensemble.empty(), "bootstrap_metric: empty ensemble");
    require(n_boot >= 1, "bootstrap_metric: n_boot must be >= 1");
    Rng rng(seed);
    BootstrapResult result;
    for (int b = 0; b < n_boot; ++b) {
        const std::vector<Trajectory> rep = resample(ensemble, rng);
        try {
            result.replicates.push_back(metric(rep));
        } catch (const std::exception&) {
            ++result.n_failed;
        }
    }
    mean_std(result.replicates, result.mean, result.std);
    return result;
}

VectorBootstrapResult bootstrap_vector_metric(
    const std::vector<Trajectory>& ensemble,
    const std::function<std::vector<double>(const std::vector<Trajectory>&)>& metric,
    int n_boot, std::uint64_t seed) {
    require(!ensemble.empty(), "bootstrap_vector_metric: empty ensemble");
    require(n_boot >= 1, "bootstrap_vector_metric: n_boot must be >= 1");
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    VectorBootstrapResult result;
    for (int b = 0; b < n_boot; ++b) {
        const std::vector<Trajectory> rep = resample(ensemble, rng);
        try {
            rows.push_back(metric(rep));
        } catch (const std::exception&) {
            ++result.n_failed;
        }
    }
    require(!rows.empty(), "bootstrap_vector_metric: every replicate failed");
    const std::size_t width = rows.front().size();
    for (const auto& r : rows)
        require(r.size() == width, "bootstrap_vector_metric: replicate width changed");

    result.mean.resize(width);
    result.std.resize(width);
    result.n_bad.assign(width, 0);
    for (std::size_t c = 0; c < width; ++c) {
        std::vector<double> finite;
        for (const auto& r : rows) {
            if (std::isfinite(r[c]))
                finite.push_back(r[c]);
            else
                ++result.n_bad[c];
        }
        mean_std(finite, result.mean[c], result.std[c]);
    }
    return result;
}

}  // namespace mdseq

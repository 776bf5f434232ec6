#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mdseq/potential.hpp"
#include "mdseq/types.hpp"

namespace mdseq {

struct LangevinConfig {
    long n_steps = 0;
    double dt_ps = 0.01;
    double kT = 0.15;
    double gamma = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> start;  // empty: start at the deeper minimum
};

/// Overdamped Euler-Maruyama integration of dx = -grad U dt/gamma +
/// sqrt(2 kT dt/gamma) eta. Deterministic for a fixed seed. Aborts with a
/// "timestep too large" diagnostic if coordinates stop being finite.
FrameSeries simulate_langevin(const PotentialSpec& spec, const LangevinConfig& cfg);

/// Exact sampler for a row-stochastic transition matrix. The initial state
/// is drawn from `initial` (uniform over states when empty).
Trajectory sample_markov_chain(const Eigen::MatrixXd& transition, long n_steps,
                               const std::vector<double>& initial, std::uint64_t seed,
                               double dt_ps = 1.0);

/// Two-block metastable chain with uniform within-block mixing and a
/// constant per-block escape probability. The block structure is exactly
/// lumpable and satisfies detailed balance, so the slow eigenvalue is
/// 1 - escape_a - escape_b and the slow timescale is known in closed form.
/// The remaining spectrum is zero (memoryless intra-block jitter).
Eigen::MatrixXd two_block_chain(int block_a, int block_b, double escape_a, double escape_b);

}  // namespace mdseq

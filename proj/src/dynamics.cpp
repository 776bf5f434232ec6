#include "mdseq/dynamics.hpp"

#include <cmath>
#include <string>

#include "mdseq/common.hpp"

namespace mdseq {

FrameSeries simulate_langevin(const PotentialSpec& spec, const LangevinConfig& cfg) {
    require(cfg.n_steps >= 1, "simulate_langevin: n_steps must be >= 1");
    require(cfg.dt_ps > 0.0, "simulate_langevin: dt must be positive");
    require(cfg.kT >= 0.0, "simulate_langevin: kT must be nonnegative");
    require(cfg.gamma > 0.0, "simulate_langevin: gamma must be positive");

    std::vector<double> x = cfg.start;
    if (x.empty()) {
        require(!spec.minima.empty(), "simulate_langevin: no start point and no documented minima");
        x = spec.minima.front();
    }
    require(static_cast<int>(x.size()) == spec.dimension,
            "simulate_langevin: start point dimension mismatch");

    Rng rng(cfg.seed);
    const double drift = cfg.dt_ps / cfg.gamma;
    const double noise = std::sqrt(2.0 * cfg.kT * cfg.dt_ps / cfg.gamma);

    FrameSeries out;
    out.dt_ps = cfg.dt_ps;
    out.seed = cfg.seed;
    out.meta = "langevin " + spec.label;
    out.frames.reserve(static_cast<std::size_t>(cfg.n_steps));

    for (long step = 0; step < cfg.n_steps; ++step) {
        const std::vector<double> grad = spec.gradient(x);
        for (int d = 0; d < spec.dimension; ++d) {
            x[d] += -grad[d] * drift + noise * rng.normal();
            if (!std::isfinite(x[d]))
                throw std::runtime_error("simulate_langevin: non-finite coordinate at step " +
                                         std::to_string(step) + ", timestep too large");
        }
        out.frames.push_back(x);
    }
    return out;
}

Trajectory sample_markov_chain(const Eigen::MatrixXd& transition, long n_steps,
                               const std::vector<double>& initial, std::uint64_t seed,
                               double dt_ps) {
    const int n = static_cast<int>(transition.rows());
    require(transition.cols() == n && n > 0, "sample_markov_chain: transition matrix must be square");
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            require(transition(i, j) >= 0.0, "sample_markov_chain: negative transition probability");
            row += transition(i, j);
        }
        require(std::abs(row - 1.0) <= 1e-10,
                "sample_markov_chain: row " + std::to_string(i) + " does not sum to 1");
    }
    require(n_steps >= 1, "sample_markov_chain: n_steps must be >= 1");
    require(initial.empty() || static_cast<int>(initial.size()) == n,
            "sample_markov_chain: initial distribution size mismatch");

    Rng rng(seed);
    Trajectory out;
    out.dt_ps = dt_ps;
    out.n_states = n;
    out.states.reserve(static_cast<std::size_t>(n_steps));

    int state;
    if (initial.empty()) {
        state = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    } else {
        state = rng.categorical(initial);
    }
    out.states.push_back(state);

    std::vector<double> row(n);
    for (long step = 1; step < n_steps; ++step) {
        for (int j = 0; j < n; ++j) row[j] = transition(state, j);
        state = rng.categorical(row);
        out.states.push_back(state);
    }
    return out;
}

Eigen::MatrixXd two_block_chain(int block_a, int block_b, double escape_a, double escape_b) {
    require(block_a >= 1 && block_b >= 1, "two_block_chain: empty block");
    require(escape_a > 0.0 && escape_a < 1.0 && escape_b > 0.0 && escape_b < 1.0,
            "two_block_chain: escape probabilities must lie in (0,1)");
    const int n = block_a + block_b;
    Eigen::MatrixXd T(n, n);
    for (int i = 0; i < n; ++i) {
        const bool in_a = i < block_a;
        const double escape = in_a ? escape_a : escape_b;
        const int own = in_a ? block_a : block_b;
        const int other = in_a ? block_b : block_a;
        for (int j = 0; j < n; ++j) {
            const bool j_in_a = j < block_a;
            T(i, j) = (in_a == j_in_a) ? (1.0 - escape) / own : escape / other;
        }
    }
    return T;
}

}  // namespace mdseq

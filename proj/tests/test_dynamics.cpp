#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mdseq/dynamics.hpp"
#include "mdseq/msm.hpp"
#include "mdseq/potential.hpp"

using namespace mdseq;

namespace {

// Boltzmann weights of the double well on a dense grid; used as the
// quadrature oracle for populations.
struct GridWeights {
    double z = 0.0;
    double left_mass = 0.0;  // basin x < saddle
    double x_saddle = 0.0;
};

GridWeights boltzmann_quadrature(const PotentialSpec& spec, double kT) {
    GridWeights g;
    g.x_saddle = spec.saddle[0];
    const int nx = 600, ny = 300;
    const double x_lo = -2.5, x_hi = 2.5, y_lo = -1.6, y_hi = 1.6;
    const double dx = (x_hi - x_lo) / nx, dy = (y_hi - y_lo) / ny;
    for (int ix = 0; ix < nx; ++ix) {
        const double x = x_lo + (ix + 0.5) * dx;
        for (int iy = 0; iy < ny; ++iy) {
            const double y = y_lo + (iy + 0.5) * dy;
            const double w = std::exp(-spec.energy({x, y}) / kT) * dx * dy;
            g.z += w;
            if (x < g.x_saddle) g.left_mass += w;
        }
    }
    return g;
}

}  // namespace

TEST_CASE("double well: gradient matches central finite differences") {
    const PotentialSpec spec = builtin_double_well();
    Rng rng(42);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const double x = 4.0 * rng.uniform() - 2.0;
        const double y = 2.0 * rng.uniform() - 1.0;
        const auto grad = spec.gradient({x, y});
        const double gx = (spec.energy({x + h, y}) - spec.energy({x - h, y})) / (2 * h);
        const double gy = (spec.energy({x, y + h}) - spec.energy({x, y - h})) / (2 * h);
        const double scale = std::max({1.0, std::abs(gx), std::abs(gy)});
        CHECK(std::abs(grad[0] - gx) / scale < 1e-6);
        CHECK(std::abs(grad[1] - gy) / scale < 1e-6);
    }
}

TEST_CASE("double well: documented minima are grid-local minima with unequal depths") {
    const PotentialSpec spec = builtin_double_well();
    REQUIRE(spec.minima.size() == 2);
    const double u0 = spec.energy(spec.minima[0]);
    const double u1 = spec.energy(spec.minima[1]);
    CHECK(u0 < u1);  // first documented minimum is the deeper one

    for (const auto& m : spec.minima) {
        const double u = spec.energy(m);
        const double step = 5e-3;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                if (dx == 0 && dy == 0) continue;
                CHECK(spec.energy({m[0] + dx * step, m[1] + dy * step}) > u);
            }
    }
}

TEST_CASE("double well: barrier from grid scan exceeds 4 kT at the default temperature") {
    const PotentialSpec spec = builtin_double_well();
    // 1D scan along y = 0 between the two minima to locate the pass
    double saddle_u = -1e9;
    double saddle_x = 0.0;
    const double a = spec.minima[0][0], b = spec.minima[1][0];
    for (int i = 0; i <= 2000; ++i) {
        const double x = a + (b - a) * i / 2000.0;
        // minimize over y on a fine grid: the surface is harmonic in y, so y = 0 is exact
        const double u = spec.energy({x, 0.0});
        if (u > saddle_u) {
            saddle_u = u;
            saddle_x = x;
        }
    }
    const double kT = double_well_default_kT();
    CHECK(saddle_u - spec.energy(spec.minima[0]) > 4.0 * kT);
    CHECK(saddle_u - spec.energy(spec.minima[1]) > 4.0 * kT);
    CHECK(saddle_x == doctest::Approx(spec.saddle[0]).epsilon(1e-2));
    CHECK(saddle_u - spec.energy(spec.minima[0]) ==
          doctest::Approx(spec.barrier_from_deep).epsilon(1e-6));
}

TEST_CASE("langevin: zero temperature descends monotonically to the nearest minimum") {
    const PotentialSpec spec = builtin_double_well();
    LangevinConfig cfg;
    cfg.n_steps = 4000;
    cfg.dt_ps = 0.005;
    cfg.kT = 0.0;
    cfg.gamma = 1.0;
    cfg.seed = 0;
    cfg.start = {0.9, 0.0};
    const FrameSeries fs = simulate_langevin(spec, cfg);
    double prev = spec.energy(cfg.start);
    for (const auto& frame : fs.frames) {
        const double u = spec.energy(frame);
        CHECK(u <= prev + 1e-12);
        prev = u;
    }
    // ends at the shallow minimum (x > 0 side)
    CHECK(fs.frames.back()[0] == doctest::Approx(spec.minima[1][0]).epsilon(1e-4));
}

TEST_CASE("langevin: bit-identical for a fixed seed") {
    const PotentialSpec spec = builtin_double_well();
    LangevinConfig cfg;
    cfg.n_steps = 500;
    cfg.kT = 0.3;
    cfg.seed = 1234;
    const FrameSeries a = simulate_langevin(spec, cfg);
    const FrameSeries b = simulate_langevin(spec, cfg);
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
        CHECK(a.frames[i][0] == b.frames[i][0]);
        CHECK(a.frames[i][1] == b.frames[i][1]);
    }
}

TEST_CASE("langevin: oversized timestep is diagnosed") {
    const PotentialSpec spec = builtin_double_well();
    LangevinConfig cfg;
    cfg.n_steps = 10000;
    cfg.dt_ps = 50.0;  // wildly unstable
    cfg.kT = 0.15;
    cfg.start = {1.5, 0.0};
    CHECK_THROWS_WITH_AS(simulate_langevin(spec, cfg),
                         doctest::Contains("timestep too large"), std::runtime_error);
}

TEST_CASE("langevin: histogram matches Boltzmann quadrature at moderate kT (chi-square)") {
    const PotentialSpec spec = builtin_double_well();
    const double kT = 0.6;  // fast mixing regime for this check
    LangevinConfig cfg;
    cfg.n_steps = 4000000;
    cfg.dt_ps = 0.01;
    cfg.kT = kT;
    cfg.seed = 99;
    const FrameSeries fs = simulate_langevin(spec, cfg);

    // coarse 2D histogram on strided (nearly independent) samples
    const int nx = 6, ny = 4;
    const double x_lo = -2.0, x_hi = 2.0, y_lo = -1.2, y_hi = 1.2;
    std::vector<double> observed(nx * ny, 0.0);
    long n_samples = 0;
    for (std::size_t i = 0; i < fs.frames.size(); i += 2000) {
        const double x = fs.frames[i][0], y = fs.frames[i][1];
        if (x < x_lo || x >= x_hi || y < y_lo || y >= y_hi) continue;
        const int ix = static_cast<int>((x - x_lo) / (x_hi - x_lo) * nx);
        const int iy = static_cast<int>((y - y_lo) / (y_hi - y_lo) * ny);
        observed[ix * ny + iy] += 1.0;
        ++n_samples;
    }
    REQUIRE(n_samples > 1500);

    // expected cell masses by quadrature over the same cells
    std::vector<double> expected(nx * ny, 0.0);
    double total_mass = 0.0;
    const int sub = 40;
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy) {
            double mass = 0.0;
            for (int a = 0; a < sub; ++a)
                for (int b = 0; b < sub; ++b) {
                    const double x = x_lo + (ix + (a + 0.5) / sub) * (x_hi - x_lo) / nx;
                    const double y = y_lo + (iy + (b + 0.5) / sub) * (y_hi - y_lo) / ny;
                    mass += std::exp(-spec.energy({x, y}) / kT);
                }
            expected[ix * ny + iy] = mass;
            total_mass += mass;
        }

    double chi2 = 0.0;
    int df = -1;
    for (int c = 0; c < nx * ny; ++c) {
        const double e = expected[c] / total_mass * n_samples;
        if (e < 5.0) continue;  // standard chi-square validity cut
        chi2 += (observed[c] - e) * (observed[c] - e) / e;
        ++df;
    }
    // 99.9% quantile of chi-square at df ~ 17 is ~40.8; allow margin for
    // residual correlation in the strided samples.
    CHECK(df >= 10);
    CHECK(chi2 < 4.0 * df);
}

TEST_CASE("langevin: basin populations match quadrature within 3 block standard errors") {
    const PotentialSpec spec = builtin_double_well();
    const double kT = double_well_default_kT();
    LangevinConfig cfg;
    cfg.n_steps = 12000000;
    cfg.dt_ps = 0.01;
    cfg.kT = kT;
    cfg.seed = 7;
    const FrameSeries fs = simulate_langevin(spec, cfg);
    const GridWeights g = boltzmann_quadrature(spec, kT);
    const double expected_left = g.left_mass / g.z;

    const int n_blocks = 24;
    const std::size_t block = fs.frames.size() / n_blocks;
    std::vector<double> fracs;
    for (int b = 0; b < n_blocks; ++b) {
        long in_left = 0;
        for (std::size_t i = b * block; i < (b + 1) * block; ++i)
            if (fs.frames[i][0] < g.x_saddle) ++in_left;
        fracs.push_back(static_cast<double>(in_left) / block);
    }
    double mean = 0.0;
    for (double f : fracs) mean += f;
    mean /= n_blocks;
    double var = 0.0;
    for (double f : fracs) var += (f - mean) * (f - mean);
    var /= (n_blocks - 1);
    const double se = std::sqrt(var / n_blocks);
    INFO("mean=", mean, " expected=", expected_left, " se=", se);
    CHECK(std::abs(mean - expected_left) < 3.0 * se + 0.005);
}

TEST_CASE("langevin: basin dwell times dwarf the frame interval (rare-event regime)") {
    const PotentialSpec spec = builtin_double_well();
    LangevinConfig cfg;
    cfg.n_steps = 4000000;
    cfg.dt_ps = 0.01;
    cfg.kT = double_well_default_kT();
    cfg.seed = 3;
    const FrameSeries fs = simulate_langevin(spec, cfg);
    const double saddle_x = spec.saddle[0];

    long n_dwells = 0;
    long current = 0;
    double total = 0.0;
    bool left = fs.frames.front()[0] < saddle_x;
    for (const auto& f : fs.frames) {
        const bool now_left = f[0] < saddle_x;
        if (now_left == left) {
            ++current;
        } else {
            total += current;
            ++n_dwells;
            current = 1;
            left = now_left;
        }
    }
    REQUIRE(n_dwells >= 3);  // rare but present
    const double mean_dwell_frames = total / n_dwells;
    CHECK(mean_dwell_frames >= 100.0);
}

TEST_CASE("markov sampler: identity chain stays put; fixed seed reproduces") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
    const Trajectory t = sample_markov_chain(eye, 100, {0.0, 1.0, 0.0}, 9, 1.0);
    for (int s : t.states) CHECK(s == 1);

    Eigen::MatrixXd T(2, 2);
    T << 0.5, 0.5, 0.5, 0.5;
    const Trajectory a = sample_markov_chain(T, 1000, {}, 77, 1.0);
    const Trajectory b = sample_markov_chain(T, 1000, {}, 77, 1.0);
    CHECK(a.states == b.states);
}

TEST_CASE("markov sampler: empirical frequencies converge (law of large numbers)") {
    Eigen::MatrixXd T(2, 2);
    T << 0.9, 0.1, 0.2, 0.8;
    const Trajectory t = sample_markov_chain(T, 200000, {}, 123, 1.0);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(2, 2);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) counts(t.states[i], t.states[i + 1]) += 1.0;
    for (int i = 0; i < 2; ++i) counts.row(i) /= counts.row(i).sum();
    CHECK((counts - T).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("markov sampler: maximum-likelihood re-estimate within 0.02 at 1e5 steps") {
    Rng rng(31);
    Eigen::MatrixXd T(4, 4);
    for (int i = 0; i < 4; ++i) {
        double row = 0.0;
        for (int j = 0; j < 4; ++j) {
            T(i, j) = 0.1 + rng.uniform();
            row += T(i, j);
        }
        T.row(i) /= row;
    }
    const Trajectory t = sample_markov_chain(T, 100000, {}, 8, 1.0);
    const TransitionModel est = transition_matrix(count_transitions({t}, 1), false);
    REQUIRE(est.n() == 4);
    CHECK((est.T - T).cwiseAbs().maxCoeff() <= 0.02);
}

TEST_CASE("markov sampler: rejects bad inputs") {
    Eigen::MatrixXd bad(2, 2);
    bad << 0.9, 0.2, 0.2, 0.8;  // row 0 sums to 1.1
    CHECK_THROWS(sample_markov_chain(bad, 10, {}, 0, 1.0));

    Eigen::MatrixXd T(2, 2);
    T << 0.5, 0.5, 0.5, 0.5;
    CHECK_THROWS(sample_markov_chain(T, 0, {}, 0, 1.0));
    CHECK_THROWS(sample_markov_chain(T, 10, {0.5}, 0, 1.0));
}

TEST_CASE("subsample scales dt and keeps every m-th frame") {
    Trajectory t;
    t.dt_ps = 0.1;
    t.n_states = 4;
    for (int i = 0; i < 10; ++i) t.states.push_back(i % 4);
    const Trajectory s = subsample(t, 3);
    CHECK(s.dt_ps == doctest::Approx(0.3));
    CHECK(s.states == std::vector<int>{0, 3, 2, 1});
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mdseq/dynamics.hpp"
#include "mdseq/msm.hpp"

using namespace mdseq;

namespace {

Trajectory make_traj(std::vector<int> states, int n_states, double dt = 1.0) {
    Trajectory t;
    t.dt_ps = dt;
    t.n_states = n_states;
    t.states = std::move(states);
    return t;
}

// Naive pair counter, independent of the sliding-window implementation.
Eigen::MatrixXd naive_counts(const std::vector<Trajectory>& trajs, int lag) {
    const int n = trajs.front().n_states;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : trajs) {
        for (std::size_t a = 0; a < t.size(); ++a)
            for (std::size_t b = 0; b < t.size(); ++b)
                if (b == a + static_cast<std::size_t>(lag)) c(t.states[a], t.states[b]) += 1.0;
    }
    return c;
}

TransitionModel two_state_model() {
    TransitionModel m;
    m.lag_time_ps = 1.0;
    m.T.resize(2, 2);
    m.T << 0.9, 0.1, 0.2, 0.8;
    m.reversible = false;
    m.state_labels = {0, 1};
    return m;
}

}  // namespace

TEST_CASE("count_transitions: enumerated example") {
    const auto traj = make_traj({0, 0, 1, 1, 0}, 2);
    const CountMatrix cm = count_transitions({traj}, 1);
    // pairs: (0,0), (0,1), (1,1), (1,0)
    CHECK(cm.counts(0, 0) == 1.0);
    CHECK(cm.counts(0, 1) == 1.0);
    CHECK(cm.counts(1, 1) == 1.0);
    CHECK(cm.counts(1, 0) == 1.0);
    CHECK(cm.counts.sum() == 4.0);
}

TEST_CASE("count_transitions: constant trajectory concentrates on the diagonal") {
    const auto traj = make_traj(std::vector<int>(50, 3), 5);
    const CountMatrix cm = count_transitions({traj}, 2);
    CHECK(cm.counts(3, 3) == 48.0);
    CHECK(cm.counts.sum() == 48.0);
}

TEST_CASE("count_transitions: concatenation adds exactly the junction pair") {
    const auto a = make_traj({0, 1, 0, 2, 1}, 3);
    const auto b = make_traj({2, 2, 0, 1}, 3);
    auto joined = a;
    joined.states.insert(joined.states.end(), b.states.begin(), b.states.end());

    const CountMatrix separate = count_transitions({a, b}, 1);
    const CountMatrix merged = count_transitions({joined}, 1);
    CHECK(merged.counts.sum() == separate.counts.sum() + 1.0);
    // the extra pair is the junction (last of a, first of b) = (1, 2)
    Eigen::MatrixXd diff = merged.counts - separate.counts;
    CHECK(diff(1, 2) == 1.0);
    CHECK(diff.sum() == 1.0);

    CHECK((separate.counts - naive_counts({a, b}, 1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("count_transitions: total equals sum of len minus lag") {
    const auto a = make_traj({0, 1, 2, 0, 1, 2, 0}, 3);
    const auto b = make_traj({1, 1, 2, 2}, 3);
    for (int lag : {1, 2, 3}) {
        const CountMatrix cm = count_transitions({a, b}, lag);
        CHECK(cm.counts.sum() == doctest::Approx((7 - lag) + (4 - lag)));
        CHECK((cm.counts - naive_counts({a, b}, lag)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("count_transitions rejects mixed metadata and bad lags") {
    const auto a = make_traj({0, 1}, 2, 1.0);
    auto b = make_traj({0, 1}, 2, 2.0);
    CHECK_THROWS(count_transitions({a, b}, 1));
    CHECK_THROWS(count_transitions({a}, 2));  // lag must be < length
    CHECK_THROWS(count_transitions({a}, 0));
}

TEST_CASE("transition_matrix: row normalization") {
    CountMatrix cm;
    cm.lag = 1;
    cm.dt_ps = 1.0;
    cm.counts.resize(2, 2);
    cm.counts << 1, 1, 1, 1;
    const TransitionModel m = transition_matrix(cm, false);
    CHECK(m.T(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m.T(1, 1) == doctest::Approx(0.5).epsilon(1e-14));

    cm.counts << 9, 1, 2, 8;
    const TransitionModel m2 = transition_matrix(cm, false);
    CHECK(m2.T(0, 0) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(m2.T(0, 1) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(m2.T(1, 0) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("transition_matrix: reversible symmetrization") {
    CountMatrix cm;
    cm.lag = 1;
    cm.dt_ps = 1.0;
    cm.counts.resize(2, 2);
    cm.counts << 0, 4, 2, 0;
    const TransitionModel m = transition_matrix(cm, true);
    // symmetrized counts [[0,3],[3,0]] -> T = [[0,1],[1,0]]
    CHECK(m.T(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.T(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.reversible);
}

TEST_CASE("transition_matrix: unvisited states dropped with remap") {
    CountMatrix cm;
    cm.lag = 1;
    cm.dt_ps = 0.5;
    cm.counts = Eigen::MatrixXd::Zero(4, 4);
    cm.counts(0, 0) = 2;
    cm.counts(0, 3) = 1;
    cm.counts(3, 0) = 1;
    const TransitionModel m = transition_matrix(cm, false);
    CHECK(m.n() == 2);
    CHECK(m.state_labels == std::vector<int>{0, 3});
    CHECK(m.lag_time_ps == doctest::Approx(0.5));
}

TEST_CASE("transition_matrix: detailed balance holds after reversible estimation") {
    Rng rng(7);
    CountMatrix cm;
    cm.lag = 1;
    cm.dt_ps = 1.0;
    cm.counts.resize(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) cm.counts(i, j) = std::floor(rng.uniform() * 50.0) + 1.0;
    const TransitionModel m = transition_matrix(cm, true);
    const Eigen::VectorXd pi = stationary_distribution(m);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(std::abs(pi(i) * m.T(i, j) - pi(j) * m.T(j, i)) < 1e-10);

    const SpectralSummary s = eigen_spectrum(m, 5);
    for (const auto& ev : s.eigenvalues) CHECK(std::abs(ev.imag()) < 1e-12);
}

TEST_CASE("eigen_spectrum: 2x2 analytic eigenvalues (trace and determinant)") {
    const TransitionModel m = two_state_model();
    const SpectralSummary s = eigen_spectrum(m, 2);
    // trace 1.7, det 0.7 -> eigenvalues 1 and 0.7
    CHECK(std::abs(s.eigenvalues[0].real() - 1.0) < 1e-12);
    CHECK(std::abs(s.eigenvalues[1].real() - 0.7) < 1e-12);
    CHECK(!s.complex_warning);
    CHECK(s.its_ps.size() == 1);
    CHECK(s.its_ps[0] == doctest::Approx(-1.0 / std::log(0.7)).epsilon(1e-12));
    CHECK(s.its_ps[0] == doctest::Approx(2.8037).epsilon(1e-4));
}

TEST_CASE("eigen_spectrum: identity has all-unit spectrum") {
    TransitionModel m;
    m.lag_time_ps = 1.0;
    m.T = Eigen::MatrixXd::Identity(3, 3);
    m.state_labels = {0, 1, 2};
    const SpectralSummary s = eigen_spectrum(m, 3);
    for (const auto& ev : s.eigenvalues) CHECK(std::abs(ev - std::complex<double>(1, 0)) < 1e-12);
    for (double its : s.its_ps) CHECK(std::isinf(its));
}

TEST_CASE("eigen_spectrum: leading left eigenvector is the stationary distribution") {
    const TransitionModel m = two_state_model();
    const SpectralSummary s = eigen_spectrum(m, 2);
    Eigen::VectorXd pi = s.left_vectors.col(0);
    pi /= pi.sum();
    CHECK(pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    CHECK(pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("its_from_eigenvalue conventions") {
    CHECK(its_from_eigenvalue(1.0 / std::exp(1.0), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::isinf(its_from_eigenvalue(1.0, 1.0)));
    CHECK(std::isinf(its_from_eigenvalue(1.0 - 1e-13, 1.0)));
    CHECK(std::isnan(its_from_eigenvalue(-0.4, 1.0)));
    CHECK(std::isnan(its_from_eigenvalue(0.0, 1.0)));
    // monotone in lambda on (0,1)
    double prev = 0.0;
    for (double lam : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
        const double its = its_from_eigenvalue(lam, 1.0);
        CHECK(its > prev);
        prev = its;
    }
}

TEST_CASE("implied_timescales: lag-independent for an exactly Markovian source") {
    Eigen::MatrixXd T(2, 2);
    T << 0.9, 0.1, 0.2, 0.8;
    const Trajectory traj = sample_markov_chain(T, 400000, {}, 11, 1.0);
    const ItsTable table = implied_timescales({traj}, {1, 2, 4, 8}, 1, true);
    const double exact = -1.0 / std::log(0.7);
    for (std::size_t l = 0; l < table.lag_ps.size(); ++l)
        CHECK(table.its(l, 0) == doctest::Approx(exact).epsilon(0.06));
}

TEST_CASE("mfpt: two-state analytic values") {
    const Eigen::MatrixXd m = mfpt(two_state_model());
    // t_12 = 1 + 0.9 t_12 => 10; escape 1/0.1. t_21 = 1/0.2 = 5.
    CHECK(m(0, 1) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(m(1, 0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 1) == 0.0);
}

TEST_CASE("mfpt: absorbing identity gives infinite off-diagonal") {
    TransitionModel m;
    m.lag_time_ps = 1.0;
    m.T = Eigen::MatrixXd::Identity(2, 2);
    m.state_labels = {0, 1};
    const Eigen::MatrixXd t = mfpt(m);
    CHECK(std::isinf(t(0, 1)));
    CHECK(std::isinf(t(1, 0)));
}

TEST_CASE("mfpt: random 5-state chain satisfies the fixed-point equation") {
    Rng rng(3);
    Eigen::MatrixXd T(5, 5);
    for (int i = 0; i < 5; ++i) {
        double row = 0.0;
        for (int j = 0; j < 5; ++j) {
            T(i, j) = 0.05 + rng.uniform();
            row += T(i, j);
        }
        T.row(i) /= row;
    }
    TransitionModel m;
    m.lag_time_ps = 2.0;
    m.T = T;
    m.state_labels = {0, 1, 2, 3, 4};
    const Eigen::MatrixXd t = mfpt(m);
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i) {
            if (i == j) continue;
            double rhs = m.lag_time_ps;
            for (int k = 0; k < 5; ++k)
                if (k != j) rhs += T(i, k) * t(k, j);
            CHECK(std::abs(t(i, j) - rhs) < 1e-10);
            CHECK(t(i, j) >= m.lag_time_ps - 1e-12);
        }
}

TEST_CASE("stationary distribution and free energy") {
    const TransitionModel m = two_state_model();
    const Eigen::VectorXd pi = stationary_distribution(m);
    CHECK(pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const Eigen::VectorXd f = free_energy(pi);
    CHECK(f(0) == doctest::Approx(-std::log(2.0 / 3.0)).epsilon(1e-12));
    CHECK(f(1) == doctest::Approx(-std::log(1.0 / 3.0)).epsilon(1e-12));
    CHECK(f(0) == doctest::Approx(0.4055).epsilon(1e-3));
    CHECK(f(1) == doctest::Approx(1.0986).epsilon(1e-3));
}

TEST_CASE("free energy: uniform populations give ln n; zeros give +inf") {
    Eigen::VectorXd pops = Eigen::VectorXd::Constant(7, 3.0);
    const Eigen::VectorXd f = free_energy(pops);
    for (int i = 0; i < 7; ++i) CHECK(f(i) == doctest::Approx(std::log(7.0)).epsilon(1e-12));

    Eigen::VectorXd with_zero(3);
    with_zero << 1.0, 0.0, 1.0;
    const Eigen::VectorXd f2 = free_energy(with_zero);
    CHECK(std::isinf(f2(1)));
    CHECK(f2(0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("stationary of sampled chain matches the empirical histogram") {
    Eigen::MatrixXd T(3, 3);
    T << 0.8, 0.15, 0.05, 0.1, 0.7, 0.2, 0.05, 0.15, 0.8;
    const Trajectory traj = sample_markov_chain(T, 200000, {}, 5, 1.0);
    TransitionModel m;
    m.lag_time_ps = 1.0;
    m.T = T;
    m.state_labels = {0, 1, 2};
    const Eigen::VectorXd pi = stationary_distribution(m);
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(3);
    for (int s : traj.states) hist(s) += 1.0;
    hist /= hist.sum();
    for (int i = 0; i < 3; ++i) {
        const double se = std::sqrt(pi(i) * (1 - pi(i)) / 200000.0) * 10.0;  // generous for correlation
        CHECK(std::abs(hist(i) - pi(i)) < std::max(3.0 * se, 0.02));
    }
}

TEST_CASE("estimated transition matrix converges to the truth") {
    Eigen::MatrixXd T(2, 2);
    T << 0.9, 0.1, 0.2, 0.8;
    const Trajectory traj = sample_markov_chain(T, 200000, {}, 21, 1.0);
    const TransitionModel est = transition_matrix(count_transitions({traj}, 1), false);
    CHECK((est.T - T).cwiseAbs().maxCoeff() < 0.01);
}

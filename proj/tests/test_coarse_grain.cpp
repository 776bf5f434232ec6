#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mdseq/coarse_grain.hpp"
#include "mdseq/dynamics.hpp"
#include "mdseq/msm.hpp"
#include "mdseq/recode.hpp"

using namespace mdseq;

namespace {

Trajectory make_traj(std::vector<int> states, int n_states, double dt = 1.0) {
    Trajectory t;
    t.dt_ps = dt;
    t.n_states = n_states;
    t.states = std::move(states);
    return t;
}

// Nearly uncoupled two-block chain over four micro-states.
Eigen::MatrixXd block_chain(double coupling = 0.02) {
    Eigen::MatrixXd T(4, 4);
    const double c = coupling;
    T << 0.5 - c / 2, 0.5 - c / 2, c / 2, c / 2,
         0.5 - c / 2, 0.5 - c / 2, c / 2, c / 2,
         c / 2, c / 2, 0.5 - c / 2, 0.5 - c / 2,
         c / 2, c / 2, 0.5 - c / 2, 0.5 - c / 2;
    return T;
}

TransitionModel model_from(const Eigen::MatrixXd& T, bool reversible = true) {
    TransitionModel m;
    m.lag_time_ps = 1.0;
    m.T = T;
    m.reversible = reversible;
    for (int i = 0; i < T.rows(); ++i) m.state_labels.push_back(i);
    m.validate();
    return m;
}

}  // namespace

TEST_CASE("pcca: two-block chain recovered exactly") {
    const TransitionModel m = model_from(block_chain());
    const LumpingMap map = pcca_plus(m, 2);
    CHECK(map.n_macro == 2);
    CHECK(map.assignment[0] == map.assignment[1]);
    CHECK(map.assignment[2] == map.assignment[3]);
    CHECK(map.assignment[0] != map.assignment[2]);

    // oracle: the sign structure of the second right eigenvector separates
    // the blocks; computed through a plain eigensolver, independent of the
    // simplex construction.
    Eigen::EigenSolver<Eigen::MatrixXd> es(m.T);
    int idx = -1;
    double second = -2.0;
    for (int i = 0; i < 4; ++i) {
        const double lam = es.eigenvalues()[i].real();
        if (lam < 1.0 - 1e-9 && lam > second) {
            second = lam;
            idx = i;
        }
    }
    REQUIRE(idx >= 0);
    const Eigen::VectorXd psi2 = es.eigenvectors().col(idx).real();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const bool same_sign = (psi2(i) > 0) == (psi2(j) > 0);
            const bool same_macro = map.assignment[i] == map.assignment[j];
            CHECK(same_sign == same_macro);
        }
}

TEST_CASE("pcca: identity lumping at n_macro = n_micro") {
    Eigen::MatrixXd T(3, 3);
    T << 0.90, 0.08, 0.02,
         0.08, 0.90, 0.02,
         0.03, 0.03, 0.94;
    // symmetrize into a reversible chain via count symmetrization
    CountMatrix cm;
    cm.lag = 1;
    cm.dt_ps = 1.0;
    cm.counts = T * 1000.0;
    const TransitionModel m = transition_matrix(cm, true);
    const LumpingMap map = pcca_plus(m, 3);
    CHECK(map.assignment == std::vector<int>{0, 1, 2});
}

TEST_CASE("pcca: equivariant under micro-state relabeling (as a partition)") {
    const Eigen::MatrixXd T = block_chain(0.04);
    const std::vector<int> perm = {2, 0, 3, 1};  // new index of each old state
    Eigen::MatrixXd Tp(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) Tp(perm[i], perm[j]) = T(i, j);

    const LumpingMap base = pcca_plus(model_from(T), 2);
    const LumpingMap permuted = pcca_plus(model_from(Tp), 2);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const bool same_base = base.assignment[i] == base.assignment[j];
            const bool same_perm = permuted.assignment[perm[i]] == permuted.assignment[perm[j]];
            CHECK(same_base == same_perm);
        }
}

TEST_CASE("pcca: memberships form a row-stochastic partition of unity") {
    const TransitionModel m = model_from(block_chain(0.06));
    const Eigen::MatrixXd chi = pcca_memberships(m, 2);
    for (int i = 0; i < chi.rows(); ++i) CHECK(chi.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pcca: rejects non-reversible input and out-of-range macro counts") {
    Eigen::MatrixXd T(3, 3);
    T << 0.2, 0.8, 0.0,
         0.0, 0.2, 0.8,
         0.8, 0.0, 0.2;  // cyclic, detailed balance fails
    CHECK_THROWS_WITH_AS(pcca_plus(model_from(T, false), 2), doctest::Contains("detailed balance"),
                         std::runtime_error);

    const TransitionModel blocks = model_from(block_chain());
    CHECK_THROWS(pcca_plus(blocks, 5));
    CHECK_THROWS(pcca_plus(blocks, 0));
}

TEST_CASE("suggest_n_macro finds the spectral gap") {
    const TransitionModel m = model_from(block_chain(0.01));
    CHECK(suggest_n_macro(m) == 2);
}

TEST_CASE("lump_trajectory: pointwise relabeling") {
    LumpingMap map;
    map.n_micro = 4;
    map.n_macro = 2;
    map.assignment = {0, 0, 1, 1};
    const Trajectory t = make_traj({0, 1, 2, 3}, 4, 0.5);
    const Trajectory lumped = lump_trajectory(t, map);
    CHECK(lumped.states == std::vector<int>{0, 0, 1, 1});
    CHECK(lumped.dt_ps == doctest::Approx(0.5));
    CHECK(lumped.n_states == 2);

    LumpingMap identity;
    identity.n_micro = 4;
    identity.n_macro = 4;
    identity.assignment = {0, 1, 2, 3};
    CHECK(lump_trajectory(t, identity).states == t.states);
}

TEST_CASE("lump-then-count equals count-then-aggregate") {
    const Eigen::MatrixXd T = block_chain(0.05);
    const Trajectory micro = sample_markov_chain(T, 20000, {}, 13, 1.0);
    LumpingMap map;
    map.n_micro = 4;
    map.n_macro = 2;
    map.assignment = {0, 0, 1, 1};

    const CountMatrix micro_counts = count_transitions({micro}, 1);
    Eigen::MatrixXd aggregated = Eigen::MatrixXd::Zero(2, 2);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            aggregated(map.assignment[i], map.assignment[j]) += micro_counts.counts(i, j);

    const CountMatrix macro_counts = count_transitions({lump_trajectory(micro, map)}, 1);
    CHECK((aggregated - macro_counts.counts).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("remove_recrossing: stated-rule examples") {
    CHECK(remove_recrossing(make_traj({1, 1, 1, 2, 1, 1}, 3), 3).states ==
          std::vector<int>{1, 1, 1, 1, 1, 1});
    CHECK(remove_recrossing(make_traj({1, 1, 1, 2, 2, 2}, 3), 3).states ==
          std::vector<int>{1, 1, 1, 2, 2, 2});
    const Trajectory t = make_traj({0, 1, 0, 2, 2, 1, 0}, 3);
    CHECK(remove_recrossing(t, 1).states == t.states);
}

TEST_CASE("remove_recrossing: short first run is kept as the initial anchor") {
    // first run accepted regardless of length
    CHECK(remove_recrossing(make_traj({2, 0, 0, 0, 1, 0, 0, 0}, 3), 3).states ==
          std::vector<int>{2, 0, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("remove_recrossing: output run lengths and alphabet invariants") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        Trajectory t;
        t.dt_ps = 1.0;
        t.n_states = 4;
        const int len = 30 + static_cast<int>(rng.uniform_int(50));
        for (int i = 0; i < len; ++i)
            t.states.push_back(static_cast<int>(rng.uniform_int(4)));
        const int min_dwell = 2 + static_cast<int>(rng.uniform_int(3));
        const Trajectory out = remove_recrossing(t, min_dwell);
        REQUIRE(out.size() == t.size());

        // every maximal run except possibly the first has length >= min_dwell
        std::vector<std::pair<int, int>> runs;
        for (std::size_t i = 0; i < out.size();) {
            std::size_t j = i;
            while (j < out.size() && out.states[j] == out.states[i]) ++j;
            runs.push_back({out.states[i], static_cast<int>(j - i)});
            i = j;
        }
        for (std::size_t r = 1; r + 1 < runs.size(); ++r) CHECK(runs[r].second >= min_dwell);
        // alphabet containment
        for (int s : out.states)
            CHECK(std::find(t.states.begin(), t.states.end(), s) != t.states.end());
    }
}

TEST_CASE("run-length coding: literal example and round trips") {
    const Trajectory t = make_traj({4, 4, 4, 4, 4, 3, 3, 3, 2, 2, 2, 2}, 5);
    const RleSequence seq = run_length_encode(t);
    CHECK(format_rle(seq) == "4-5, 3-3, 2-4");
    CHECK(run_length_decode(seq).states == t.states);

    const Trajectory constant = make_traj(std::vector<int>(17, 6), 7);
    const RleSequence cseq = run_length_encode(constant);
    REQUIRE(cseq.tokens.size() == 1);
    CHECK(cseq.tokens[0].state == 6);
    CHECK(cseq.tokens[0].length == 17);
}

TEST_CASE("run-length coding: random round-trip identity (property)") {
    Rng rng(37);
    for (int trial = 0; trial < 300; ++trial) {
        Trajectory t;
        t.dt_ps = 0.1;
        t.n_states = 5;
        const int len = 1 + static_cast<int>(rng.uniform_int(200));
        int s = static_cast<int>(rng.uniform_int(5));
        for (int i = 0; i < len; ++i) {
            if (rng.uniform() < 0.3) s = static_cast<int>(rng.uniform_int(5));
            t.states.push_back(s);
        }
        const RleSequence seq = run_length_encode(t, 16);
        for (const auto& tok : seq.tokens) CHECK(tok.length <= 16);
        const Trajectory back = run_length_decode(seq);
        CHECK(back.states == t.states);
        CHECK(back.dt_ps == t.dt_ps);
    }
}

TEST_CASE("run-length coding: long runs split at the cap") {
    const Trajectory t = make_traj(std::vector<int>(25, 1), 2);
    const RleSequence seq = run_length_encode(t, 10);
    REQUIRE(seq.tokens.size() == 3);
    CHECK(seq.tokens[0].length == 10);
    CHECK(seq.tokens[1].length == 10);
    CHECK(seq.tokens[2].length == 5);
    CHECK(run_length_decode(seq).states == t.states);
}

TEST_CASE("run-length coding: malformed tokens rejected") {
    RleSequence seq;
    seq.dt_ps = 1.0;
    seq.n_states = 3;
    seq.tokens = {{1, 0}};
    CHECK_THROWS(run_length_decode(seq));
    seq.tokens = {{5, 2}};
    CHECK_THROWS(run_length_decode(seq));
}

TEST_CASE("rle vocabulary: composite ids round-trip; unknown composites map to unk") {
    const Trajectory a = make_traj({1, 1, 1, 0, 0, 2}, 3);
    const Trajectory b = make_traj({2, 2, 0}, 3);
    const RleSequence sa = run_length_encode(a);
    const RleSequence sb = run_length_encode(b);
    const RunLengthVocab vocab = build_rle_vocab({sa, sb});
    // tokens: (1,3), (0,2), (2,1), (2,2), (0,1) -> 5 composites + unk
    CHECK(vocab.vocab_size() == 6);

    const Trajectory ids = encode_with_vocab(vocab, sa);
    const Trajectory decoded = decode_with_vocab(vocab, ids, a.dt_ps);
    CHECK(decoded.states == a.states);

    const Trajectory unseen = make_traj({1, 1, 1, 1, 1}, 3);  // run (1,5) never seen
    const Trajectory uids = encode_with_vocab(vocab, run_length_encode(unseen));
    CHECK(uids.states[0] == vocab.unknown_id());
    CHECK_THROWS(decode_with_vocab(vocab, uids, 1.0));
}

TEST_CASE("expand_lumping: identity labels pass through; missing states rejected") {
    LumpingMap map;
    map.n_micro = 3;
    map.n_macro = 2;
    map.assignment = {0, 1, 1};
    CHECK(expand_lumping(map, {0, 1, 2}, 3).assignment == map.assignment);

    // alphabet states the model never saw cannot be lumped
    CHECK_THROWS_WITH_AS(expand_lumping(map, {0, 1, 2}, 4), doctest::Contains("never visited"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(expand_lumping(map, {0, 2, 3}, 4), doctest::Contains("never visited"),
                         std::runtime_error);
}

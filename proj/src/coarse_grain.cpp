#include "mdseq/coarse_grain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mdseq/common.hpp"

namespace mdseq {

void LumpingMap::validate() const {
    require(n_micro > 0 && n_macro > 0 && n_macro <= n_micro, "LumpingMap: bad sizes");
    require(static_cast<int>(assignment.size()) == n_micro, "LumpingMap: assignment not total");
    std::vector<bool> seen(n_macro, false);
    for (int a : assignment) {
        require(a >= 0 && a < n_macro, "LumpingMap: macro index out of range");
        seen[a] = true;
    }
    for (int m = 0; m < n_macro; ++m)
        require(seen[m], "LumpingMap: macro class " + std::to_string(m) + " is empty");
}

namespace {

// Top-m right eigenvectors of a reversible transition matrix through the
// symmetric similarity transform S = D^{1/2} T D^{-1/2}, D = diag(pi).
Eigen::MatrixXd dominant_right_eigenvectors(const TransitionModel& model, int m) {
    const int n = model.n();
    const Eigen::VectorXd pi = stationary_distribution(model);
    require((pi.array() > 0.0).all(),
            "pcca_plus: stationary distribution has zero entries; drop unvisited states first");

    // Sanity-check detailed balance; the simplex construction needs a real
    // spectrum with pi-orthogonal eigenvectors.
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            worst = std::max(worst, std::abs(pi(i) * model.T(i, j) - pi(j) * model.T(j, i)));
    require(worst <= 1e-8, "pcca_plus: transition matrix violates detailed balance; "
                           "estimate it with reversible=true");

    const Eigen::VectorXd sqrt_pi = pi.cwiseSqrt();
    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) S(i, j) = sqrt_pi(i) * model.T(i, j) / sqrt_pi(j);
    S = 0.5 * (S + S.transpose()).eval();  // clean round-off asymmetry

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
    require(solver.info() == Eigen::Success, "pcca_plus: eigen solver failed to converge");

    // Ascending eigenvalues; take the top m and map back to T's right
    // eigenvectors psi = D^{-1/2} u.
    Eigen::MatrixXd X(n, m);
    for (int c = 0; c < m; ++c) {
        const int idx = n - 1 - c;
        X.col(c) = solver.eigenvectors().col(idx).cwiseQuotient(sqrt_pi);
    }
    // The leading eigenvector is constant for an irreducible chain;
    // normalize it to exactly 1 so memberships sum to 1.
    require(std::abs(X(0, 0)) > 1e-12, "pcca_plus: degenerate leading eigenvector");
    X.col(0) /= X(0, 0);
    for (int c = 1; c < m; ++c) {
        const double norm = X.col(c).norm();
        require(norm > 1e-12, "pcca_plus: degenerate eigenvector geometry; try a smaller n_macro");
        X.col(c) /= norm;
    }
    return X;
}

}  // namespace

Eigen::MatrixXd pcca_memberships(const TransitionModel& model, int n_macro) {
    model.validate();
    const int n = model.n();
    require(n_macro >= 1 && n_macro <= n, "pcca_plus: n_macro out of range");

    if (n_macro == 1) return Eigen::MatrixXd::Ones(n, 1);

    const Eigen::MatrixXd X = dominant_right_eigenvectors(model, n_macro);

    // Greedy farthest-vertex search for n_macro spanning rows of X.
    std::vector<int> vertices;
    Eigen::MatrixXd Y = X;
    int first = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
        const double norm = Y.row(i).norm();
        if (norm > best) {
            best = norm;
            first = i;
        }
    }
    vertices.push_back(first);
    Y.rowwise() -= X.row(first);

    for (int pick = 1; pick < n_macro; ++pick) {
        int far = -1;
        double far_norm = -1.0;
        for (int i = 0; i < n; ++i) {
            const double norm = Y.row(i).norm();
            if (norm > far_norm) {
                far_norm = norm;
                far = i;
            }
        }
        require(far_norm > 1e-10,
                "pcca_plus: degenerate eigenvector geometry; try a smaller n_macro");
        vertices.push_back(far);
        const Eigen::RowVectorXd dir = Y.row(far) / far_norm;
        Y -= (Y * dir.transpose()) * dir;  // deflate the direction just spanned
    }

    // Barycentric membership of every micro-state with respect to the
    // chosen vertices: chi = X * inv(X[vertices]).
    Eigen::MatrixXd V(n_macro, n_macro);
    for (int r = 0; r < n_macro; ++r) V.row(r) = X.row(vertices[r]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
    require(lu.isInvertible(),
            "pcca_plus: spanning vertices are rank deficient; try a smaller n_macro");
    return X * lu.inverse();
}

LumpingMap pcca_plus(const TransitionModel& model, int n_macro) {
    const Eigen::MatrixXd chi = pcca_memberships(model, n_macro);
    const int n = static_cast<int>(chi.rows());

    std::vector<int> raw(n);
    for (int i = 0; i < n; ++i) {
        int arg = 0;
        for (int c = 1; c < n_macro; ++c)
            if (chi(i, c) > chi(i, arg)) arg = c;
        raw[i] = arg;
    }

    // Canonical macro labels: order of first occurrence along the micro index.
    std::vector<int> relabel(n_macro, -1);
    int next = 0;
    LumpingMap map;
    map.n_micro = n;
    map.n_macro = n_macro;
    map.assignment.resize(n);
    for (int i = 0; i < n; ++i) {
        if (relabel[raw[i]] < 0) relabel[raw[i]] = next++;
        map.assignment[i] = relabel[raw[i]];
    }
    map.validate();
    return map;
}

int suggest_n_macro(const TransitionModel& model) {
    const int k = std::min(10, model.n());
    const SpectralSummary s = eigen_spectrum(model, k);
    int best_m = 2;
    double best_gap = -1.0;
    for (int m = 2; m < k; ++m) {
        const double gap = std::abs(s.eigenvalues[m - 1]) - std::abs(s.eigenvalues[m]);
        if (gap > best_gap) {
            best_gap = gap;
            best_m = m;
        }
    }
    return std::min(best_m, model.n());
}

Trajectory lump_trajectory(const Trajectory& traj, const LumpingMap& map) {
    traj.validate();
    map.validate();
    require(traj.n_states <= map.n_micro, "lump_trajectory: trajectory alphabet exceeds the map");
    Trajectory out;
    out.dt_ps = traj.dt_ps;
    out.n_states = map.n_macro;
    out.states.reserve(traj.size());
    for (int s : traj.states) out.states.push_back(map.assignment[s]);
    return out;
}

LumpingMap expand_lumping(const LumpingMap& map, const std::vector<int>& state_labels,
                          int n_states_total) {
    map.validate();
    require(static_cast<int>(state_labels.size()) == map.n_micro,
            "expand_lumping: label count does not match the map");
    if (static_cast<int>(state_labels.size()) == n_states_total) {
        bool identity = true;
        for (int i = 0; i < n_states_total; ++i)
            if (state_labels[i] != i) identity = false;
        if (identity) return map;
    }
    std::set<int> missing;
    for (int i = 0; i < n_states_total; ++i) missing.insert(i);
    for (int l : state_labels) missing.erase(l);
    if (!missing.empty()) {
        std::string list;
        for (int s : missing) list += (list.empty() ? "" : ", ") + std::to_string(s);
        throw std::runtime_error("expand_lumping: states never visited by the model: " + list);
    }
    LumpingMap out;
    out.n_micro = n_states_total;
    out.n_macro = map.n_macro;
    out.assignment.assign(n_states_total, 0);
    for (int i = 0; i < map.n_micro; ++i) out.assignment[state_labels[i]] = map.assignment[i];
    out.validate();
    return out;
}

Trajectory remove_recrossing(const Trajectory& traj, int min_dwell) {
    traj.validate();
    require(min_dwell >= 1, "remove_recrossing: min_dwell must be >= 1");

    Trajectory out;
    out.dt_ps = traj.dt_ps;
    out.n_states = traj.n_states;
    out.states.reserve(traj.size());

    std::size_t i = 0;
    int accepted = traj.states.front();
    bool first_run = true;
    while (i < traj.size()) {
        std::size_t j = i;
        while (j < traj.size() && traj.states[j] == traj.states[i]) ++j;
        const int run_len = static_cast<int>(j - i);
        if (first_run || run_len >= min_dwell) accepted = traj.states[i];
        out.states.insert(out.states.end(), static_cast<std::size_t>(run_len), accepted);
        first_run = false;
        i = j;
    }
    return out;
}

RleSequence run_length_encode(const Trajectory& traj, int max_run_length) {
    traj.validate();
    require(max_run_length >= 1, "run_length_encode: max_run_length must be >= 1");
    RleSequence seq;
    seq.dt_ps = traj.dt_ps;
    seq.n_states = traj.n_states;
    std::size_t i = 0;
    while (i < traj.size()) {
        std::size_t j = i;
        while (j < traj.size() && traj.states[j] == traj.states[i]) ++j;
        long remaining = static_cast<long>(j - i);
        while (remaining > 0) {
            const int chunk = static_cast<int>(std::min<long>(remaining, max_run_length));
            seq.tokens.push_back({traj.states[i], chunk});
            remaining -= chunk;
        }
        i = j;
    }
    return seq;
}

Trajectory run_length_decode(const RleSequence& seq) {
    require(!seq.tokens.empty(), "run_length_decode: empty token sequence");
    Trajectory out;
    out.dt_ps = seq.dt_ps;
    out.n_states = seq.n_states;
    for (const auto& tok : seq.tokens) {
        require(tok.length >= 1, "run_length_decode: token with non-positive length");
        require(tok.state >= 0 && tok.state < seq.n_states,
                "run_length_decode: token state out of range");
        out.states.insert(out.states.end(), static_cast<std::size_t>(tok.length), tok.state);
    }
    return out;
}

std::string format_rle(const RleSequence& seq) {
    std::string s;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(seq.tokens[i].state) + "-" + std::to_string(seq.tokens[i].length);
    }
    return s;
}

}  // namespace mdseq

#include "mdseq/msm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "mdseq/common.hpp"

namespace mdseq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

void TransitionModel::validate() const {
    require(T.rows() == T.cols() && T.rows() > 0, "TransitionModel: matrix must be square");
    require(lag_time_ps > 0.0, "TransitionModel: lag time must be positive");
    for (int i = 0; i < n(); ++i) {
        double row = 0.0;
        for (int j = 0; j < n(); ++j) {
            require(T(i, j) >= -1e-15 && T(i, j) <= 1.0 + 1e-12,
                    "TransitionModel: entry out of [0,1]");
            row += T(i, j);
        }
        require(std::abs(row - 1.0) <= 1e-12,
                "TransitionModel: row " + std::to_string(i) + " does not sum to 1");
    }
}

CountMatrix count_transitions(const std::vector<Trajectory>& trajs, int lag) {
    require(!trajs.empty(), "count_transitions: no trajectories");
    require(lag >= 1, "count_transitions: lag must be >= 1");
    const int n = trajs.front().n_states;
    const double dt = trajs.front().dt_ps;
    for (const auto& t : trajs) {
        t.validate();
        require(t.n_states == n, "count_transitions: mixed n_states across trajectories");
        require(t.dt_ps == dt, "count_transitions: mixed dt across trajectories");
        require(static_cast<std::size_t>(lag) < t.size(),
                "count_transitions: lag must be shorter than every trajectory");
    }

    CountMatrix cm;
    cm.lag = lag;
    cm.dt_ps = dt;
    cm.counts = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : trajs)
        for (std::size_t i = 0; i + lag < t.size(); ++i)
            cm.counts(t.states[i], t.states[i + lag]) += 1.0;
    return cm;
}

TransitionModel transition_matrix(const CountMatrix& cm, bool reversible) {
    const int n = static_cast<int>(cm.counts.rows());
    require(n > 0 && cm.counts.cols() == n, "transition_matrix: counts must be square");
    require(cm.counts.sum() > 0.0, "transition_matrix: empty counts");
    require((cm.counts.array() >= 0.0).all(), "transition_matrix: negative counts");

    // A state is visited if it takes part in any counted pair.
    std::vector<int> kept;
    for (int i = 0; i < n; ++i)
        if (cm.counts.row(i).sum() > 0.0 || cm.counts.col(i).sum() > 0.0) kept.push_back(i);

    const int m = static_cast<int>(kept.size());
    Eigen::MatrixXd sub(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) sub(i, j) = cm.counts(kept[i], kept[j]);

    if (reversible) sub = 0.5 * (sub + sub.transpose()).eval();

    TransitionModel model;
    model.lag_time_ps = cm.lag * cm.dt_ps;
    model.reversible = reversible;
    model.state_labels = kept;
    model.T.resize(m, m);
    for (int i = 0; i < m; ++i) {
        const double row = sub.row(i).sum();
        require(row > 0.0, "transition_matrix: visited state " + std::to_string(kept[i]) +
                               " has no outgoing counts; cannot row-normalize");
        model.T.row(i) = sub.row(i) / row;
    }
    model.validate();
    return model;
}

namespace {

// Pair each target eigenvalue with the closest one from a candidate list;
// used to align left eigenvectors with the right-eigen decomposition.
std::vector<int> match_eigenvalues(const std::vector<std::complex<double>>& target,
                                   const Eigen::VectorXcd& candidates) {
    std::vector<bool> used(candidates.size(), false);
    std::vector<int> match(target.size(), -1);
    for (std::size_t i = 0; i < target.size(); ++i) {
        double best = kInf;
        for (int j = 0; j < candidates.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(target[i] - candidates[j]);
            if (d < best) {
                best = d;
                match[i] = j;
            }
        }
        used[match[i]] = true;
    }
    return match;
}

}  // namespace

SpectralSummary eigen_spectrum(const TransitionModel& model, int k) {
    model.validate();
    const int n = model.n();
    require(k >= 1 && k <= n, "eigen_spectrum: k out of range");

    Eigen::EigenSolver<Eigen::MatrixXd> right(model.T);
    require(right.info() == Eigen::Success, "eigen_spectrum: eigen solver failed to converge");
    Eigen::EigenSolver<Eigen::MatrixXd> left(model.T.transpose());
    require(left.info() == Eigen::Success, "eigen_spectrum: eigen solver failed to converge");

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    const auto& vals = right.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ma = std::abs(vals[a]), mb = std::abs(vals[b]);
        if (ma != mb) return ma > mb;
        return vals[a].real() > vals[b].real();
    });

    SpectralSummary s;
    s.right_vectors.resize(n, k);
    for (int i = 0; i < k; ++i) {
        const int idx = order[i];
        s.eigenvalues.push_back(vals[idx]);
        if (std::abs(vals[idx].imag()) > 1e-9) s.complex_warning = true;
        s.right_vectors.col(i) = right.eigenvectors().col(idx).real();
    }
    require(std::abs(s.eigenvalues.front() - std::complex<double>(1.0, 0.0)) <= 1e-8,
            "eigen_spectrum: leading eigenvalue deviates from 1");

    const std::vector<int> lmatch = match_eigenvalues(s.eigenvalues, left.eigenvalues());
    s.left_vectors.resize(n, k);
    for (int i = 0; i < k; ++i) s.left_vectors.col(i) = left.eigenvectors().col(lmatch[i]).real();

    for (int i = 1; i < k; ++i) {
        const auto lam = s.eigenvalues[i];
        double value;
        if (std::abs(lam.imag()) > 1e-9) {
            value = its_from_eigenvalue(std::abs(lam), model.lag_time_ps);
        } else {
            value = its_from_eigenvalue(lam.real(), model.lag_time_ps);
        }
        s.its_ps.push_back(value);
    }
    return s;
}

double its_from_eigenvalue(double lambda, double tau_ps) {
    if (std::abs(lambda - 1.0) <= 1e-12) return kInf;
    if (lambda <= 0.0) return kNaN;  // oscillatory mode, undefined timescale
    return -tau_ps / std::log(lambda);
}

ItsTable implied_timescales(const std::vector<Trajectory>& trajs, const std::vector<int>& lags,
                            int k, bool reversible) {
    require(!lags.empty(), "implied_timescales: no lags");
    ItsTable table;
    table.its.resize(static_cast<int>(lags.size()), k);
    for (std::size_t l = 0; l < lags.size(); ++l) {
        const CountMatrix cm = count_transitions(trajs, lags[l]);
        const TransitionModel model = transition_matrix(cm, reversible);
        const int kk = std::min(k + 1, model.n());
        const SpectralSummary s = eigen_spectrum(model, kk);
        table.lag_ps.push_back(model.lag_time_ps);
        for (int i = 0; i < k; ++i)
            table.its(static_cast<int>(l), i) =
                i < static_cast<int>(s.its_ps.size()) ? s.its_ps[i] : kNaN;
    }
    return table;
}

namespace {

// Directed reachability over positive entries of T. forward=true walks
// i -> j edges; forward=false walks them backwards.
std::vector<bool> reachable_from(const Eigen::MatrixXd& T, int source, bool forward,
                                 int excluded = -1) {
    const int n = static_cast<int>(T.rows());
    std::vector<bool> seen(n, false);
    std::deque<int> queue;
    seen[source] = true;
    queue.push_back(source);
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v = 0; v < n; ++v) {
            if (seen[v] || v == excluded) continue;
            const double w = forward ? T(u, v) : T(v, u);
            if (w > 0.0) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    return seen;
}

}  // namespace

Eigen::MatrixXd mfpt(const TransitionModel& model) {
    model.validate();
    const int n = model.n();
    const double tau = model.lag_time_ps;
    Eigen::MatrixXd result = Eigen::MatrixXd::Zero(n, n);

    for (int j = 0; j < n; ++j) {
        // States that can ever reach j.
        const std::vector<bool> can_reach = reachable_from(model.T, j, /*forward=*/false);

        // A start state has finite MFPT to j only if, walking the chain
        // with j removed, it cannot slip into the set that never reaches j.
        std::vector<int> finite_set;
        std::vector<int> pos(n, -1);
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            if (!can_reach[i]) {
                result(i, j) = kInf;
                continue;
            }
            const std::vector<bool> without_j = reachable_from(model.T, i, /*forward=*/true, j);
            bool escapes = false;
            for (int v = 0; v < n && !escapes; ++v)
                if (without_j[v] && !can_reach[v]) escapes = true;
            if (escapes) {
                result(i, j) = kInf;
            } else {
                pos[i] = static_cast<int>(finite_set.size());
                finite_set.push_back(i);
            }
        }

        const int m = static_cast<int>(finite_set.size());
        if (m == 0) continue;
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) A(a, b) -= model.T(finite_set[a], finite_set[b]);
        const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(m, tau);
        const Eigen::VectorXd t = A.partialPivLu().solve(rhs);

        // Self-verify against t_i = tau + sum_k T_ik t_k with t_j = 0.
        const double residual = (A * t - rhs).cwiseAbs().maxCoeff();
        require(std::isfinite(residual) && residual < 1e-10,
                "mfpt: linear solve residual exceeds 1e-10 for target " + std::to_string(j));
        for (int a = 0; a < m; ++a) result(finite_set[a], j) = t(a);
    }
    return result;
}

Eigen::VectorXd stationary_distribution(const TransitionModel& model) {
    model.validate();
    const int n = model.n();
    // (T^T - I) pi = 0 with the last balance equation replaced by sum = 1.
    Eigen::MatrixXd A = model.T.transpose() - Eigen::MatrixXd::Identity(n, n);
    A.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    const Eigen::VectorXd pi = A.fullPivLu().solve(b);
    require((A * pi - b).cwiseAbs().maxCoeff() < 1e-9,
            "stationary_distribution: unit eigenvalue appears degenerate (reducible chain?)");
    return pi.cwiseMax(0.0);
}

Eigen::VectorXd free_energy(const Eigen::VectorXd& populations) {
    const double total = populations.sum();
    require(total > 0.0, "free_energy: populations sum to zero");
    require((populations.array() >= 0.0).all(), "free_energy: negative population");
    Eigen::VectorXd f(populations.size());
    for (int i = 0; i < populations.size(); ++i)
        f(i) = populations(i) > 0.0 ? -std::log(populations(i) / total) : kInf;
    return f;
}

}  // namespace mdseq

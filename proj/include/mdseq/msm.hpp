#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mdseq/types.hpp"

namespace mdseq {

struct CountMatrix {
    int lag = 1;            // in frames
    double dt_ps = 1.0;     // per frame
    Eigen::MatrixXd counts;
};

/// Row-stochastic transition matrix at a physical lag time. When states
/// were dropped because they never appear in counted pairs, state_labels
/// maps matrix indices back to the original alphabet.
struct TransitionModel {
    double lag_time_ps = 1.0;
    Eigen::MatrixXd T;
    bool reversible = false;
    std::vector<int> state_labels;

    int n() const { return static_cast<int>(T.rows()); }
    void validate() const;
};

struct SpectralSummary {
    std::vector<std::complex<double>> eigenvalues;  // sorted by modulus, lambda_1 = 1 first
    Eigen::MatrixXd right_vectors;                  // columns, real parts
    Eigen::MatrixXd left_vectors;
    std::vector<double> its_ps;                     // excludes lambda_1; +inf / NaN conventions
    bool complex_warning = false;                   // nonzero imaginary parts encountered
};

/// ITS values over a grid of lags; its(l, i) is the (i+1)-th timescale at
/// lags[l]. +inf marks eigenvalues indistinguishable from 1; NaN marks
/// non-positive (oscillatory) eigenvalues.
struct ItsTable {
    std::vector<double> lag_ps;
    Eigen::MatrixXd its;
};

/// Sliding-window transition counting at the given lag: every ordered pair
/// (x(t), x(t+lag)) within each trajectory contributes one count; pairs
/// never straddle trajectory boundaries.
CountMatrix count_transitions(const std::vector<Trajectory>& trajs, int lag);

/// Row-normalized transition matrix. With reversible=true the counts are
/// symmetrized, C <- (C + C^T)/2, before normalization, which enforces
/// detailed balance. States that appear in no counted pair are dropped and
/// recorded through state_labels.
TransitionModel transition_matrix(const CountMatrix& counts, bool reversible);

/// Top-k eigenpairs by modulus (dense QR-type solve). Complex eigenvalues
/// raise complex_warning and contribute their modulus to the timescales.
SpectralSummary eigen_spectrum(const TransitionModel& model, int k);

/// ITS_i = -tau / ln lambda_{i+1} with tau = lag * dt, for each lag.
ItsTable implied_timescales(const std::vector<Trajectory>& trajs, const std::vector<int>& lags,
                            int k, bool reversible);

/// Single-timescale convenience: ITS from one eigenvalue at lag tau.
double its_from_eigenvalue(double lambda, double tau_ps);

/// Mean first-passage times in picoseconds: result(i, j) is the expected
/// time to first reach j from i; diagonal is zero. Pairs that cannot reach
/// the target almost surely are reported as +inf. The linear solve is
/// verified against its defining fixed-point equation (residual < 1e-10).
Eigen::MatrixXd mfpt(const TransitionModel& model);

/// Stationary distribution: left eigenvector of the unit eigenvalue,
/// normalized to sum 1.
Eigen::VectorXd stationary_distribution(const TransitionModel& model);

/// F_i = -ln(p_i / sum p); zero populations map to +inf.
Eigen::VectorXd free_energy(const Eigen::VectorXd& populations);

}  // namespace mdseq

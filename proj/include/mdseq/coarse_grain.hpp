#pragma once

#include <string>
#include <vector>

#include "mdseq/msm.hpp"
#include "mdseq/types.hpp"

namespace mdseq {

/// Crisp micro-to-macro state assignment.
struct LumpingMap {
    int n_micro = 0;
    int n_macro = 0;
    std::vector<int> assignment;  // size n_micro, values in [0, n_macro)

    void validate() const;
};

/// PCCA+ lumping of micro-states into n_macro metastable macro-states.
/// Works on the top right eigenvectors of a reversible transition matrix:
/// n_macro spanning micro-states are located by a greedy farthest-vertex
/// search on the eigenvector simplex, every micro-state is expressed in
/// barycentric membership coordinates with respect to them, and each is
/// crisp-assigned to its argmax membership. Macro labels are canonicalized
/// by first occurrence. Degenerate eigenvector geometry raises an error
/// suggesting a smaller n_macro.
LumpingMap pcca_plus(const TransitionModel& model, int n_macro);

/// Fuzzy memberships behind pcca_plus, one row per micro-state, rows sum
/// to 1 (up to round-off). Exposed for diagnostics.
Eigen::MatrixXd pcca_memberships(const TransitionModel& model, int n_macro);

/// Pick n_macro by the largest gap among the leading eigenvalues
/// (at most the top 10).
int suggest_n_macro(const TransitionModel& model);

/// Pointwise relabeling; dt preserved, n_states becomes n_macro.
Trajectory lump_trajectory(const Trajectory& traj, const LumpingMap& map);

/// Extend a lumping over a transition model's compact state space back to
/// the full trajectory alphabet via the model's state_labels. Errors if
/// the alphabet contains states the model never saw.
LumpingMap expand_lumping(const LumpingMap& map, const std::vector<int>& state_labels,
                          int n_states_total);

/// Filter rapid back-and-forth jumps: scanning maximal runs left to right,
/// the first run is always accepted and any later run shorter than
/// min_dwell is reassigned to the previously accepted state. Length is
/// preserved.
Trajectory remove_recrossing(const Trajectory& traj, int min_dwell);

struct RleToken {
    int state = 0;
    int length = 0;
};

/// Run-length "state-length" recoding of a trajectory. Runs longer than
/// max_run_length are split so the token alphabet stays finite.
struct RleSequence {
    double dt_ps = 0.0;
    int n_states = 0;
    std::vector<RleToken> tokens;
};

RleSequence run_length_encode(const Trajectory& traj, int max_run_length = 1000);
Trajectory run_length_decode(const RleSequence& seq);

/// "4,4,4,4,4,3,3,3,2,2,2,2" encodes as "4-5, 3-3, 2-4".
std::string format_rle(const RleSequence& seq);

}  // namespace mdseq

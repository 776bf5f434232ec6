#pragma once

#include <string>
#include <vector>

#include "mdseq/coarse_grain.hpp"
#include "mdseq/discretize.hpp"
#include "mdseq/msm.hpp"
#include "mdseq/recode.hpp"
#include "mdseq/types.hpp"

namespace mdseq {

// Plain-text artifact formats. Floats use shortest round-trip formatting
// so identical data produces identical bytes.

/// "# dt_ps=<float> dim=<int> seed=<int>" then one comma-separated frame per row.
void write_frame_series(const std::string& path, const FrameSeries& fs);
FrameSeries read_frame_series(const std::string& path);

/// "# dt_ps=<float> n_states=<int>" then one state index per line.
void write_trajectory(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory(const std::string& path);

/// "# metric=<id> k=<int> radius=<float>" then one center frame index per
/// line. Reading needs the source frames to rebuild center coordinates.
void write_cluster_model(const std::string& path, const ClusterModel& model);
ClusterModel read_cluster_model(const std::string& path, const FrameSeries& source);

/// "# n_micro=<int> n_macro=<int>" then one macro index per micro-state line.
void write_lumping_map(const std::string& path, const LumpingMap& map);
LumpingMap read_lumping_map(const std::string& path);

/// Columns: lag_ps, its_1..its_k, plus its_i_std columns when stds given.
void write_its_csv(const std::string& path, const ItsTable& table,
                   const Eigen::MatrixXd* stds = nullptr);

/// Columns: from_state,to_state,mfpt_ps,std. Labels map matrix indices to
/// the original alphabet; stds may be null.
void write_mfpt_csv(const std::string& path, const Eigen::MatrixXd& mfpt,
                    const std::vector<int>& labels, const Eigen::MatrixXd* stds = nullptr);

/// "# n_states=<int> max_run_length=<int>" then one "state length" pair
/// per line in token-id order.
void write_rle_vocab(const std::string& path, const RunLengthVocab& vocab);
RunLengthVocab read_rle_vocab(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// All trajectory files directly inside a directory (sorted by name), or
/// the single file itself when `path` is not a directory.
std::vector<Trajectory> read_trajectory_set(const std::string& path);

/// Same convention for frame series (frames*.csv inside a directory).
std::vector<FrameSeries> read_frame_series_set(const std::string& path);

}  // namespace mdseq

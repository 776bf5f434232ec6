#pragma once

#include <vector>

namespace mdseq {

/// Minimal RMSD between two conformations after optimal superposition
/// (centroid removal + optimal rotation from the SVD of the covariance,
/// with the usual reflection fix). Frames are flat vectors of length 3N.
/// Symmetric; zero iff the frames are congruent up to rigid motion.
double minimal_rmsd(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mdseq

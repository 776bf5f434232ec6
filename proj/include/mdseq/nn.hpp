#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mdseq/common.hpp"

namespace mdseq {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

/// Named parameter tensor with its gradient accumulator. Biases are stored
/// as 1 x n rows. All model parameters live in these so the optimizer,
/// checkpointing and gradient checks can iterate them generically.
struct Param {
    std::string name;
    MatrixXd v;
    MatrixXd g;

    void resize(const std::string& n, int rows, int cols) {
        name = n;
        v.setZero(rows, cols);
        g.setZero(rows, cols);
    }

    // Uniform init scaled by 1/sqrt(fan_in); fan_in is the input dimension
    // (rows in the x*W convention used throughout).
    void init_uniform(Rng& rng) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(v.rows()));
        for (int i = 0; i < v.rows(); ++i)
            for (int j = 0; j < v.cols(); ++j) v(i, j) = (2.0 * rng.uniform() - 1.0) * scale;
    }

    void zero_grad() { g.setZero(); }
};

/// Numerically stable row-wise softmax.
inline MatrixXd softmax_rows(const MatrixXd& logits) {
    MatrixXd p = logits;
    for (int r = 0; r < p.rows(); ++r) {
        const double m = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - m).exp();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

/// Mean cross-entropy of rows of `logits` against integer targets, plus
/// the gradient w.r.t. the logits. `scale` divides both (use the total
/// number of prediction pairs when averaging across a batch).
inline double cross_entropy_rows(const MatrixXd& logits, const std::vector<int>& targets,
                                 double scale, MatrixXd& dlogits) {
    const int rows = static_cast<int>(logits.rows());
    require(static_cast<int>(targets.size()) == rows, "cross_entropy_rows: target count mismatch");
    dlogits = softmax_rows(logits);
    double loss = 0.0;
    for (int r = 0; r < rows; ++r) {
        const int t = targets[r];
        require(t >= 0 && t < logits.cols(), "cross_entropy_rows: target out of range");
        loss -= std::log(std::max(dlogits(r, t), 1e-300));
        dlogits(r, t) -= 1.0;
    }
    dlogits /= scale;
    return loss / scale;
}

}  // namespace mdseq

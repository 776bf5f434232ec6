#include "mdseq/rmsd.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "mdseq/common.hpp"

namespace mdseq {

double minimal_rmsd(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "minimal_rmsd: frames differ in size");
    require(!a.empty() && a.size() % 3 == 0, "minimal_rmsd: frames must be N x 3");
    const int n = static_cast<int>(a.size() / 3);

    Eigen::MatrixXd A(n, 3), B(n, 3);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < 3; ++d) {
            A(i, d) = a[3 * i + d];
            B(i, d) = b[3 * i + d];
        }
    A.rowwise() -= A.colwise().mean();
    B.rowwise() -= B.colwise().mean();

    // Optimal rotation R minimizing ||A R - B||_F.
    const Eigen::Matrix3d H = A.transpose() * B;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d U = svd.matrixU();
    Eigen::Matrix3d V = svd.matrixV();
    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    if ((V * U.transpose()).determinant() < 0.0) D(2, 2) = -1.0;
    const Eigen::Matrix3d R = U * D * V.transpose();

    const double msd = (A * R - B).squaredNorm() / n;
    return std::sqrt(std::max(0.0, msd));
}

}  // namespace mdseq

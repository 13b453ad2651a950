#pragma once

#include "idfs/core.hpp"

#include <cmath>
#include <limits>

namespace idfs {

struct RedundancyMatrix {
    Matrix r;
    int channel_index = 0;
};

/// Z = I - (1/n) 1 1^T.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> centering_matrix(Eigen::Index n) {
    using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "centering matrix needs n >= 1");
    return M::Identity(n, n) - M::Constant(n, n, Scalar(1) / static_cast<Scalar>(n));
}

/// Squared cosine similarity between the centered rows of `x` (features x samples).
/// Rows with zero centered norm get an all-zero row/column, diagonal included.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
squared_cosine_redundancy(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (x.cols() < 2) throw Error(ErrorCode::TooFewSamples, "redundancy needs >= 2 samples");

    M f = x.colwise() - x.rowwise().mean();
    const Scalar tiny = Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
                        std::sqrt(static_cast<Scalar>(x.cols()));
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const Scalar norm = f.row(i).norm();
        // Centering round-off of a constant row is not signal.
        if (norm == Scalar(0) || norm <= tiny * x.row(i).cwiseAbs().maxCoeff()) {
            f.row(i).setZero();
        } else {
            f.row(i) /= norm;
        }
    }
    const M sq = (f * f.transpose()).array().square().matrix();
    M r = (sq + sq.transpose()) / Scalar(2);
    return r.cwiseMin(Scalar(1));
}

/// Per-view redundancy. With observed_only, only the view's present samples are used.
RedundancyMatrix redundancy_matrix(const ChannelView& view, bool observed_only = true);

std::vector<RedundancyMatrix> redundancy_matrices(const MultiChannelDataset& ds,
                                                  bool observed_only = true);

/// Columns of `x` selected by `mask`.
Matrix select_columns(const Matrix& x, const Mask& mask);

}  // namespace idfs

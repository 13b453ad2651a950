#include "idfs/redundancy.hpp"

namespace idfs {

Matrix select_columns(const Matrix& x, const Mask& mask) {
    Matrix out(x.rows(), mask.count());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        if (mask(i)) out.col(k++) = x.col(i);
    }
    return out;
}

RedundancyMatrix redundancy_matrix(const ChannelView& view, bool observed_only) {
    if (observed_only) {
        if (view.n_present() < 2) {
            throw Error(ErrorCode::TooFewSamples, "redundancy needs >= 2 present samples",
                        "channel " + std::to_string(view.channel_index()));
        }
        if (view.n_present() == view.n_samples()) {
            return {squared_cosine_redundancy(view.features()), view.channel_index()};
        }
        return {squared_cosine_redundancy(select_columns(view.features(), view.present())),
                view.channel_index()};
    }
    return {squared_cosine_redundancy(view.features()), view.channel_index()};
}

std::vector<RedundancyMatrix> redundancy_matrices(const MultiChannelDataset& ds,
                                                  bool observed_only) {
    std::vector<RedundancyMatrix> out;
    out.reserve(ds.n_channels());
    for (const auto& v : ds.views()) out.push_back(redundancy_matrix(v, observed_only));
    return out;
}

}  // namespace idfs

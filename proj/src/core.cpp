#include "idfs/core.hpp"

#include <algorithm>
#include <cmath>

namespace idfs {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonOneHotLabel: return "NonOneHotLabel";
        case ErrorCode::OrphanSample: return "OrphanSample";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::NoObservedSamples: return "NoObservedSamples";
        case ErrorCode::InvalidHyperparams: return "InvalidHyperparams";
        case ErrorCode::EmptyStiefel: return "EmptyStiefel";
        case ErrorCode::KOutOfRange: return "KOutOfRange";
        case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

ChannelView::ChannelView(int channel_index, Matrix features, Mask present,
                         std::vector<std::string> feature_names)
    : channel_index_(channel_index),
      features_(std::move(features)),
      present_(std::move(present)),
      names_(std::move(feature_names)) {
    if (channel_index_ < 0) {
        throw Error(ErrorCode::InvalidArgument, "negative channel index");
    }
    if (present_.size() != features_.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "presence mask length differs from sample count",
                    "channel " + std::to_string(channel_index_));
    }
    if (names_.empty()) {
        names_.reserve(static_cast<std::size_t>(features_.rows()));
        for (Eigen::Index j = 0; j < features_.rows(); ++j) {
            names_.push_back("f" + std::to_string(j));
        }
    } else if (static_cast<Eigen::Index>(names_.size()) != features_.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "feature name count differs from feature count",
                    "channel " + std::to_string(channel_index_));
    }
    if (present_.count() < 2) {
        throw Error(ErrorCode::TooFewSamples, "a view needs at least 2 present samples",
                    "channel " + std::to_string(channel_index_));
    }
    for (Eigen::Index i = 0; i < features_.cols(); ++i) {
        if (!present_(i)) {
            features_.col(i).setZero();
        } else if (!features_.col(i).allFinite()) {
            throw Error(ErrorCode::NonFiniteValue, "non-finite feature value in a present sample",
                        "channel " + std::to_string(channel_index_) + ", sample " +
                            std::to_string(i));
        }
    }
}

MultiChannelDataset::MultiChannelDataset(std::vector<ChannelView> views, Matrix labels,
                                         std::vector<std::string> sample_ids)
    : views_(std::move(views)), labels_(std::move(labels)), sample_ids_(std::move(sample_ids)) {
    if (views_.empty()) {
        throw Error(ErrorCode::ShapeMismatch, "dataset needs at least one view");
    }
    if (labels_.rows() < 1) {
        throw Error(ErrorCode::ShapeMismatch, "label matrix has no classes");
    }
    const Eigen::Index n = labels_.cols();
    for (const auto& view : views_) {
        if (view.n_samples() != n) {
            throw Error(ErrorCode::ShapeMismatch, "view sample count differs from label columns",
                        "channel " + std::to_string(view.channel_index()));
        }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto col = labels_.col(j);
        const bool binary = (col.array() == 0.0 || col.array() == 1.0).all();
        if (!binary || col.sum() != 1.0) {
            throw Error(ErrorCode::NonOneHotLabel, "label column is not one-hot",
                        "sample " + std::to_string(j));
        }
        const bool observed = std::any_of(views_.begin(), views_.end(),
                                          [j](const ChannelView& v) { return v.present()(j); });
        if (!observed) {
            throw Error(ErrorCode::OrphanSample, "sample is present on no view",
                        "sample " + std::to_string(j));
        }
    }
    if (sample_ids_.empty()) {
        sample_ids_.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index j = 0; j < n; ++j) sample_ids_.push_back("s" + std::to_string(j));
    } else if (static_cast<Eigen::Index>(sample_ids_.size()) != n) {
        throw Error(ErrorCode::ShapeMismatch, "sample id count differs from sample count");
    }
}

Eigen::Index MultiChannelDataset::total_features() const noexcept {
    Eigen::Index total = 0;
    for (const auto& v : views_) total += v.n_features();
    return total;
}

std::vector<int> MultiChannelDataset::class_indices() const {
    std::vector<int> out(static_cast<std::size_t>(n_samples()));
    for (Eigen::Index j = 0; j < n_samples(); ++j) {
        Eigen::Index row = 0;
        labels_.col(j).maxCoeff(&row);
        out[static_cast<std::size_t>(j)] = static_cast<int>(row);
    }
    return out;
}

MultiChannelDataset new_dataset(std::vector<ChannelView> views, Matrix labels) {
    return MultiChannelDataset(std::move(views), std::move(labels));
}

Matrix one_hot(const std::vector<int>& labels, int n_classes) {
    if (n_classes < 1) {
        throw Error(ErrorCode::InvalidArgument, "class count must be positive");
    }
    Matrix y = Matrix::Zero(n_classes, static_cast<Eigen::Index>(labels.size()));
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] < 0 || labels[j] >= n_classes) {
            throw Error(ErrorCode::LabelOutOfRange, "label outside [0, c)",
                        "sample " + std::to_string(j) + ", label " + std::to_string(labels[j]));
        }
        y(labels[j], static_cast<Eigen::Index>(j)) = 1.0;
    }
    return y;
}

void Hyperparams::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidHyperparams, msg); };
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must satisfy lambda >= 0");
    if (!(gamma > 1.0) || !std::isfinite(gamma)) fail("gamma must satisfy gamma > 1");
    if (!(outer_tol > 0.0)) fail("outer_tol must be > 0");
    if (!(gpi_tol > 0.0)) fail("gpi_tol must be > 0");
    if (!(alm_tol > 0.0)) fail("alm_tol must be > 0");
    if (outer_max_iter < 1) fail("outer_max_iter must be >= 1");
    if (gpi_max_iter < 1) fail("gpi_max_iter must be >= 1");
    if (alm_max_iter < 1) fail("alm_max_iter must be >= 1");
    if (gpi_restarts < 0) fail("gpi_restarts must be >= 0");
    if (!(alm_mu0 > 0.0)) fail("alm_mu0 must be > 0");
    if (!(alm_rho >= 1.0)) fail("alm_rho must be >= 1");
}

SelectionResult make_selection(std::vector<Vector> scores_per_view) {
    SelectionResult res;
    for (std::size_t v = 0; v < scores_per_view.size(); ++v) {
        const auto& s = scores_per_view[v];
        for (Eigen::Index j = 0; j < s.size(); ++j) {
            res.ranked.push_back({static_cast<int>(v), static_cast<int>(j), s(j)});
        }
    }
    std::stable_sort(res.ranked.begin(), res.ranked.end(),
                     [](const RankedFeature& a, const RankedFeature& b) {
                         if (a.score != b.score) return a.score > b.score;
                         if (a.channel != b.channel) return a.channel < b.channel;
                         return a.feature < b.feature;
                     });
    res.scores_per_view = std::move(scores_per_view);
    return res;
}

}  // namespace idfs

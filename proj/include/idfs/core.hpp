#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace idfs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;
using FeatureRef = std::pair<int, int>;  // (channel, feature)

/// Machine-readable error codes surfaced through exceptions and the CLI error JSON.
enum class ErrorCode {
    ShapeMismatch,
    NonOneHotLabel,
    OrphanSample,
    LabelOutOfRange,
    NonFiniteValue,
    TooFewSamples,
    NoObservedSamples,
    InvalidHyperparams,
    EmptyStiefel,
    KOutOfRange,
    EmptyFeatureSet,
    InvalidArgument,
    SchemaError,
    IoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string context = {})
        : std::runtime_error(message), code_(code), context_(std::move(context)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& context() const noexcept { return context_; }

private:
    ErrorCode code_;
    std::string context_;
};

/// One channel's feature matrix (features x samples) and its per-sample presence.
///
/// Columns of absent samples are stored as zeros. The constructor zeroes them,
/// so whatever the caller placed there never reaches any computation.
class ChannelView {
public:
    ChannelView(int channel_index, Matrix features, Mask present,
                std::vector<std::string> feature_names = {});

    int channel_index() const noexcept { return channel_index_; }
    const Matrix& features() const noexcept { return features_; }
    const Mask& present() const noexcept { return present_; }
    const std::vector<std::string>& feature_names() const noexcept { return names_; }

    Eigen::Index n_features() const noexcept { return features_.rows(); }
    Eigen::Index n_samples() const noexcept { return features_.cols(); }
    Eigen::Index n_present() const noexcept { return present_.count(); }

private:
    int channel_index_;
    Matrix features_;
    Mask present_;
    std::vector<std::string> names_;
};

class MultiChannelDataset {
public:
    MultiChannelDataset(std::vector<ChannelView> views, Matrix labels,
                        std::vector<std::string> sample_ids = {});

    const std::vector<ChannelView>& views() const noexcept { return views_; }
    const ChannelView& view(std::size_t v) const { return views_.at(v); }
    const Matrix& labels() const noexcept { return labels_; }
    const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }

    Eigen::Index n_samples() const noexcept { return labels_.cols(); }
    Eigen::Index n_classes() const noexcept { return labels_.rows(); }
    std::size_t n_channels() const noexcept { return views_.size(); }
    Eigen::Index total_features() const noexcept;

    /// Integer class of each sample (row index of the 1 in its label column).
    std::vector<int> class_indices() const;

private:
    std::vector<ChannelView> views_;
    Matrix labels_;
    std::vector<std::string> sample_ids_;
};

/// Validating constructor; same checks as the MultiChannelDataset constructor.
MultiChannelDataset new_dataset(std::vector<ChannelView> views, Matrix labels);

/// c x n one-hot encoding of integer labels in [0, c).
Matrix one_hot(const std::vector<int>& labels, int n_classes);

struct Hyperparams {
    double lambda = 1.0;
    double gamma = 2.0;
    double outer_tol = 1e-6;
    int outer_max_iter = 100;
    double gpi_tol = 1e-10;
    int gpi_max_iter = 500;
    int gpi_restarts = 4;  // extra GPI starts per W-step
    double alm_tol = 1e-10;
    int alm_max_iter = 2000;
    double alm_mu0 = 1.0;
    double alm_rho = 1.1;
    std::uint64_t rng_seed = 0;

    // Ablation switches.
    bool freeze_alpha = false;  // keep alpha uniform, skip the alpha step
    bool ignore_indicator = false;  // treat every sample as observed (S = I)

    /// Throws InvalidHyperparams naming the violated constraint.
    void validate() const;
};

struct ModelState {
    std::vector<Matrix> w;
    std::vector<Vector> theta;
    Vector alpha;
    std::vector<Vector> bias;
    std::vector<double> objective_history;
    bool converged = false;
    int iterations_run = 0;
};

struct RankedFeature {
    int channel = 0;
    int feature = 0;
    double score = 0.0;

    friend bool operator==(const RankedFeature&, const RankedFeature&) = default;
};

struct SelectionResult {
    std::vector<RankedFeature> ranked;
    std::vector<Vector> scores_per_view;
};

/// Builds a SelectionResult from per-view scores: descending score, ties by (channel, feature).
SelectionResult make_selection(std::vector<Vector> scores_per_view);

}  // namespace idfs

#pragma once

#include "idfs/core.hpp"
#include "idfs/features.hpp"
#include "idfs/ranking.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace idfs {

using Index = Eigen::Index;
using IndexList = std::vector<Index>;

struct FoldSplit {
    IndexList train;
    IndexList test;
};

struct KFoldResult {
    std::vector<FoldSplit> folds;
    bool stratified = true;  // false when some class had fewer samples than folds
};

/// Seeded k-fold partition, stratified by class where every class has >= folds samples.
KFoldResult kfold_split(Index n, int folds, const std::vector<int>& labels, std::uint64_t seed);

struct LinearClassifier {
    Matrix weights;  // c x k
    Vector bias;     // c

    /// Argmax class per column of x (k x m); ties go to the lower class index.
    std::vector<int> predict(const Matrix& x) const;
};

/// One-vs-all ridge regression on one-hot targets with an unpenalised intercept.
LinearClassifier train_linear_classifier(const Matrix& x, const std::vector<int>& labels,
                                         int n_classes, double ridge);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Rank by variance over present samples.
SelectionResult baseline_variance(const MultiChannelDataset& ds);

/// Rank by Fisher score: sum_k n_k (mu_k - mu)^2 / sum_k n_k sigma_k^2 over present samples.
SelectionResult baseline_fisher(const MultiChannelDataset& ds);

/// Sample subset; views keep their presence masks restricted to `idx`.
MultiChannelDataset subset(const MultiChannelDataset& ds, const IndexList& idx);

/// Per-feature location and scale from the present samples listed in `idx`.
struct Standardizer {
    std::vector<Vector> mean;
    std::vector<Vector> scale;  // 1 for features with zero spread
};

Standardizer fit_standardizer(const MultiChannelDataset& ds, const IndexList& idx);
MultiChannelDataset standardize(const MultiChannelDataset& ds, const Standardizer& st);

/// Means over the present samples in `idx` of each selected feature (0 if none observed).
Vector imputation_means(const MultiChannelDataset& ds, const std::vector<FeatureRef>& selected,
                        const IndexList& idx);

/// k x |idx| design matrix; absent entries are replaced by `means`.
Matrix design_matrix(const MultiChannelDataset& ds, const std::vector<FeatureRef>& selected,
                     const IndexList& idx, const Vector& means);

enum class Method {
    IdfsMec,
    NoRedundancy,     // lambda = 0
    NoChannelWeight,  // alpha frozen uniform
    NoIndicator,      // every sample treated as observed
    Variance,
    Fisher,
};

const char* to_string(Method m) noexcept;
Method parse_method(std::string_view name);

struct AblationFlags {
    bool no_redundancy = false;
    bool no_channel_weight = false;
    bool no_indicator = false;
};

struct EvalConfig {
    int folds = 10;
    std::vector<int> k_grid;  // empty: 5%, 10%, 20%, 40% of the total feature count
    std::vector<double> missing_ratios{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
    std::vector<double> gamma_grid{2, 3, 4, 5, 6, 7, 8, 9};
    AblationFlags ablation;
    std::vector<Method> methods{Method::IdfsMec, Method::Variance, Method::Fisher};
    std::uint64_t seed = 0;
    Hyperparams hp;
    ScoreMode score = ScoreMode::Product;
    double ridge = 1.0;
    bool standardize = true;  // z-score features with train-fold statistics

    void validate() const;
    /// Methods plus the ablations switched on by the flags, without duplicates.
    std::vector<Method> resolved_methods() const;
    std::vector<int> resolved_k_grid(Index total_features) const;
};

/// Ranking produced by `method` from the training samples `train` only.
SelectionResult select_on_fold(const MultiChannelDataset& ds, const IndexList& train,
                               Method method, const EvalConfig& cfg);

struct FoldRecord {
    Method method = Method::IdfsMec;
    double ratio = 0.0;
    int k = 0;
    int fold = 0;
    double accuracy = 0.0;
    double planted_recall = -1.0;  // -1 without ground truth
    std::vector<FeatureRef> selected;

    friend bool operator==(const FoldRecord&, const FoldRecord&) = default;
};

struct CellSummary {
    Method method = Method::IdfsMec;
    double ratio = 0.0;
    int k = 0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double mean_recall = -1.0;

    friend bool operator==(const CellSummary&, const CellSummary&) = default;
};

struct EvalReport {
    std::vector<FoldRecord> records;  // ordered by (ratio, method, fold, k)
    std::vector<CellSummary> cells;   // ordered by (ratio, method, k)
    std::vector<int> k_grid;
    bool stratified = true;
    std::vector<bool> ratio_capped;           // per missing ratio
    std::map<std::string, double> wall_clock_s;  // per method, summed over jobs
    nlohmann::json config_echo;

    /// Records of one method in report order.
    std::vector<FoldRecord> records_for(Method m) const;
    const CellSummary& cell(Method m, double ratio, int k) const;
    /// Mean accuracy over every record of `m`.
    double mean_accuracy(Method m) const;
};

/// Accuracy records and selections equal, ignoring timings and the config echo.
bool same_results(const EvalReport& a, const EvalReport& b);

/// Cross-validated evaluation; for each missing ratio a seeded plan is applied to `ds`.
EvalReport run_experiment(const MultiChannelDataset& ds, const EvalConfig& cfg,
                          const std::vector<FeatureRef>& planted = {});

/// Generates the synthetic dataset first; its informative set is the ground truth.
EvalReport run_experiment(const SyntheticSpec& spec, const EvalConfig& cfg);

struct SweepRow {
    double lambda = 0.0;
    double gamma = 0.0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // across fold records
};

/// IDFS-MEC alone at every (lambda, gamma) of the config grids.
std::vector<SweepRow> sweep(const MultiChannelDataset& ds, const EvalConfig& cfg);

nlohmann::json config_to_json(const EvalConfig& cfg);
/// Rejects unknown keys; missing keys keep the defaults in `base`.
EvalConfig config_from_json(const nlohmann::json& j, EvalConfig base = {});

/// JSON without the wall-clock map (byte-stable for a fixed seed).
nlohmann::json report_to_json(const EvalReport& report);
nlohmann::json timing_to_json(const EvalReport& report);
/// Tidy CSV: method,ratio,k,fold,accuracy,planted_recall.
std::string report_to_csv(const EvalReport& report);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace idfs

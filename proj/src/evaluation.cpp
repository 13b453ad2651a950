#include "idfs/evaluation.hpp"

#include "idfs/dataset_io.hpp"
#include "idfs/optimizer.hpp"
#include "idfs/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace idfs {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq seq{seed, salt};
    std::uint32_t parts[2];
    seq.generate(parts, parts + 2);
    return (static_cast<std::uint64_t>(parts[0]) << 32) | parts[1];
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (const double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<int> labels_at(const std::vector<int>& cls, const IndexList& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (const Index j : idx) out.push_back(cls[static_cast<std::size_t>(j)]);
    return out;
}

Hyperparams method_hyperparams(Method m, Hyperparams hp) {
    if (m == Method::NoRedundancy) hp.lambda = 0.0;
    if (m == Method::NoChannelWeight) hp.freeze_alpha = true;
    if (m == Method::NoIndicator) hp.ignore_indicator = true;
    return hp;
}

template <typename Fn>
SelectionResult per_feature_scores(const MultiChannelDataset& ds, Fn&& score) {
    std::vector<Vector> scores;
    for (const auto& view : ds.views()) {
        Vector s(view.n_features());
        for (Eigen::Index f = 0; f < view.n_features(); ++f) s(f) = score(view, f);
        scores.push_back(std::move(s));
    }
    return make_selection(std::move(scores));
}

}  // namespace

KFoldResult kfold_split(Index n, int folds, const std::vector<int>& labels, std::uint64_t seed) {
    if (folds < 2) throw Error(ErrorCode::InvalidArgument, "folds must be >= 2");
    if (folds > n) {
        throw Error(ErrorCode::InvalidArgument, "folds must not exceed the sample count",
                    "folds=" + std::to_string(folds) + ", n=" + std::to_string(n));
    }
    if (static_cast<Index>(labels.size()) != n) {
        throw Error(ErrorCode::ShapeMismatch, "label count differs from n");
    }
    std::map<int, IndexList> by_class;
    for (Index j = 0; j < n; ++j) by_class[labels[static_cast<std::size_t>(j)]].push_back(j);

    KFoldResult res;
    res.stratified = std::all_of(by_class.begin(), by_class.end(),
                                 [folds](const auto& kv) { return kv.second.size() >= std::size_t(folds); });
    std::mt19937_64 rng(seed);
    std::vector<IndexList> test(static_cast<std::size_t>(folds));
    std::size_t next = 0;
    auto deal = [&](IndexList idx) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (const Index j : idx) {
            test[next].push_back(j);
            next = (next + 1) % test.size();
        }
    };
    if (res.stratified) {
        for (auto& [cls, idx] : by_class) deal(idx);
    } else {
        IndexList all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), Index{0});
        deal(std::move(all));
    }
    for (auto& t : test) {
        std::sort(t.begin(), t.end());
        FoldSplit split;
        std::vector<bool> in_test(static_cast<std::size_t>(n), false);
        for (const Index j : t) in_test[static_cast<std::size_t>(j)] = true;
        for (Index j = 0; j < n; ++j) {
            if (!in_test[static_cast<std::size_t>(j)]) split.train.push_back(j);
        }
        split.test = std::move(t);
        res.folds.push_back(std::move(split));
    }
    return res;
}

std::vector<int> LinearClassifier::predict(const Matrix& x) const {
    const Matrix scores = (weights * x).colwise() + bias;
    std::vector<int> out(static_cast<std::size_t>(x.cols()));
    for (Index j = 0; j < x.cols(); ++j) {
        Index best = 0;
        for (Index k = 1; k < scores.rows(); ++k) {
            if (scores(k, j) > scores(best, j)) best = k;
        }
        out[static_cast<std::size_t>(j)] = static_cast<int>(best);
    }
    return out;
}

LinearClassifier train_linear_classifier(const Matrix& x, const std::vector<int>& labels,
                                         int n_classes, double ridge) {
    if (x.rows() == 0) throw Error(ErrorCode::EmptyFeatureSet, "classifier needs at least one feature");
    if (x.cols() == 0) throw Error(ErrorCode::TooFewSamples, "classifier needs training samples");
    if (!(ridge >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
    const Matrix y = one_hot(labels, n_classes);
    const Vector x_mean = x.rowwise().mean();
    const Vector y_mean = y.rowwise().mean();
    const Matrix xc = x.colwise() - x_mean;
    const Matrix yc = y.colwise() - y_mean;

    LinearClassifier model;
    if (std::isinf(ridge)) {
        model.weights = Matrix::Zero(n_classes, x.rows());
    } else {
        Matrix gram = xc * xc.transpose();
        gram.diagonal().array() += ridge;
        // Minimum-norm solution when the system is singular (ridge 0, collinear features).
        model.weights = gram.completeOrthogonalDecomposition().solve(xc * yc.transpose()).transpose();
    }
    model.bias = y_mean - model.weights * x_mean;
    return model;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw Error(ErrorCode::ShapeMismatch, "prediction and truth sizes differ or are empty");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

SelectionResult baseline_variance(const MultiChannelDataset& ds) {
    return per_feature_scores(ds, [](const ChannelView& view, Eigen::Index f) {
        const Eigen::Index m = view.n_present();
        double mean = 0.0;
        for (Eigen::Index j = 0; j < view.n_samples(); ++j) {
            if (view.present()(j)) mean += view.features()(f, j);
        }
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (Eigen::Index j = 0; j < view.n_samples(); ++j) {
            if (view.present()(j)) var += (view.features()(f, j) - mean) * (view.features()(f, j) - mean);
        }
        return var / static_cast<double>(m);
    });
}

SelectionResult baseline_fisher(const MultiChannelDataset& ds) {
    const auto cls = ds.class_indices();
    const auto c = static_cast<std::size_t>(ds.n_classes());
    return per_feature_scores(ds, [&](const ChannelView& view, Eigen::Index f) {
        std::vector<double> sum(c, 0.0), sq(c, 0.0);
        std::vector<double> count(c, 0.0);
        double total = 0.0, total_n = 0.0;
        for (Eigen::Index j = 0; j < view.n_samples(); ++j) {
            if (!view.present()(j)) continue;
            const auto k = static_cast<std::size_t>(cls[static_cast<std::size_t>(j)]);
            const double v = view.features()(f, j);
            sum[k] += v;
            count[k] += 1.0;
            total += v;
            total_n += 1.0;
        }
        const double mu = total / total_n;
        for (Eigen::Index j = 0; j < view.n_samples(); ++j) {
            if (!view.present()(j)) continue;
            const auto k = static_cast<std::size_t>(cls[static_cast<std::size_t>(j)]);
            const double d = view.features()(f, j) - sum[k] / count[k];
            sq[k] += d * d;
        }
        double between = 0.0, within = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            if (count[k] == 0.0) continue;
            const double mk = sum[k] / count[k];
            between += count[k] * (mk - mu) * (mk - mu);
            within += sq[k];
        }
        if (within > 0.0) return between / within;
        return between > 0.0 ? std::numeric_limits<double>::max() : 0.0;
    });
}

MultiChannelDataset subset(const MultiChannelDataset& ds, const IndexList& idx) {
    std::vector<ChannelView> views;
    for (const auto& v : ds.views()) {
        Matrix x(v.n_features(), static_cast<Index>(idx.size()));
        Mask p(static_cast<Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            x.col(static_cast<Index>(i)) = v.features().col(idx[i]);
            p(static_cast<Index>(i)) = v.present()(idx[i]);
        }
        views.emplace_back(v.channel_index(), std::move(x), std::move(p), v.feature_names());
    }
    Matrix y(ds.n_classes(), static_cast<Index>(idx.size()));
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        y.col(static_cast<Index>(i)) = ds.labels().col(idx[i]);
        ids.push_back(ds.sample_ids()[static_cast<std::size_t>(idx[i])]);
    }
    return MultiChannelDataset(std::move(views), std::move(y), std::move(ids));
}

Standardizer fit_standardizer(const MultiChannelDataset& ds, const IndexList& idx) {
    Standardizer st;
    for (const auto& v : ds.views()) {
        Vector sum = Vector::Zero(v.n_features());
        double m = 0.0;
        for (const Index j : idx) {
            if (v.present()(j)) {
                sum += v.features().col(j);
                m += 1.0;
            }
        }
        const Vector mean = m > 0.0 ? Vector(sum / m) : Vector(Vector::Zero(v.n_features()));
        Vector sq = Vector::Zero(v.n_features());
        for (const Index j : idx) {
            if (v.present()(j)) sq += (v.features().col(j) - mean).cwiseAbs2();
        }
        Vector scale = m > 0.0 ? Vector((sq / m).cwiseSqrt()) : Vector(Vector::Ones(v.n_features()));
        for (Eigen::Index f = 0; f < scale.size(); ++f) {
            if (!(scale(f) > 1e-12 * std::max(1.0, std::abs(mean(f))))) scale(f) = 1.0;
        }
        st.mean.push_back(mean);
        st.scale.push_back(scale);
    }
    return st;
}

MultiChannelDataset standardize(const MultiChannelDataset& ds, const Standardizer& st) {
    std::vector<ChannelView> views;
    for (std::size_t v = 0; v < ds.n_channels(); ++v) {
        const auto& view = ds.view(v);
        Matrix x = (view.features().colwise() - st.mean[v]).array().colwise() / st.scale[v].array();
        views.emplace_back(view.channel_index(), std::move(x), view.present(), view.feature_names());
    }
    return MultiChannelDataset(std::move(views), ds.labels(), ds.sample_ids());
}

Vector imputation_means(const MultiChannelDataset& ds, const std::vector<FeatureRef>& selected,
                        const IndexList& idx) {
    Vector means = Vector::Zero(static_cast<Index>(selected.size()));
    for (std::size_t s = 0; s < selected.size(); ++s) {
        const auto& view = ds.view(static_cast<std::size_t>(selected[s].first));
        double sum = 0.0, m = 0.0;
        for (const Index j : idx) {
            if (view.present()(j)) {
                sum += view.features()(selected[s].second, j);
                m += 1.0;
            }
        }
        if (m > 0.0) means(static_cast<Index>(s)) = sum / m;
    }
    return means;
}

Matrix design_matrix(const MultiChannelDataset& ds, const std::vector<FeatureRef>& selected,
                     const IndexList& idx, const Vector& means) {
    Matrix x(static_cast<Index>(selected.size()), static_cast<Index>(idx.size()));
    for (std::size_t s = 0; s < selected.size(); ++s) {
        const auto& view = ds.view(static_cast<std::size_t>(selected[s].first));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            x(static_cast<Index>(s), static_cast<Index>(i)) =
                view.present()(idx[i]) ? view.features()(selected[s].second, idx[i])
                                       : means(static_cast<Index>(s));
        }
    }
    return x;
}

const char* to_string(Method m) noexcept {
    switch (m) {
        case Method::IdfsMec: return "idfs-mec";
        case Method::NoRedundancy: return "no-redundancy";
        case Method::NoChannelWeight: return "no-channel-weight";
        case Method::NoIndicator: return "no-indicator";
        case Method::Variance: return "variance";
        case Method::Fisher: return "fisher";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (const Method m : {Method::IdfsMec, Method::NoRedundancy, Method::NoChannelWeight,
                           Method::NoIndicator, Method::Variance, Method::Fisher}) {
        if (name == to_string(m)) return m;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown method", std::string(name));
}

void EvalConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (folds < 2) fail("folds must be >= 2");
    if (methods.empty()) fail("method list must not be empty");
    if (missing_ratios.empty()) fail("missing_ratios must not be empty");
    if (lambda_grid.empty()) fail("lambda_grid must not be empty");
    if (gamma_grid.empty()) fail("gamma_grid must not be empty");
    for (const double r : missing_ratios) {
        if (!(r >= 0.0 && r < 1.0)) fail("missing ratios must lie in [0, 1)");
    }
    for (const int k : k_grid) {
        if (k < 1) fail("k_grid entries must be >= 1");
    }
    if (!(ridge >= 0.0)) fail("ridge must be >= 0");
    hp.validate();
    for (const double l : lambda_grid) {
        Hyperparams h = hp;
        h.lambda = l;
        h.validate();
    }
    for (const double g : gamma_grid) {
        Hyperparams h = hp;
        h.gamma = g;
        h.validate();
    }
}

std::vector<Method> EvalConfig::resolved_methods() const {
    std::vector<Method> out;
    auto add = [&out](Method m) {
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    };
    for (const Method m : methods) add(m);
    if (ablation.no_redundancy) add(Method::NoRedundancy);
    if (ablation.no_channel_weight) add(Method::NoChannelWeight);
    if (ablation.no_indicator) add(Method::NoIndicator);
    return out;
}

std::vector<int> EvalConfig::resolved_k_grid(Index total_features) const {
    std::vector<int> out;
    if (k_grid.empty()) {
        for (const double frac : {0.05, 0.10, 0.20, 0.40}) {
            const int k = std::max(1, static_cast<int>(std::lround(frac * static_cast<double>(total_features))));
            if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
        }
    } else {
        out = k_grid;
    }
    for (const int k : out) {
        if (k < 1 || k > total_features) {
            throw Error(ErrorCode::KOutOfRange, "k must be in [1, total features]",
                        "k=" + std::to_string(k) + ", total=" + std::to_string(total_features));
        }
    }
    return out;
}

SelectionResult select_on_fold(const MultiChannelDataset& ds, const IndexList& train, Method method,
                               const EvalConfig& cfg) {
    const MultiChannelDataset raw = subset(ds, train);
    if (method == Method::Variance) return baseline_variance(raw);
    IndexList all(train.size());
    std::iota(all.begin(), all.end(), Index{0});
    const MultiChannelDataset tr = cfg.standardize ? standardize(raw, fit_standardizer(raw, all)) : raw;
    if (method == Method::Fisher) return baseline_fisher(tr);
    const Hyperparams hp = method_hyperparams(method, cfg.hp);
    return rank_features(fit(tr, hp), cfg.score, hp.gamma);
}

std::vector<FoldRecord> EvalReport::records_for(Method m) const {
    std::vector<FoldRecord> out;
    for (const auto& r : records) {
        if (r.method == m) out.push_back(r);
    }
    return out;
}

const CellSummary& EvalReport::cell(Method m, double ratio, int k) const {
    for (const auto& c : cells) {
        if (c.method == m && c.ratio == ratio && c.k == k) return c;
    }
    throw Error(ErrorCode::InvalidArgument, "no such report cell",
                std::string(to_string(m)) + ", ratio " + format_double(ratio) + ", k " + std::to_string(k));
}

double EvalReport::mean_accuracy(Method m) const {
    std::vector<double> acc;
    for (const auto& r : records) {
        if (r.method == m) acc.push_back(r.accuracy);
    }
    return mean_of(acc);
}

bool same_results(const EvalReport& a, const EvalReport& b) {
    return a.records == b.records && a.cells == b.cells && a.k_grid == b.k_grid &&
           a.stratified == b.stratified && a.ratio_capped == b.ratio_capped;
}

EvalReport run_experiment(const MultiChannelDataset& ds, const EvalConfig& cfg,
                          const std::vector<FeatureRef>& planted) {
    cfg.validate();
    for (const auto& [c, f] : planted) {
        if (c < 0 || static_cast<std::size_t>(c) >= ds.n_channels() || f < 0 ||
            f >= ds.view(static_cast<std::size_t>(c)).n_features()) {
            throw Error(ErrorCode::InvalidArgument, "planted feature out of range");
        }
    }
    const auto methods = cfg.resolved_methods();
    EvalReport report;
    report.k_grid = cfg.resolved_k_grid(ds.total_features());
    report.config_echo = config_to_json(cfg);
    const int k_max = *std::max_element(report.k_grid.begin(), report.k_grid.end());

    const auto cls = ds.class_indices();
    const auto split = kfold_split(ds.n_samples(), cfg.folds, cls, cfg.seed);
    report.stratified = split.stratified;

    std::vector<MultiChannelDataset> masked;
    for (std::size_t r = 0; r < cfg.missing_ratios.size(); ++r) {
        const auto plan = make_missing_plan(ds.n_samples(), static_cast<Index>(ds.n_channels()),
                                            cfg.missing_ratios[r], mix_seed(cfg.seed, r + 1));
        report.ratio_capped.push_back(plan.capped);
        masked.push_back(apply_missing(ds, plan));
    }

    const std::size_t n_folds = split.folds.size();
    const std::size_t n_jobs = cfg.missing_ratios.size() * methods.size() * n_folds;
    std::vector<std::vector<FoldRecord>> job_records(n_jobs);
    std::vector<double> job_seconds(n_jobs, 0.0);
    const std::set<FeatureRef> truth(planted.begin(), planted.end());

    parallel_for(n_jobs, [&](std::size_t job) {
        const auto start = std::chrono::steady_clock::now();
        const std::size_t fold = job % n_folds;
        const std::size_t mi = (job / n_folds) % methods.size();
        const std::size_t r = job / (n_folds * methods.size());
        const auto& data = masked[r];
        const auto& fs = split.folds[fold];

        const SelectionResult sel = select_on_fold(data, fs.train, methods[mi], cfg);
        const auto top = select_top_k(sel, static_cast<std::size_t>(k_max));

        // Classifier inputs: train-fold standardization, then train-fold mean imputation.
        const MultiChannelDataset eval_data =
            cfg.standardize ? standardize(data, fit_standardizer(data, fs.train)) : data;
        const auto train_y = labels_at(cls, fs.train);
        const auto test_y = labels_at(cls, fs.test);

        for (const int k : report.k_grid) {
            const std::vector<FeatureRef> chosen(top.begin(), top.begin() + k);
            const Vector means = imputation_means(eval_data, chosen, fs.train);
            const auto model = train_linear_classifier(design_matrix(eval_data, chosen, fs.train, means),
                                                       train_y, static_cast<int>(ds.n_classes()), cfg.ridge);
            FoldRecord rec;
            rec.method = methods[mi];
            rec.ratio = cfg.missing_ratios[r];
            rec.k = k;
            rec.fold = static_cast<int>(fold);
            rec.accuracy = accuracy(model.predict(design_matrix(eval_data, chosen, fs.test, means)), test_y);
            if (!truth.empty()) {
                const auto hits = std::count_if(chosen.begin(), chosen.end(),
                                                [&](const FeatureRef& p) { return truth.count(p) > 0; });
                rec.planted_recall = static_cast<double>(hits) / static_cast<double>(truth.size());
            }
            rec.selected = chosen;
            job_records[job].push_back(std::move(rec));
        }
        job_seconds[job] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    // Serial assembly in (ratio, method, fold, k) order.
    for (std::size_t job = 0; job < n_jobs; ++job) {
        const Method m = methods[(job / n_folds) % methods.size()];
        report.wall_clock_s[to_string(m)] += job_seconds[job];
        for (auto& rec : job_records[job]) report.records.push_back(std::move(rec));
    }
    for (const double ratio : cfg.missing_ratios) {
        for (const Method m : methods) {
            for (const int k : report.k_grid) {
                std::vector<double> acc, rec;
                for (const auto& fr : report.records) {
                    if (fr.method == m && fr.ratio == ratio && fr.k == k) {
                        acc.push_back(fr.accuracy);
                        rec.push_back(fr.planted_recall);
                    }
                }
                report.cells.push_back({m, ratio, k, mean_of(acc), sample_std(acc),
                                        truth.empty() ? -1.0 : mean_of(rec)});
            }
        }
    }
    return report;
}

EvalReport run_experiment(const SyntheticSpec& spec, const EvalConfig& cfg) {
    return run_experiment(generate_synthetic(spec), cfg, spec.informative);
}

std::vector<SweepRow> sweep(const MultiChannelDataset& ds, const EvalConfig& cfg) {
    cfg.validate();
    std::vector<SweepRow> rows;
    for (const double lambda : cfg.lambda_grid) {
        for (const double gamma : cfg.gamma_grid) {
            EvalConfig c = cfg;
            c.methods = {Method::IdfsMec};
            c.ablation = {};
            c.hp.lambda = lambda;
            c.hp.gamma = gamma;
            const auto report = run_experiment(ds, c);
            std::vector<double> acc;
            for (const auto& r : report.records) acc.push_back(r.accuracy);
            rows.push_back({lambda, gamma, mean_of(acc), sample_std(acc)});
        }
    }
    return rows;
}

nlohmann::json config_to_json(const EvalConfig& cfg) {
    nlohmann::json methods = nlohmann::json::array();
    for (const Method m : cfg.methods) methods.push_back(to_string(m));
    return {{"folds", cfg.folds},
            {"k_grid", cfg.k_grid},
            {"missing_ratios", cfg.missing_ratios},
            {"lambda_grid", cfg.lambda_grid},
            {"gamma_grid", cfg.gamma_grid},
            {"ablation",
             {{"no_redundancy", cfg.ablation.no_redundancy},
              {"no_channel_weight", cfg.ablation.no_channel_weight},
              {"no_indicator", cfg.ablation.no_indicator}}},
            {"methods", methods},
            {"seed", cfg.seed},
            {"hyperparams", hyperparams_to_json(cfg.hp)},
            {"score", to_string(cfg.score)},
            {"ridge", cfg.ridge},
            {"standardize", cfg.standardize}};
}

EvalConfig config_from_json(const nlohmann::json& j, EvalConfig base) {
    reject_unknown_keys(j,
                        {"folds", "k_grid", "missing_ratios", "lambda_grid", "gamma_grid", "ablation",
                         "methods", "seed", "hyperparams", "score", "ridge", "standardize"},
                        "eval");
    try {
        if (j.contains("folds")) base.folds = j.at("folds").get<int>();
        if (j.contains("k_grid")) base.k_grid = j.at("k_grid").get<std::vector<int>>();
        if (j.contains("missing_ratios")) base.missing_ratios = j.at("missing_ratios").get<std::vector<double>>();
        if (j.contains("lambda_grid")) base.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
        if (j.contains("gamma_grid")) base.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
        if (j.contains("ablation")) {
            const auto& a = j.at("ablation");
            reject_unknown_keys(a, {"no_redundancy", "no_channel_weight", "no_indicator"}, "eval.ablation");
            if (a.contains("no_redundancy")) base.ablation.no_redundancy = a.at("no_redundancy").get<bool>();
            if (a.contains("no_channel_weight")) base.ablation.no_channel_weight = a.at("no_channel_weight").get<bool>();
            if (a.contains("no_indicator")) base.ablation.no_indicator = a.at("no_indicator").get<bool>();
        }
        if (j.contains("methods")) {
            base.methods.clear();
            for (const auto& m : j.at("methods")) base.methods.push_back(parse_method(m.get<std::string>()));
        }
        if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("score")) base.score = parse_score_mode(j.at("score").get<std::string>());
        if (j.contains("ridge")) base.ridge = j.at("ridge").get<double>();
        if (j.contains("standardize")) base.standardize = j.at("standardize").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, "wrong type in evaluation config", e.what());
    }
    if (j.contains("hyperparams")) base.hp = hyperparams_from_json(j.at("hyperparams"), base.hp);
    return base;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells) {
        nlohmann::json cell = {{"method", to_string(c.method)},
                               {"ratio", c.ratio},
                               {"k", c.k},
                               {"mean_accuracy", c.mean_accuracy},
                               {"std_accuracy", c.std_accuracy}};
        if (c.mean_recall >= 0.0) cell["mean_planted_recall"] = c.mean_recall;
        cells.push_back(std::move(cell));
    }
    nlohmann::json selections = nlohmann::json::array();
    const int k_max = report.k_grid.empty() ? 0 : *std::max_element(report.k_grid.begin(), report.k_grid.end());
    for (const auto& r : report.records) {
        if (r.k != k_max) continue;
        nlohmann::json sel = nlohmann::json::array();
        for (const auto& [c, f] : r.selected) sel.push_back({c, f});
        selections.push_back({{"method", to_string(r.method)}, {"ratio", r.ratio}, {"fold", r.fold},
                              {"ranked", sel}});
    }
    return {{"config", report.config_echo},
            {"k_grid", report.k_grid},
            {"stratified", report.stratified},
            {"ratio_capped", report.ratio_capped},
            {"cells", cells},
            {"selections", selections}};
}

nlohmann::json timing_to_json(const EvalReport& report) {
    return {{"wall_clock_s", report.wall_clock_s}};
}

std::string report_to_csv(const EvalReport& report) {
    CsvTable t{{"method", "ratio", "k", "fold", "accuracy", "planted_recall"}, {}};
    for (const auto& r : report.records) {
        t.rows.push_back({to_string(r.method), format_double(r.ratio), std::to_string(r.k),
                          std::to_string(r.fold), format_double(r.accuracy),
                          r.planted_recall >= 0.0 ? format_double(r.planted_recall) : std::string()});
    }
    return to_csv(t);
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    CsvTable t{{"lambda", "gamma", "mean_accuracy", "std_accuracy"}, {}};
    for (const auto& r : rows) {
        t.rows.push_back({format_double(r.lambda), format_double(r.gamma), format_double(r.mean_accuracy),
                          format_double(r.std_accuracy)});
    }
    return to_csv(t);
}

}  // namespace idfs

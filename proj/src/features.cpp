#include "idfs/features.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <random>

namespace idfs {

namespace {

constexpr int kNonstationarySegments = 10;
constexpr int kHistogramBins = 32;
constexpr double kVarianceFloor = 1e-20;
constexpr double kBandpassLow = 1.0;
constexpr double kBandpassHigh = 45.0;

// Feature layout positions.
constexpr int kMean = 0;
constexpr int kVariance = 1;
constexpr int kApFirst = 7;
constexpr int kDeFirst = 12;
constexpr int kRatio = 17;
constexpr int kThetaBand = 1;
constexpr int kBetaBand = 3;

bool in_band(double f, double low, double high) { return f >= low && f < high; }

double normalized_entropy(const Vector& weights) {
    const double total = weights.sum();
    if (!(total > 0.0) || weights.size() < 2) return 0.0;
    double h = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        const double p = weights(i) / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h / std::log(static_cast<double>(weights.size()));
}

Vector demeaned(const Vector& x) { return (x.array() - x.mean()).matrix(); }

void validate_bands(const std::vector<BandDefinition>& bands, double fs) {
    for (const auto& b : bands) {
        if (!(b.low_hz > 0.0) || !(b.low_hz < b.high_hz) || b.high_hz > fs / 2.0) {
            throw Error(ErrorCode::InvalidArgument, "band must satisfy 0 < low < high <= fs/2",
                        b.name);
        }
    }
}

}  // namespace

const std::vector<BandDefinition>& canonical_bands() {
    static const std::vector<BandDefinition> bands{
        {"delta", 1.0, 4.0}, {"theta", 4.0, 8.0}, {"alpha", 8.0, 13.0},
        {"beta", 13.0, 30.0}, {"gamma", 30.0, 45.0}};
    return bands;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out{"mean",          "variance",        "nonstationary_index",
                                     "hoc",           "c0_complexity",   "spectral_entropy",
                                     "shannon_entropy"};
        for (const auto& b : canonical_bands()) out.push_back("ap_" + b.name);
        for (const auto& b : canonical_bands()) out.push_back("de_" + b.name);
        out.push_back("ap_beta_theta");
        return out;
    }();
    return names;
}

int feature_index(const std::string& name) {
    const auto& names = feature_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(ErrorCode::InvalidArgument, "unknown feature name", name);
    return static_cast<int>(it - names.begin());
}

void validate_epoch(const SignalEpoch& epoch) {
    if (!(epoch.sample_rate_hz > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
    }
    if (static_cast<double>(epoch.samples.size()) < 2.0 * epoch.sample_rate_hz) {
        throw Error(ErrorCode::TooFewSamples, "epoch must span at least two seconds",
                    "channel " + std::to_string(epoch.channel_id));
    }
    if (!epoch.samples.allFinite()) {
        throw Error(ErrorCode::NonFiniteValue, "epoch contains non-finite samples",
                    "channel " + std::to_string(epoch.channel_id));
    }
}

std::vector<std::complex<double>> dft(const Vector& x) {
    Eigen::FFT<double> fft;
    std::vector<double> in(x.data(), x.data() + x.size());
    std::vector<std::complex<double>> out;
    fft.fwd(out, in);
    return out;
}

Vector periodogram(const Vector& x) {
    const Eigen::Index n = x.size();
    const auto spectrum = dft(x);
    const Eigen::Index half = n / 2;
    Vector p(half + 1);
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    for (Eigen::Index k = 0; k <= half; ++k) {
        const bool unpaired = k == 0 || (n % 2 == 0 && k == half);
        p(k) = (unpaired ? 1.0 : 2.0) * std::norm(spectrum[static_cast<std::size_t>(k)]) * scale;
    }
    return p;
}

Vector band_limit(const Vector& x, double fs, double low_hz, double high_hz) {
    const Eigen::Index n = x.size();
    auto spectrum = dft(x);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index folded = std::min(k, n - k);
        if (!in_band(bin_frequency(folded, n, fs), low_hz, high_hz)) {
            spectrum[static_cast<std::size_t>(k)] = 0.0;
        }
    }
    Eigen::FFT<double> fft;
    std::vector<double> out;
    fft.inv(out, spectrum);
    return Eigen::Map<const Vector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Vector extract_time_features(const SignalEpoch& epoch) {
    validate_epoch(epoch);
    const Vector& raw = epoch.samples;
    const Eigen::Index n = raw.size();
    const Vector x = demeaned(raw);

    Vector out = Vector::Zero(kTimeFeatureCount);
    out(0) = raw.mean();
    const double variance = x.squaredNorm() / static_cast<double>(n);
    out(1) = variance;
    const double sd = std::sqrt(variance);
    if (!(sd > 0.0)) return out;  // constant signal: every other feature is 0

    // Non-stationary index: spread of segment means relative to the global spread.
    Vector seg_means(kNonstationarySegments);
    for (int s = 0; s < kNonstationarySegments; ++s) {
        const Eigen::Index begin = s * n / kNonstationarySegments;
        const Eigen::Index end = (s + 1) * n / kNonstationarySegments;
        seg_means(s) = x.segment(begin, end - begin).mean();
    }
    const double seg_sd = std::sqrt((seg_means.array() - seg_means.mean()).square().mean());
    out(2) = seg_sd / sd;

    // Higher-order crossings: sign changes of the first difference.
    Eigen::Index crossings = 0;
    for (Eigen::Index i = 0; i + 2 < n; ++i) {
        const double d0 = x(i + 1) - x(i);
        const double d1 = x(i + 2) - x(i + 1);
        if ((d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0)) ++crossings;
    }
    out(3) = static_cast<double>(crossings) / static_cast<double>(n);

    // C0 complexity: share of power in coefficients below the mean coefficient power.
    const auto spectrum = dft(x);
    Vector power(n);
    for (Eigen::Index k = 0; k < n; ++k) power(k) = std::norm(spectrum[static_cast<std::size_t>(k)]);
    const double total_power = power.sum();
    if (total_power > 0.0) {
        const double mean_power = total_power / static_cast<double>(n);
        out(4) = (power.array() < mean_power).select(power.array(), 0.0).sum() / total_power;
    }

    const Vector p = periodogram(x);
    out(5) = normalized_entropy(p.tail(p.size() - 1));

    // Amplitude histogram over [min, max].
    const double lo = x.minCoeff();
    const double width = x.maxCoeff() - lo;
    Vector counts = Vector::Zero(kHistogramBins);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto bin = static_cast<Eigen::Index>((x(i) - lo) / width * kHistogramBins);
        counts(std::clamp<Eigen::Index>(bin, 0, kHistogramBins - 1)) += 1.0;
    }
    out(6) = normalized_entropy(counts);
    return out;
}

BandFeatures extract_band_features(const SignalEpoch& epoch,
                                   const std::vector<BandDefinition>& bands) {
    validate_epoch(epoch);
    if (bands.size() != canonical_bands().size()) {
        throw Error(ErrorCode::InvalidArgument, "band features need the five canonical bands");
    }
    validate_bands(bands, epoch.sample_rate_hz);
    const Vector x = demeaned(epoch.samples);
    const Eigen::Index n = x.size();
    const double fs = epoch.sample_rate_hz;
    const Vector p = periodogram(x);

    const auto nb = static_cast<Eigen::Index>(bands.size());
    BandFeatures res;
    res.values = Vector::Zero(2 * nb + 1);
    for (Eigen::Index b = 0; b < nb; ++b) {
        const auto& band = bands[static_cast<std::size_t>(b)];
        double ap = 0.0;
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            if (in_band(bin_frequency(k, n, fs), band.low_hz, band.high_hz)) ap += p(k);
        }
        res.values(b) = ap;

        const Vector limited = band_limit(x, fs, band.low_hz, band.high_hz);
        const double var = (limited.array() - limited.mean()).square().mean();
        res.values(nb + b) =
            0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * std::max(var, kVarianceFloor));
    }
    // Theta power at round-off level of the total counts as zero.
    const double theta = res.values(kThetaBand);
    const double zero_level = 64.0 * std::numeric_limits<double>::epsilon() * p.sum();
    if (theta > zero_level) {
        res.values(2 * nb) = res.values(kBetaBand) / theta;
    } else {
        res.ratio_degenerate = true;
    }
    return res;
}

Vector extract_features(const SignalEpoch& epoch) {
    Vector out(kFeaturesPerChannel);
    out << extract_time_features(epoch), extract_band_features(epoch).values;
    return out;
}

bool plantable_feature(int feature) {
    return feature == kMean || feature == kVariance ||
           (feature >= kApFirst && feature < kApFirst + 5) ||
           (feature >= kDeFirst && feature < kDeFirst + 5) || feature == kRatio;
}

std::vector<std::vector<SignalEpoch>> synthesize_epochs(const SyntheticSpec& spec,
                                                        std::vector<int>* labels_out) {
    if (spec.n < 1 || spec.ch < 1 || spec.c < 1) {
        throw Error(ErrorCode::InvalidArgument, "n, ch and c must be positive");
    }
    if (!(spec.sample_rate_hz > 2.0 * kBandpassHigh) || !(spec.duration_s >= 2.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "sample rate must exceed 90 Hz and duration must be >= 2 s");
    }
    for (const auto& [v, f] : spec.informative) {
        if (v < 0 || v >= spec.ch || f < 0 || f >= kFeaturesPerChannel) {
            throw Error(ErrorCode::InvalidArgument, "informative feature out of range",
                        "(" + std::to_string(v) + ", " + std::to_string(f) + ")");
        }
        if (!plantable_feature(f)) {
            throw Error(ErrorCode::InvalidArgument, "feature cannot carry a planted class signal",
                        feature_names()[static_cast<std::size_t>(f)]);
        }
    }

    std::vector<int> labels(static_cast<std::size_t>(spec.n));
    for (int j = 0; j < spec.n; ++j) labels[static_cast<std::size_t>(j)] = j % spec.c;
    std::mt19937_64 label_rng(spec.seed);
    std::shuffle(labels.begin(), labels.end(), label_rng);

    const auto len = static_cast<Eigen::Index>(std::lround(spec.duration_s * spec.sample_rate_hz));
    const double fs = spec.sample_rate_hz;
    const auto& bands = canonical_bands();

    std::vector<std::vector<SignalEpoch>> epochs(static_cast<std::size_t>(spec.n));
    for (int j = 0; j < spec.n; ++j) {
        const double cls = labels[static_cast<std::size_t>(j)];
        auto& row = epochs[static_cast<std::size_t>(j)];
        for (int v = 0; v < spec.ch; ++v) {
            std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(v),
                              std::uint64_t{0x1d75}};
            std::mt19937_64 rng(seq);
            std::normal_distribution<double> normal(0.0, 1.0);

            Vector band_gain = Vector::Ones(static_cast<Eigen::Index>(bands.size()));
            double gain = 1.0;
            double offset = 0.0;
            for (const auto& [pv, f] : spec.informative) {
                if (pv != v) continue;
                const double boost = 1.0 + spec.effect * cls;
                if (f == kMean) offset += spec.effect * cls;
                else if (f == kVariance) gain *= boost;
                else if (f == kRatio) band_gain(kBetaBand) *= boost;
                else band_gain((f - kApFirst) % 5) *= boost;
            }

            Vector noise(len);
            for (Eigen::Index i = 0; i < len; ++i) noise(i) = normal(rng);
            auto spectrum = dft(noise);
            for (Eigen::Index k = 0; k < len; ++k) {
                const double f = bin_frequency(std::min(k, len - k), len, fs);
                double a = 0.0;
                if (in_band(f, kBandpassLow, kBandpassHigh)) {
                    a = 1.0 / std::sqrt(f);  // pink spectrum
                    for (std::size_t b = 0; b < bands.size(); ++b) {
                        if (in_band(f, bands[b].low_hz, bands[b].high_hz)) a *= band_gain(Eigen::Index(b));
                    }
                }
                spectrum[static_cast<std::size_t>(k)] *= a;
            }
            Eigen::FFT<double> fft;
            std::vector<double> shaped;
            fft.inv(shaped, spectrum);
            Vector signal = Eigen::Map<const Vector>(shaped.data(), len);
            signal *= gain;
            signal.array() += offset;
            row.push_back({std::move(signal), fs, v});
        }
    }
    if (labels_out) *labels_out = labels;
    return epochs;
}

MultiChannelDataset generate_synthetic(const SyntheticSpec& spec) {
    std::vector<int> labels;
    const auto epochs = synthesize_epochs(spec, &labels);
    std::vector<ChannelView> views;
    views.reserve(static_cast<std::size_t>(spec.ch));
    for (int v = 0; v < spec.ch; ++v) {
        Matrix x(kFeaturesPerChannel, spec.n);
        for (int j = 0; j < spec.n; ++j) {
            x.col(j) = extract_features(epochs[static_cast<std::size_t>(j)][static_cast<std::size_t>(v)]);
        }
        views.emplace_back(v, std::move(x), Mask::Constant(spec.n, true), feature_names());
    }
    return MultiChannelDataset(std::move(views), one_hot(labels, spec.c));
}

MissingPlan make_missing_plan(Eigen::Index n, Eigen::Index ch, double ratio, std::uint64_t seed) {
    if (!(ratio >= 0.0) || !(ratio < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "missing ratio must lie in [0, 1)");
    }
    if (n < 1 || ch < 1) throw Error(ErrorCode::InvalidArgument, "plan needs n, ch >= 1");

    MissingPlan plan;
    plan.ratio = ratio;
    plan.seed = seed;
    plan.mask.setConstant(n, ch, true);
    std::mt19937_64 rng(seed);

    const auto removals = static_cast<Eigen::Index>(std::lround(ratio * static_cast<double>(n)));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index v = 0; v < ch; ++v) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index i = 0; i < removals; ++i) plan.mask(order[static_cast<std::size_t>(i)], v) = false;
    }

    // Give each orphaned sample one channel back. To keep the per-channel count, move that
    // channel's removal onto a sample that is still observed elsewhere.
    for (Eigen::Index j = 0; j < n; ++j) {
        if (plan.mask.row(j).any()) continue;
        const auto v = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(ch));
        plan.mask(j, v) = true;
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        bool moved = false;
        for (const Eigen::Index k : order) {
            if (k != j && plan.mask(k, v) && plan.mask.row(k).count() >= 2) {
                plan.mask(k, v) = false;
                moved = true;
                break;
            }
        }
        if (!moved) plan.capped = true;
    }
    // Each view must keep two observed samples.
    for (Eigen::Index v = 0; v < ch; ++v) {
        for (Eigen::Index j = 0; j < n && plan.mask.col(v).count() < std::min<Eigen::Index>(2, n); ++j) {
            if (!plan.mask(j, v)) {
                plan.mask(j, v) = true;
                plan.capped = true;
            }
        }
    }
    return plan;
}

MultiChannelDataset apply_missing(const MultiChannelDataset& ds, const MissingPlan& plan) {
    if (plan.mask.rows() != ds.n_samples() ||
        plan.mask.cols() != static_cast<Eigen::Index>(ds.n_channels())) {
        throw Error(ErrorCode::ShapeMismatch, "missing plan must be n x ch");
    }
    if (!(plan.ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "missing ratio must be < 1");
    std::vector<ChannelView> views;
    views.reserve(ds.n_channels());
    for (std::size_t v = 0; v < ds.n_channels(); ++v) {
        const auto& old = ds.view(v);
        Mask present = old.present() && plan.mask.col(static_cast<Eigen::Index>(v));
        views.emplace_back(old.channel_index(), old.features(), std::move(present), old.feature_names());
    }
    return MultiChannelDataset(std::move(views), ds.labels(), ds.sample_ids());
}

}  // namespace idfs

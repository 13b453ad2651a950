#pragma once

#include "idfs/core.hpp"

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace idfs {

struct SignalEpoch {
    Vector samples;
    double sample_rate_hz = 250.0;
    int channel_id = 0;
};

struct BandDefinition {
    std::string name;
    double low_hz = 0.0;
    double high_hz = 0.0;  // exclusive
};

/// delta 1-4, theta 4-8, alpha 8-13, beta 13-30, gamma 30-45 Hz.
const std::vector<BandDefinition>& canonical_bands();

inline constexpr int kTimeFeatureCount = 7;
inline constexpr int kBandFeatureCount = 11;
inline constexpr int kFeaturesPerChannel = kTimeFeatureCount + kBandFeatureCount;

/// Per-channel feature layout (18 entries):
///   0 mean, 1 variance, 2 nonstationary_index, 3 hoc, 4 c0_complexity,
///   5 spectral_entropy, 6 shannon_entropy, 7-11 ap_<band>, 12-16 de_<band>, 17 ap_beta_theta.
const std::vector<std::string>& feature_names();

/// Index of a named feature in the per-channel layout; throws on unknown names.
int feature_index(const std::string& name);

/// Throws unless the epoch is finite and at least two seconds long.
void validate_epoch(const SignalEpoch& epoch);

/// Full complex DFT of a real signal.
std::vector<std::complex<double>> dft(const Vector& x);

/// One-sided periodogram P_k, k = 0..N/2, scaled so that sum_k P_k = mean(x^2).
Vector periodogram(const Vector& x);

/// Frequency of one-sided bin k.
inline double bin_frequency(Eigen::Index k, Eigen::Index n, double fs) {
    return static_cast<double>(k) * fs / static_cast<double>(n);
}

/// Keeps only the DFT coefficients whose |frequency| lies in [low, high).
Vector band_limit(const Vector& x, double fs, double low_hz, double high_hz);

/// mean, variance, non-stationary index, higher-order crossings, C0 complexity,
/// spectral entropy, Shannon entropy. Everything but the mean is computed on the
/// mean-removed signal.
Vector extract_time_features(const SignalEpoch& epoch);

struct BandFeatures {
    Vector values;  // 5 AP, 5 DE, AP_beta / AP_theta
    bool ratio_degenerate = false;
};

BandFeatures extract_band_features(const SignalEpoch& epoch,
                                   const std::vector<BandDefinition>& bands = canonical_bands());

/// All 18 features of one epoch.
Vector extract_features(const SignalEpoch& epoch);

struct SyntheticSpec {
    int n = 200;
    int ch = 4;
    int c = 2;
    std::uint64_t seed = 0;
    std::vector<std::pair<int, int>> informative;  // (channel, feature index)
    double sample_rate_hz = 250.0;
    double duration_s = 4.0;
    double effect = 1.0;  // relative amplitude increase per class step
};

/// Feature indices whose class signal the generator can plant.
bool plantable_feature(int feature);

/// Multi-channel recordings synthesised as 1-45 Hz pink noise; class k scales the generating
/// parameter of each planted (channel, feature) by (1 + effect * k). Features are extracted
/// with the functions above. Labels are balanced (sample j has class j mod c before shuffling).
MultiChannelDataset generate_synthetic(const SyntheticSpec& spec);

/// The raw epochs behind generate_synthetic, samples-major: epochs[sample][channel].
std::vector<std::vector<SignalEpoch>> synthesize_epochs(const SyntheticSpec& spec,
                                                        std::vector<int>* labels = nullptr);

struct MissingPlan {
    double ratio = 0.0;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // n x ch, true = keep
    std::uint64_t seed = 0;
    bool capped = false;  // constraints forced fewer removals than requested
};

/// Removes round(ratio * n) samples per channel, then repairs samples left with no channel
/// by swapping the removal onto a sample that still has another channel.
MissingPlan make_missing_plan(Eigen::Index n, Eigen::Index ch, double ratio, std::uint64_t seed);

/// Marks plan-removed (sample, channel) pairs absent. Idempotent for a fixed plan.
MultiChannelDataset apply_missing(const MultiChannelDataset& ds, const MissingPlan& plan);

}  // namespace idfs

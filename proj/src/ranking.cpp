#include "idfs/ranking.hpp"

#include <cmath>

namespace idfs {

ScoreMode parse_score_mode(std::string_view name) {
    if (name == "product") return ScoreMode::Product;
    if (name == "product-gamma") return ScoreMode::ProductGamma;
    throw Error(ErrorCode::InvalidArgument, "unknown score mode", std::string(name));
}

const char* to_string(ScoreMode mode) noexcept {
    return mode == ScoreMode::Product ? "product" : "product-gamma";
}

SelectionResult rank_features(const ModelState& state, ScoreMode mode, double gamma) {
    if (static_cast<std::size_t>(state.alpha.size()) != state.theta.size()) {
        throw Error(ErrorCode::ShapeMismatch, "alpha and theta disagree on channel count");
    }
    std::vector<Vector> scores;
    scores.reserve(state.theta.size());
    for (std::size_t v = 0; v < state.theta.size(); ++v) {
        double a = state.alpha(static_cast<Eigen::Index>(v));
        if (mode == ScoreMode::ProductGamma) a = std::pow(a, gamma);
        // Clamp round-off negatives so scores stay nonnegative.
        scores.push_back((a * state.theta[v]).cwiseMax(0.0));
    }
    return make_selection(std::move(scores));
}

std::vector<FeatureRef> select_top_k(const SelectionResult& res, std::size_t k) {
    if (k < 1 || k > res.ranked.size()) {
        throw Error(ErrorCode::KOutOfRange, "k must be in [1, total features]",
                    "k=" + std::to_string(k) + ", total=" + std::to_string(res.ranked.size()));
    }
    std::vector<FeatureRef> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.emplace_back(res.ranked[i].channel, res.ranked[i].feature);
    return out;
}

}  // namespace idfs

#pragma once

#include "idfs/core.hpp"

#include <string_view>
#include <utility>

namespace idfs {

enum class ScoreMode {
    Product,       // alpha_v * theta_vj
    ProductGamma,  // alpha_v^gamma * theta_vj
};

ScoreMode parse_score_mode(std::string_view name);
const char* to_string(ScoreMode mode) noexcept;

SelectionResult rank_features(const ModelState& state, ScoreMode mode = ScoreMode::Product,
                              double gamma = 2.0);

/// First k (channel, feature) pairs of the ranking.
std::vector<FeatureRef> select_top_k(const SelectionResult& res, std::size_t k);

}  // namespace idfs

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "idfs/ranking.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace idfs;

namespace {

ModelState state_from(Vector alpha, std::vector<Vector> theta) {
    ModelState s;
    s.alpha = std::move(alpha);
    s.theta = std::move(theta);
    return s;
}

ModelState random_state(oracle::Rng& rng, int ch, int d) {
    std::vector<Vector> theta;
    for (int v = 0; v < ch; ++v) theta.push_back(oracle::random_simplex(d, rng));
    return state_from(oracle::random_simplex(ch, rng), std::move(theta));
}

}  // namespace

TEST_CASE("zero-weight channel scores zero and sorts after the live one") {
    Vector t0(2), t1(2);
    t0 << 0.7, 0.3;
    t1 << 0.5, 0.5;
    Vector alpha(2);
    alpha << 1.0, 0.0;
    const auto res = rank_features(state_from(alpha, {t0, t1}));
    REQUIRE(res.ranked.size() == 4);
    CHECK(res.ranked[0] == RankedFeature{0, 0, 0.7});
    CHECK(res.ranked[1] == RankedFeature{0, 1, 0.3});
    CHECK(res.ranked[2] == RankedFeature{1, 0, 0.0});
    CHECK(res.ranked[3] == RankedFeature{1, 1, 0.0});
}

TEST_CASE("single channel ranking is theta sorted") {
    oracle::Rng rng(4);
    const Vector theta = oracle::random_simplex(9, rng);
    const auto res = rank_features(state_from(Vector::Ones(1), {theta}));
    std::vector<int> order(9);
    for (int i = 0; i < 9; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return theta(a) > theta(b); });
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(res.ranked[i].feature == order[i]);
        CHECK(res.ranked[i].score == theta(order[i]));
    }
}

TEST_CASE("product-gamma scores use alpha to the power gamma") {
    Vector t0(2), t1(2);
    t0 << 0.9, 0.1;
    t1 << 0.6, 0.4;
    Vector alpha(2);
    alpha << 0.4, 0.6;
    const auto plain = rank_features(state_from(alpha, {t0, t1}), ScoreMode::Product);
    const auto powered = rank_features(state_from(alpha, {t0, t1}), ScoreMode::ProductGamma, 3.0);
    CHECK(plain.scores_per_view[0](0) == doctest::Approx(0.36));
    CHECK(powered.scores_per_view[0](0) == doctest::Approx(std::pow(0.4, 3.0) * 0.9));
    CHECK(powered.scores_per_view[1](1) == doctest::Approx(std::pow(0.6, 3.0) * 0.4));
    // Within one view the two modes agree on order.
    CHECK(parse_score_mode("product") == ScoreMode::Product);
    CHECK(parse_score_mode("product-gamma") == ScoreMode::ProductGamma);
    CHECK_THROWS_AS(parse_score_mode("sum"), Error);
    CHECK(std::string(to_string(ScoreMode::ProductGamma)) == "product-gamma");
}

TEST_CASE("ties break by channel then feature") {
    const auto res = rank_features(state_from(Vector::Constant(2, 0.5), {Vector::Constant(3, 1.0 / 3), Vector::Constant(3, 1.0 / 3)}));
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(res.ranked[i].channel == static_cast<int>(i / 3));
        CHECK(res.ranked[i].feature == static_cast<int>(i % 3));
    }
}

TEST_CASE("permuting a view's features permutes its ranking entries") {
    oracle::Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = random_state(rng, 3, 6);
        const auto base = rank_features(s);
        std::vector<int> perm{3, 0, 5, 1, 4, 2};  // new position i holds old feature perm[i]
        Vector permuted(6);
        for (int i = 0; i < 6; ++i) permuted(i) = s.theta[1](perm[static_cast<std::size_t>(i)]);
        s.theta[1] = permuted;
        const auto moved = rank_features(s);
        REQUIRE(base.ranked.size() == moved.ranked.size());
        for (std::size_t i = 0; i < base.ranked.size(); ++i) {
            CHECK(base.ranked[i].channel == moved.ranked[i].channel);
            CHECK(base.ranked[i].score == moved.ranked[i].score);
            if (moved.ranked[i].channel == 1) {
                CHECK(perm[static_cast<std::size_t>(moved.ranked[i].feature)] == base.ranked[i].feature);
            } else {
                CHECK(base.ranked[i].feature == moved.ranked[i].feature);
            }
        }
    }
}

TEST_CASE("ranking order is invariant under positive rescaling of scores") {
    oracle::Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = random_state(rng, 4, 5);
        const auto res = rank_features(s);
        for (const double factor : {1e-6, 0.37, 12.5, 1e8}) {
            std::vector<Vector> scaled;
            for (const auto& v : res.scores_per_view) scaled.push_back(v * factor);
            const auto again = make_selection(scaled);
            for (std::size_t i = 0; i < res.ranked.size(); ++i) {
                CHECK(again.ranked[i].channel == res.ranked[i].channel);
                CHECK(again.ranked[i].feature == res.ranked[i].feature);
            }
        }
    }
}

TEST_CASE("top-k selection") {
    oracle::Rng rng(11);
    const auto res = rank_features(random_state(rng, 3, 4));
    const std::size_t total = res.ranked.size();

    SUBCASE("k = total returns every feature once") {
        const auto all = select_top_k(res, total);
        CHECK(all.size() == total);
        auto sorted = all;
        std::sort(sorted.begin(), sorted.end());
        CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
    SUBCASE("k = 1 is the global argmax") {
        double best = -1.0;
        FeatureRef arg{};
        for (std::size_t v = 0; v < res.scores_per_view.size(); ++v) {
            for (Eigen::Index j = 0; j < res.scores_per_view[v].size(); ++j) {
                if (res.scores_per_view[v](j) > best) {
                    best = res.scores_per_view[v](j);
                    arg = {static_cast<int>(v), static_cast<int>(j)};
                }
            }
        }
        CHECK(select_top_k(res, 1).front() == arg);
    }
    SUBCASE("k and k + 1 selections are nested prefixes") {
        for (std::size_t k = 1; k < total; ++k) {
            const auto a = select_top_k(res, k);
            const auto b = select_top_k(res, k + 1);
            CHECK(std::equal(a.begin(), a.end(), b.begin()));
        }
    }
    SUBCASE("k outside [1, total] is rejected") {
        for (const std::size_t k : {std::size_t{0}, total + 1}) {
            try {
                select_top_k(res, k);
                FAIL("expected KOutOfRange");
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::KOutOfRange);
            }
        }
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "idfs/core.hpp"
#include "oracles.hpp"

using namespace idfs;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an idfs::Error");
    return ErrorCode::InvalidArgument;
}

Mask all_present(Eigen::Index n) { return Mask::Constant(n, true); }

}  // namespace

TEST_CASE("one_hot encodes labels column-wise") {
    const Matrix y = one_hot({0, 1, 1}, 2);
    Matrix expected(2, 3);
    expected << 1, 0, 0, 0, 1, 1;
    CHECK(y == expected);
    CHECK(one_hot({0}, 1) == Matrix::Ones(1, 1));
    CHECK(code_of([] { one_hot({2}, 2); }) == ErrorCode::LabelOutOfRange);
}

TEST_CASE("new_dataset echoes shapes") {
    oracle::Rng rng(1);
    std::vector<ChannelView> views;
    views.emplace_back(0, oracle::gaussian(3, 4, rng), all_present(4));
    views.emplace_back(1, oracle::gaussian(5, 4, rng), all_present(4));
    const auto ds = new_dataset(std::move(views), one_hot({0, 1, 0, 1}, 2));
    CHECK(ds.n_channels() == 2);
    CHECK(ds.n_samples() == 4);
    CHECK(ds.n_classes() == 2);
    CHECK(ds.total_features() == 8);
    CHECK(ds.class_indices() == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("new_dataset rejects soft labels") {
    oracle::Rng rng(2);
    std::vector<ChannelView> views;
    views.emplace_back(0, oracle::gaussian(3, 2, rng), all_present(2));
    Matrix y(2, 2);
    y << 1, 0.5, 0, 0.5;
    CHECK(code_of([&] { new_dataset(views, y); }) == ErrorCode::NonOneHotLabel);
}

TEST_CASE("new_dataset rejects orphan samples") {
    oracle::Rng rng(3);
    Mask p(4);
    p << true, true, true, false;
    std::vector<ChannelView> views;
    views.emplace_back(0, oracle::gaussian(3, 4, rng), p);
    views.emplace_back(1, oracle::gaussian(2, 4, rng), p);
    CHECK(code_of([&] { new_dataset(views, one_hot({0, 1, 0, 1}, 2)); }) ==
          ErrorCode::OrphanSample);
}

TEST_CASE("channel view zeroes absent columns and validates") {
    Matrix x(2, 3);
    x << 1, 2, 3, 4, 5, 6;
    Mask p(3);
    p << true, false, true;
    const ChannelView view(0, x, p);
    CHECK(view.features().col(1).isZero());
    CHECK(view.features()(0, 2) == 3.0);

    Matrix bad = x;
    bad(0, 1) = std::nan("");
    CHECK_NOTHROW(ChannelView(0, bad, p));  // NaN hidden behind an absent sample is fine
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK(code_of([&] { ChannelView(0, bad, p); }) == ErrorCode::NonFiniteValue);

    Mask one(3);
    one << true, false, false;
    CHECK(code_of([&] { ChannelView(0, x, one); }) == ErrorCode::TooFewSamples);
    CHECK(code_of([&] { ChannelView(0, x, Mask::Constant(2, true)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("hyperparameter validation") {
    Hyperparams hp;
    CHECK_NOTHROW(hp.validate());
    hp.gamma = 1.0;
    CHECK(code_of([&] { hp.validate(); }) == ErrorCode::InvalidHyperparams);
    hp = {};
    hp.lambda = -1e-3;
    CHECK(code_of([&] { hp.validate(); }) == ErrorCode::InvalidHyperparams);
    hp = {};
    hp.gpi_max_iter = 0;
    CHECK(code_of([&] { hp.validate(); }) == ErrorCode::InvalidHyperparams);
    hp = {};
    hp.alm_tol = 0;
    CHECK(code_of([&] { hp.validate(); }) == ErrorCode::InvalidHyperparams);
}

TEST_CASE("make_selection sorts descending with lexicographic ties") {
    std::vector<Vector> scores{Vector{{0.2, 0.5}}, Vector{{0.5, 0.1}}};
    const auto res = make_selection(scores);
    REQUIRE(res.ranked.size() == 4);
    CHECK(res.ranked[0] == RankedFeature{0, 1, 0.5});
    CHECK(res.ranked[1] == RankedFeature{1, 0, 0.5});
    CHECK(res.ranked[2] == RankedFeature{0, 0, 0.2});
    CHECK(res.ranked[3] == RankedFeature{1, 1, 0.1});
}

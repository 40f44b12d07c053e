#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "prefab/error.hpp"
#include "prefab/rng.hpp"
#include "prefab/samplers.hpp"

using namespace prefab;

namespace {

Session session_with(const std::vector<std::string>& names, std::size_t T) {
    Session s;
    s.id = "s";
    s.feature_names = names;
    s.frames = FrameMatrix(T, names.size());
    s.gt = std::vector<double>(T, 0.0);
    return s;
}

}  // namespace

TEST(RoundCount, HalfToEven) {
    EXPECT_EQ(round_count(2.5), 2u);
    EXPECT_EQ(round_count(3.5), 4u);
    EXPECT_EQ(round_count(14.49), 14u);
    EXPECT_EQ(round_count(0.6), 1u);
    EXPECT_THROW(round_count(0.0), Error);
    EXPECT_THROW(round_count(-3.0), Error);
}

TEST(RandomPoints, DistinctSortedInRangeAndSeeded) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto p = random_points(100, 14.5, seed);
        EXPECT_EQ(p.size(), 14u);
        EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
        EXPECT_EQ(std::set<std::size_t>(p.begin(), p.end()).size(), p.size());
        EXPECT_LT(p.back(), 100u);
        EXPECT_EQ(random_points(100, 14.5, seed), p);
    }
    EXPECT_NE(random_points(1000, 10, 1), random_points(1000, 10, 2));
    EXPECT_EQ(random_points(5, 5, 3), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    try {
        random_points(5, 6, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CountTooLarge);
    }
}

TEST(RandomPoints, RoughlyUniform) {
    std::vector<int> hist(10, 0);
    for (std::uint64_t seed = 0; seed < 2000; ++seed)
        for (auto p : random_points(100, 5, seed)) ++hist[p / 10];
    for (int h : hist) EXPECT_NEAR(h, 1000, 150);
}

TEST(UniformPoints, Examples) {
    EXPECT_EQ(uniform_points(100, 4), (std::vector<std::size_t>{12, 37, 62, 87}));
    EXPECT_EQ(uniform_points(10, 1), (std::vector<std::size_t>{5}));
    EXPECT_EQ(uniform_points(3, 3), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Samplers, RegionsComeFromExpandedPoints) {
    const InflectionConfig cfg;
    const auto u = uniform_sampler(400, 4, {4, 1}, cfg);
    EXPECT_EQ(u, (std::vector<TimeInterval>{{40, 60}, {140, 160}, {240, 260}, {340, 360}}));
    const auto r = random_sampler(400, 4, 7, {4, 1}, cfg);
    const auto pts = random_points(400, 4, 7);
    EXPECT_EQ(r, expand_and_merge(pts, 400, {4, 1}, cfg));
}

TEST(RuleBased, ShortAndLongRuns) {
    // 4 Hz: a run of at most 20 changed samples is short
    std::vector<double> score(200, 0.0);
    double v = 0;
    for (std::size_t t = 10; t < 13; ++t) score[t] = (v += 1);  // run 10..12
    for (std::size_t t = 13; t < 60; ++t) score[t] = v;
    for (std::size_t t = 60; t < 90; ++t) score[t] = (v += 1);  // run 60..89
    for (std::size_t t = 90; t < 200; ++t) score[t] = v;
    EXPECT_EQ(rule_based_points(score, {4, 1}), (std::vector<std::size_t>{11, 60, 89}));

    std::vector<double> boundary(60, 0.0);
    for (std::size_t t = 10; t < 30; ++t) boundary[t] = static_cast<double>(t);  // 20 changes
    for (std::size_t t = 30; t < 60; ++t) boundary[t] = 29;
    EXPECT_EQ(rule_based_points(boundary, {4, 1}), (std::vector<std::size_t>{19}));
    for (std::size_t t = 30; t < 60; ++t) boundary[t] = 30;  // 21 changes
    EXPECT_EQ(rule_based_points(boundary, {4, 1}), (std::vector<std::size_t>{10, 30}));
    EXPECT_TRUE(rule_based_points(std::vector<double>(50, 3.0), {4, 1}).empty());
}

TEST(RuleBased, UnknownFeature) {
    const auto s = session_with({"a", "b"}, 30);
    try {
        rule_based_sampler(s, "score", InflectionConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownFeature);
    }
}

TEST(RankFeatures, OrdersByAbsoluteCorrelation) {
    Rng rng(51);
    auto s1 = session_with({"t_s", "follow", "oppose", "noise", "flat"}, 300);
    auto s2 = s1;
    for (auto* s : {&s1, &s2}) {
        double g = 0, f = 0, o = 0;
        for (std::size_t t = 0; t < 300; ++t) {
            const double dg = rng.normal();
            g += dg;
            f += dg + 0.3 * rng.normal();
            o += -dg + 1.0 * rng.normal();
            (*s->gt)[t] = g;
            s->frames.at(t, 0) = 0.25 * t;
            s->frames.at(t, 1) = f;
            s->frames.at(t, 2) = o;
            s->frames.at(t, 3) = rng.normal();
            s->frames.at(t, 4) = 1.0;
        }
    }
    const std::vector<const Session*> sessions{&s1, &s2};
    const auto ranking = rank_features(sessions);
    ASSERT_EQ(ranking.size(), 4u);
    EXPECT_EQ(ranking[0].feature, "follow");
    EXPECT_GT(ranking[0].r, 0.9);
    EXPECT_EQ(ranking[1].feature, "oppose");
    EXPECT_LT(ranking[1].r, -0.5);
    EXPECT_EQ(ranking[0].n, 598u);
    EXPECT_EQ(ranking[3].feature, "flat");
    EXPECT_TRUE(ranking[3].zero_variance);
    EXPECT_EQ(ranking[3].r, 0.0);

    const auto path = std::filesystem::temp_directory_path() / "prefab_rank.csv";
    write_feature_ranking_csv(path, ranking);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "rank,feature,r,abs_r,n,zero_variance");
}

TEST(RankFeatures, Errors) {
    auto s = session_with({"a"}, 30);
    s.gt.reset();
    const std::vector<const Session*> one{&s};
    try {
        rank_features(one);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoGroundTruth);
    }
    auto tiny = session_with({"a"}, 1);
    const std::vector<const Session*> short_one{&tiny};
    EXPECT_THROW(rank_features(short_one), Error);
}

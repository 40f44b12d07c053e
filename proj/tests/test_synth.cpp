#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "prefab/pipeline.hpp"
#include "prefab/synth.hpp"

using namespace prefab;

TEST(Archetypes, ShapesHitTheirEnds) {
    using synth::Archetype;
    EXPECT_NEAR(synth::archetype_value(Archetype::Rising, 0), 0.0, 1e-12);
    EXPECT_NEAR(synth::archetype_value(Archetype::Rising, 1), 1.0, 1e-12);
    EXPECT_NEAR(synth::archetype_value(Archetype::Falling, 0), 1.0, 1e-12);
    EXPECT_NEAR(synth::archetype_value(Archetype::Hill, 0.4, 0.4), 1.0, 1e-12);
    EXPECT_NEAR(synth::archetype_value(Archetype::Valley, 0.6, 0.6), 0.0, 1e-12);
}

TEST(ArchetypeCorpus, SizesLabelsAndDeterminism) {
    const synth::ArchetypeCorpusOptions opt{5, 100, 140, 0.05, 11};
    const auto a = synth::make_archetype_corpus(opt);
    ASSERT_EQ(a.traces.size(), 20u);
    for (std::size_t i = 0; i < a.traces.size(); ++i) {
        EXPECT_EQ(a.labels[i], static_cast<int>(i % 4));
        EXPECT_GE(a.traces[i].size(), 100u);
        EXPECT_LE(a.traces[i].size(), 140u);
    }
    EXPECT_EQ(synth::make_archetype_corpus(opt).traces, a.traces);
}

TEST(World, ShapeAndDeterminism) {
    synth::WorldOptions opt;
    opt.train_sessions = 4;
    opt.test_sessions = 2;
    opt.seed = 7;
    const auto c = synth::make_world(opt);
    ASSERT_EQ(c.sessions.size(), 6u);
    EXPECT_EQ(c.train_ids.size(), 4u);
    EXPECT_EQ(c.test_ids.size(), 2u);
    for (const auto& s : c.sessions) {
        EXPECT_EQ(s.length(), 480u);
        EXPECT_EQ(s.feature_names, synth::world_feature_names());
        EXPECT_EQ(s.biography_keys, synth::world_biography_keys());
        ASSERT_TRUE(s.gt);
        const auto [lo, hi] = std::minmax_element(s.gt->begin(), s.gt->end());
        EXPECT_EQ(*lo, 0.0);
        EXPECT_EQ(*hi, 1.0);
        // score never decreases
        const auto score = s.feature_column(static_cast<std::size_t>(s.feature_index("score")));
        EXPECT_TRUE(std::is_sorted(score.begin(), score.end()));
    }
    const auto again = synth::make_world(opt);
    EXPECT_EQ(again.sessions[3].frames.data, c.sessions[3].frames.data);
    EXPECT_EQ(*again.sessions[3].gt, *c.sessions[3].gt);
    EXPECT_EQ(synth::world_archetypes(opt).size(), 6u);
}

TEST(World, FlatSegmentFreezesGroundTruth) {
    synth::WorldOptions opt;
    opt.train_sessions = 3;
    opt.test_sessions = 1;
    opt.feature_noise_sd = 0.05;
    opt.flat = synth::FlatSegment{};
    const auto c = synth::make_world(opt);
    for (const auto& s : c.sessions) {
        const auto& gt = *s.gt;
        for (std::size_t t = 181; t < 300; ++t) EXPECT_EQ(gt[t], gt[180]);
        // features still move because of observation noise
        EXPECT_NE(s.frames.at(200, 0), s.frames.at(201, 0));
        const auto score = s.feature_column(static_cast<std::size_t>(s.feature_index("score")));
        EXPECT_EQ(score[180], score[299]);
    }
}

TEST(World, TrendClustersFollowProgressArchetype) {
    synth::WorldOptions opt;
    opt.train_sessions = 40;
    opt.test_sessions = 0;
    opt.seed = 1;
    const auto c = synth::make_world(opt);
    const auto ptrs = c.select(c.train_ids);
    const auto sel = cluster_sessions(ptrs, ClusterSettings{}, 0);
    EXPECT_TRUE(sel.structured);
    EXPECT_GE(sel.chosen.k, 2u);
}

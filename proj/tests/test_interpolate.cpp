#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "prefab/error.hpp"
#include "prefab/interpolate.hpp"
#include "prefab/rng.hpp"

using namespace prefab;

namespace {

using Regions = std::vector<AnnotatedRegion>;

std::vector<double> run(const Regions& r, std::size_t T) { return interpolate(r, T).values; }

// Closed-form version: every gap sample is the region's last value plus a
// multiple of its slope, rather than a running sum.
std::vector<double> oracle(const Regions& regions, std::size_t T) {
    std::vector<double> a(T, 0.0);
    for (std::size_t k = 0; k < regions.size(); ++k) {
        const auto& r = regions[k];
        const auto s = static_cast<std::size_t>(r.interval.begin);
        const std::size_t n = r.values.size();
        const double base = a[s];
        for (std::size_t t = 0; t < n; ++t) a[s + t] = base + (r.values[t] - r.values[0]);
        double slope = 0.0;
        const std::size_t half = (n - 1) / 2;
        if (n - 1 > half) slope = ((r.values[n - 1] - r.values[half]) / static_cast<double>(n - 1 - half));
        const std::size_t e = s + n - 1;
        const std::size_t stop = k + 1 < regions.size() ? static_cast<std::size_t>(regions[k + 1].interval.begin) : T - 1;
        for (std::size_t t = e + 1; t <= stop; ++t) a[t] = a[e] + slope * static_cast<double>(t - e);
    }
    return a;
}

Regions random_regions(Rng& rng, std::size_t T, bool dyadic) {
    Regions out;
    std::int64_t t = static_cast<std::int64_t>(rng.below(5));
    while (true) {
        std::int64_t len = 1 + static_cast<std::int64_t>(rng.below(12));
        if (dyadic) {
            // latter half e - floor(e/2) is a power of two
            static const std::int64_t lens[] = {2, 3, 4, 5, 8, 9, 16, 17};
            len = lens[rng.below(8)];
        }
        if (t + len > static_cast<std::int64_t>(T)) break;
        AnnotatedRegion r{{t, t + len}, {}};
        for (std::int64_t k = 0; k < len; ++k)
            r.values.push_back(dyadic ? static_cast<double>(static_cast<int>(rng.below(21)) - 10) : rng.normal(0, 3));
        out.push_back(std::move(r));
        t += len + static_cast<std::int64_t>(rng.below(15));
    }
    return out;
}

}  // namespace

TEST(Interpolate, SingleRegionExtendsLinearly) {
    EXPECT_EQ(run({{{0, 4}, {0, 1, 2, 3}}}, 8), (std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7}));
}

TEST(Interpolate, TwoRegionsWithGap) {
    EXPECT_EQ(run({{{0, 3}, {5, 6, 7}}, {{5, 8}, {2, 1, 1}}}, 8), (std::vector<double>{0, 1, 2, 3, 4, 5, 4, 4}));
}

TEST(Interpolate, LeadingSamplesStayZero) {
    EXPECT_EQ(run({{{2, 4}, {10, 12}}}, 6), (std::vector<double>{0, 0, 0, 2, 4, 6}));
}

TEST(Interpolate, SingleSampleRegionHasZeroSlope) {
    EXPECT_EQ(run({{{1, 2}, {7}}}, 5), (std::vector<double>(5, 0.0)));
}

TEST(Interpolate, TouchingRegions) {
    EXPECT_EQ(run({{{0, 2}, {0, 3}}, {{2, 4}, {1, 0}}}, 6), (std::vector<double>{0, 3, 6, 5, 4, 3}));
}

TEST(Interpolate, SlopeUsesLatterHalfOnly) {
    // e = 4, m = 2: steps 2 and 0
    EXPECT_EQ(run({{{0, 5}, {0, 0, 1, 3, 3}}}, 7), (std::vector<double>{0, 0, 1, 3, 3, 4, 5}));
    EXPECT_EQ(latter_half_slope(std::vector<double>{0, 0, 1, 3, 3}), 1.0);
    EXPECT_EQ(latter_half_slope(std::vector<double>{4}), 0.0);
}

TEST(Interpolate, NoRegionsGivesZeros) { EXPECT_EQ(run({}, 4), (std::vector<double>(4, 0.0))); }

TEST(Interpolate, MatchesClosedFormOracle) {
    Rng rng(21);
    for (int n = 0; n < 300; ++n) {
        const std::size_t T = 20 + rng.below(200);
        const auto regions = random_regions(rng, T, false);
        const auto got = run(regions, T);
        const auto want = oracle(regions, T);
        for (std::size_t t = 0; t < T; ++t) EXPECT_NEAR(got[t], want[t], 1e-9 * (1 + std::abs(want[t])));
    }
}

TEST(Interpolate, GapsHaveZeroSecondDifferenceOnDyadicInputs) {
    Rng rng(22);
    for (int n = 0; n < 300; ++n) {
        const std::size_t T = 40 + rng.below(200);
        const auto regions = random_regions(rng, T, true);
        const auto a = run(regions, T);
        for (std::size_t k = 0; k < regions.size(); ++k) {
            const auto e = static_cast<std::size_t>(regions[k].interval.end) - 1;
            const auto stop = k + 1 < regions.size() ? static_cast<std::size_t>(regions[k + 1].interval.begin) : T - 1;
            // the first sample of the next region is overwritten, so stop one short of it
            const auto last = k + 1 < regions.size() ? stop - 1 : stop;
            for (std::size_t t = e + 1; t + 1 <= last; ++t)
                EXPECT_EQ((a[t + 1] - a[t]) - (a[t] - a[t - 1]), 0.0) << "t=" << t;
        }
    }
}

TEST(Interpolate, GapsAreLinearWithinTolerance) {
    Rng rng(23);
    for (int n = 0; n < 300; ++n) {
        const std::size_t T = 40 + rng.below(200);
        const auto regions = random_regions(rng, T, false);
        const auto a = run(regions, T);
        for (std::size_t k = 0; k < regions.size(); ++k) {
            const auto e = static_cast<std::size_t>(regions[k].interval.end) - 1;
            const auto last = k + 1 < regions.size() ? static_cast<std::size_t>(regions[k + 1].interval.begin) - 1 : T - 1;
            for (std::size_t t = e + 1; t + 1 <= last; ++t)
                EXPECT_NEAR((a[t + 1] - a[t]) - (a[t] - a[t - 1]), 0.0, 1e-12 * (1 + std::abs(a[t])));
        }
    }
}

TEST(Interpolate, ConstantShiftOfARegionIsAbsorbed) {
    Rng rng(24);
    for (int n = 0; n < 100; ++n) {
        const std::size_t T = 60 + rng.below(100);
        auto regions = random_regions(rng, T, true);
        if (regions.empty()) continue;
        const auto before = run(regions, T);
        auto& r = regions[rng.below(regions.size())];
        for (auto& v : r.values) v += 64.0;
        EXPECT_EQ(run(regions, T), before);
    }
}

TEST(Interpolate, RegionsContinueFromPropagatedValue) {
    Rng rng(25);
    for (int n = 0; n < 100; ++n) {
        const std::size_t T = 60 + rng.below(100);
        const auto regions = random_regions(rng, T, false);
        const auto a = run(regions, T);
        for (std::size_t k = 1; k < regions.size(); ++k) {
            const auto s = static_cast<std::size_t>(regions[k].interval.begin);
            const auto& prev = regions[k - 1];
            const auto e = static_cast<std::size_t>(prev.interval.end) - 1;
            const double slope = latter_half_slope(zero_baseline(std::span<const double>(prev.values)));
            EXPECT_NEAR(a[s], a[e] + slope * static_cast<double>(s - e), 1e-9 * (1 + std::abs(a[s])));
        }
    }
}

TEST(Interpolate, Errors) {
    auto kind_of = [](const Regions& r, std::size_t T) -> std::optional<ErrorKind> {
        try {
            interpolate(r, T);
        } catch (const Error& e) {
            return e.kind();
        }
        return std::nullopt;
    };
    EXPECT_EQ(kind_of({{{0, 4}, {0, 1, 2, 3}}, {{3, 5}, {0, 1}}}, 8), ErrorKind::RegionsOverlap);
    EXPECT_EQ(kind_of({{{0, 4}, {0, 1, 2}}}, 8), ErrorKind::LengthMismatch);
    EXPECT_EQ(kind_of({{{6, 10}, {0, 1, 2, 3}}}, 8), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of({{{3, 3}, {}}}, 8), ErrorKind::InvalidArgument);
}

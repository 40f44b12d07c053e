#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "prefab/error.hpp"
#include "prefab/rng.hpp"
#include "prefab/trace.hpp"

using namespace prefab;

namespace {

AnnotationTrace make(std::vector<double> v, SampleRate rate = {}) { return {rate, 0.0, std::move(v)}; }

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "prefab_test_trace";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(SampleRate, ParsesIntegerFractionAndDecimal) {
    EXPECT_EQ(parse_rate("4"), (SampleRate{4, 1}));
    EXPECT_EQ(parse_rate("8/2"), (SampleRate{4, 1}));
    EXPECT_EQ(parse_rate("2.5"), (SampleRate{5, 2}));
    EXPECT_EQ(format_rate({5, 2}), "5/2");
    EXPECT_EQ(format_rate({4, 1}), "4");
    EXPECT_THROW(parse_rate("0"), Error);
    EXPECT_THROW(parse_rate("abc"), Error);
    EXPECT_THROW(parse_rate("-4"), Error);
}

TEST(SampleRate, SecondsToSamples) {
    SampleRate r{4, 1};
    EXPECT_EQ(r.to_samples(2.5), 10);
    EXPECT_EQ(r.to_samples(10.0), 40);
    EXPECT_DOUBLE_EQ(r.to_seconds(30), 7.5);
}

TEST(ZeroBaseline, Examples) {
    EXPECT_EQ(zero_baseline(make({3, 4, 5})).values, (std::vector<double>{0, 1, 2}));
    EXPECT_EQ(zero_baseline(make({0, 0, 0})).values, (std::vector<double>{0, 0, 0}));
    EXPECT_EQ(zero_baseline(make({-2, -1, -3})).values, (std::vector<double>{0, 1, -1}));
}

TEST(ZeroBaseline, EmptyThrows) {
    try {
        zero_baseline(make({}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyTrace);
    }
}

TEST(ZeroBaseline, IdempotentAndStartsAtZero) {
    Rng rng(7);
    for (int n = 0; n < 200; ++n) {
        std::vector<double> v(1 + rng.below(50));
        for (auto& x : v) x = rng.normal(0, 10);
        const auto once = zero_baseline(make(v));
        EXPECT_EQ(once.values[0], 0.0);
        EXPECT_EQ(zero_baseline(once).values, once.values);
    }
}

TEST(NormalizeSession, Examples) {
    EXPECT_EQ(normalize_session(make({0, 5, 10})).values, (std::vector<double>{0, 0.5, 1}));
    EXPECT_EQ(normalize_session(make({7, 7})).values, (std::vector<double>{0, 0}));
    EXPECT_EQ(normalize_session(make({1, 3, 2})).values, (std::vector<double>{0, 1, 0.5}));
}

TEST(NormalizeSession, BoundsProperty) {
    Rng rng(11);
    for (int n = 0; n < 1000; ++n) {
        std::vector<double> v(2 + rng.below(100));
        for (auto& x : v) x = rng.normal(rng.uniform(-100, 100), rng.uniform(1e-3, 50));
        const auto out = normalize_session(make(v)).values;
        const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
        EXPECT_EQ(*lo, 0.0);
        EXPECT_EQ(*hi, 1.0);
        for (double x : out) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 1.0);
        }
    }
}

TEST(Resample, Examples) {
    EXPECT_EQ(resample(make({0, 2}, {2, 1}), {4, 1}).values, (std::vector<double>{0, 1, 2}));
    EXPECT_EQ(resample(make({0, 1, 2, 3}, {4, 1}), {2, 1}).values, (std::vector<double>{0, 2}));
}

TEST(Resample, SameRateIsBitExactIdentity) {
    Rng rng(3);
    std::vector<double> v(97);
    for (auto& x : v) x = rng.normal();
    const auto out = resample(make(v, {5, 2}), {5, 2});
    EXPECT_EQ(out.values, v);
    EXPECT_EQ(out.rate, (SampleRate{5, 2}));
}

TEST(Resample, EndpointsPreserved) {
    const auto up = resample(make({1, 5, 2, 8}, {4, 1}), {8, 1});
    ASSERT_EQ(up.size(), 7u);
    EXPECT_EQ(up.values.front(), 1.0);
    EXPECT_EQ(up.values.back(), 8.0);
    EXPECT_DOUBLE_EQ(up.values[1], 3.0);
    EXPECT_DOUBLE_EQ(up.values[3], 3.5);
}

TEST(TraceIo, CsvRoundTripIsExact) {
    Rng rng(5);
    std::vector<double> v(41);
    for (auto& x : v) x = rng.normal();
    const auto path = temp_file("trace.csv");
    write_trace_csv(path, make(v));
    const auto back = read_trace(path, {4, 1});
    EXPECT_EQ(back.values, v);
}

TEST(TraceIo, JsonlRoundTripIsExact) {
    std::vector<double> v{0.0, 0.1, -2.5, 1e-300, 3.0};
    const auto path = temp_file("trace.jsonl");
    write_trace_jsonl(path, make(v));
    EXPECT_EQ(read_trace(path, {4, 1}).values, v);
}

TEST(TraceIo, MalformedCsvIsParseError) {
    const auto path = temp_file("bad.csv");
    std::ofstream(path) << "t_s,value\n0,1\n0.25,abc\n";
    try {
        read_trace_csv(path, {4, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
}

TEST(TraceIo, MissingFileIsIoError) {
    try {
        read_trace_csv("/nonexistent/trace.csv", {4, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}

TEST(TraceIo, CsvConfigHashCommentIsSkipped) {
    const auto path = temp_file("hashed.csv");
    write_trace_csv(path, make({1, 2, 3}), "abc");
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "# config_hash=abc");
    EXPECT_EQ(read_trace(path, {4, 1}).values, (std::vector<double>{1, 2, 3}));
}

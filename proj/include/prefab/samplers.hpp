#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prefab/inflection.hpp"
#include "prefab/session.hpp"

namespace prefab {

/// Round half to even.
std::size_t round_count(double mean_count);

// Task-agnostic baselines: they see only the trace length and a point count.

/// round(mean_count) distinct indices drawn uniformly from [0, trace_len).
std::vector<std::size_t> random_points(std::size_t trace_len, double mean_count, std::uint64_t seed);
/// Indices floor((k + 1/2) * T / n) for k < n.
std::vector<std::size_t> uniform_points(std::size_t trace_len, double mean_count);

std::vector<TimeInterval> random_sampler(std::size_t trace_len, double mean_count, std::uint64_t seed,
                                         SampleRate rate, const InflectionConfig& config);
std::vector<TimeInterval> uniform_sampler(std::size_t trace_len, double mean_count, SampleRate rate,
                                          const InflectionConfig& config);

struct FeatureCorrelation {
    std::string feature;
    double r = 0.0;
    std::size_t n = 0;           // number of pooled frame differences
    bool zero_variance = false;  // r forced to 0
};

/// Names treated as time indices and never ranked.
const std::vector<std::string>& default_excluded_features();

/// Pearson r between frame-to-frame feature changes and GT changes, pooled by
/// concatenating the per-session differences; sorted by |r| descending.
std::vector<FeatureCorrelation> rank_features(std::span<const Session* const> sessions,
                                              const std::vector<std::string>& excluded = default_excluded_features());
void write_feature_ranking_csv(const std::filesystem::path& path, const std::vector<FeatureCorrelation>& ranking,
                               const std::string& config_hash = {});

/// Event points from runs of consecutive nonzero changes of an event feature:
/// a run lasting at most `short_event_s` yields its midpoint, a longer run
/// yields its first and last sample.
std::vector<std::size_t> rule_based_points(std::span<const double> feature, SampleRate rate,
                                           double short_event_s = 5.0);
std::vector<TimeInterval> rule_based_sampler(const Session& session, const std::string& event_feature,
                                             const InflectionConfig& config);

}  // namespace prefab

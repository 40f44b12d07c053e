#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prefab/trace.hpp"

namespace prefab {

/// How the complementary gradient-change rule picks its threshold.
struct GradientRule {
    enum class Mode { Off, Absolute, Percentile, RangeFraction };
    Mode mode = Mode::RangeFraction;
    double value = 0.03;  // absolute |Δslope|, quantile in [0, 1], or fraction of max - min
};

struct InflectionConfig {
    double half_window_s = 2.5;
    GradientRule gradient;

    void validate() const;
};

/// A region flagged for annotation and the sampler that produced it
/// ("model", "gt", "baseline:<name>").
struct InflectionRegion {
    TimeInterval interval;
    std::string source;
};

/// Local maxima with the semantics of scipy.signal.find_peaks at default
/// settings: strictly greater than the left neighbour, flat tops allowed, the
/// reported index of a plateau is floor((left_edge + right_edge) / 2), and the
/// first / last samples are never peaks.
std::vector<std::size_t> local_maxima(std::span<const double> x);

/// Sorted union of the maxima of x and the maxima of -x.
std::vector<std::size_t> find_inflections(std::span<const double> x);

/// |(x[k+1] - x[k]) - (x[k] - x[k-1])| at interior indices.
double slope_change(std::span<const double> x, std::size_t k);
/// Linear-interpolated quantile of |Δslope| over interior indices.
double gradient_threshold(std::span<const double> x, const GradientRule& rule);

/// Interior indices not in `detected` whose slope change exceeds `threshold`.
std::vector<std::size_t> gradient_complement(std::span<const double> x, std::span<const std::size_t> detected,
                                             double threshold);

/// Each index becomes [t - w, t + w) with w = half_window_s in samples,
/// clamped to the trace; overlapping or touching intervals are merged.
std::vector<TimeInterval> expand_and_merge(std::span<const std::size_t> indices, std::size_t trace_len,
                                           SampleRate rate, const InflectionConfig& config);

/// find_inflections plus the gradient complement, sorted.
std::vector<std::size_t> detect_points(std::span<const double> x, const InflectionConfig& config);
std::vector<TimeInterval> detect_regions(std::span<const double> x, SampleRate rate, const InflectionConfig& config);

std::vector<InflectionRegion> tag_regions(const std::vector<TimeInterval>& intervals, const std::string& source);

// Regions JSON: [{"start_s": .., "end_s": .., "source": ".."}], or with a
// config hash {"config_hash": .., "sample_rate_hz": .., "regions": [..]}.
// The reader accepts both forms.
std::string regions_to_json(const std::vector<InflectionRegion>& regions, SampleRate rate,
                            const std::string& config_hash = {});
std::vector<InflectionRegion> regions_from_json(const std::string& text, SampleRate rate);
void write_regions(const std::filesystem::path& path, const std::vector<InflectionRegion>& regions, SampleRate rate,
                   const std::string& config_hash = {});
std::vector<InflectionRegion> read_regions(const std::filesystem::path& path, SampleRate rate);

}  // namespace prefab

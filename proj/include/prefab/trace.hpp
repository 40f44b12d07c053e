#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace prefab {

/// Sampling rate as an exact ratio num/den Hz.
struct SampleRate {
    std::int64_t num = 4;
    std::int64_t den = 1;

    double hz() const { return static_cast<double>(num) / static_cast<double>(den); }
    double period_s() const { return static_cast<double>(den) / static_cast<double>(num); }

    /// Seconds → nearest sample index (ties round away from zero).
    std::int64_t to_samples(double seconds) const;
    double to_seconds(std::int64_t samples) const {
        return static_cast<double>(samples) * static_cast<double>(den) / static_cast<double>(num);
    }

    friend bool operator==(const SampleRate&, const SampleRate&) = default;
};

SampleRate parse_rate(const std::string& text);  // "4", "4/1", "2.5"
std::string format_rate(SampleRate rate);

/// Relative affect values on a uniform grid. Time is the sample index; seconds
/// appear only when reading or writing files.
struct AnnotationTrace {
    SampleRate rate;
    double t0 = 0.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    double duration_s() const { return rate.to_seconds(static_cast<std::int64_t>(values.size())); }
};

/// Half-open interval of sample indices [begin, end).
struct TimeInterval {
    std::int64_t begin = 0;
    std::int64_t end = 0;

    std::int64_t length() const { return end - begin; }
    bool contains(std::int64_t t) const { return t >= begin && t < end; }

    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

AnnotationTrace zero_baseline(const AnnotationTrace& trace);
AnnotationTrace normalize_session(const AnnotationTrace& trace);
AnnotationTrace resample(const AnnotationTrace& trace, SampleRate target);

std::vector<double> zero_baseline(std::span<const double> values);
std::vector<double> normalize_session(std::span<const double> values);

// File formats: CSV with header `t_s,value`, or JSONL lines {"t": .., "v": ..}.
// The sample rate is declared by the caller; it is never inferred from timestamps.
AnnotationTrace read_trace_csv(const std::filesystem::path& path, SampleRate rate);
/// A non-empty config hash is written as a leading `# config_hash=` comment.
void write_trace_csv(const std::filesystem::path& path, const AnnotationTrace& trace,
                     const std::string& config_hash = {});
AnnotationTrace read_trace_jsonl(const std::filesystem::path& path, SampleRate rate);
void write_trace_jsonl(const std::filesystem::path& path, const AnnotationTrace& trace);
/// Dispatches on extension (.jsonl → JSONL, anything else → CSV).
AnnotationTrace read_trace(const std::filesystem::path& path, SampleRate rate);

}  // namespace prefab

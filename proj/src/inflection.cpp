#include "prefab/inflection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "prefab/error.hpp"

namespace prefab {

void InflectionConfig::validate() const {
    if (!(half_window_s > 0.0)) throw Error(ErrorKind::InvalidArgument, "half_window_s must be positive");
    if (gradient.mode == GradientRule::Mode::Percentile && !(gradient.value >= 0.0 && gradient.value <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "gradient percentile must lie in [0, 1]");
    if (gradient.mode != GradientRule::Mode::Off && !(gradient.value >= 0.0))
        throw Error(ErrorKind::InvalidArgument, "gradient threshold value must be non-negative");
}

std::vector<std::size_t> local_maxima(std::span<const double> x) {
    std::vector<std::size_t> peaks;
    if (x.size() < 3) return peaks;
    const std::size_t last = x.size() - 1;
    std::size_t i = 1;
    while (i < last) {
        if (x[i - 1] < x[i]) {
            std::size_t ahead = i + 1;
            while (ahead < last && x[ahead] == x[i]) ++ahead;
            if (x[ahead] < x[i]) {
                peaks.push_back((i + ahead - 1) / 2);
                i = ahead;
            }
        }
        ++i;
    }
    return peaks;
}

std::vector<std::size_t> find_inflections(std::span<const double> x) {
    if (x.size() < 3)
        throw Error(ErrorKind::TraceTooShort, "need at least 3 samples, got " + std::to_string(x.size()));
    auto maxima = local_maxima(x);
    std::vector<double> neg(x.size());
    std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
    const auto minima = local_maxima(neg);
    std::vector<std::size_t> out;
    std::set_union(maxima.begin(), maxima.end(), minima.begin(), minima.end(), std::back_inserter(out));
    return out;
}

double slope_change(std::span<const double> x, std::size_t k) {
    return std::abs((x[k + 1] - x[k]) - (x[k] - x[k - 1]));
}

double gradient_threshold(std::span<const double> x, const GradientRule& rule) {
    switch (rule.mode) {
        case GradientRule::Mode::Off: return std::numeric_limits<double>::infinity();
        case GradientRule::Mode::Absolute: return rule.value;
        case GradientRule::Mode::RangeFraction: {
            if (x.empty()) return std::numeric_limits<double>::infinity();
            const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
            return rule.value * (*hi - *lo);
        }
        case GradientRule::Mode::Percentile: break;
    }
    if (x.size() < 3) return std::numeric_limits<double>::infinity();
    std::vector<double> changes;
    for (std::size_t k = 1; k + 1 < x.size(); ++k) changes.push_back(slope_change(x, k));
    std::sort(changes.begin(), changes.end());
    const double pos = rule.value * static_cast<double>(changes.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, changes.size() - 1);
    return changes[lo] + (changes[hi] - changes[lo]) * (pos - static_cast<double>(lo));
}

std::vector<std::size_t> gradient_complement(std::span<const double> x, std::span<const std::size_t> detected,
                                             double threshold) {
    std::vector<std::size_t> out;
    if (x.size() < 3 || std::isinf(threshold)) return out;
    for (std::size_t k = 1; k + 1 < x.size(); ++k) {
        if (std::binary_search(detected.begin(), detected.end(), k)) continue;
        if (slope_change(x, k) > threshold) out.push_back(k);
    }
    return out;
}

std::vector<TimeInterval> expand_and_merge(std::span<const std::size_t> indices, std::size_t trace_len,
                                           SampleRate rate, const InflectionConfig& config) {
    config.validate();
    const std::int64_t half = rate.to_samples(config.half_window_s);
    const auto len = static_cast<std::int64_t>(trace_len);
    std::vector<TimeInterval> raw;
    raw.reserve(indices.size());
    for (auto idx : indices) {
        const auto t = static_cast<std::int64_t>(idx);
        if (t < 0 || t >= len) throw Error(ErrorKind::InvalidArgument, "inflection index outside trace");
        raw.push_back({std::max<std::int64_t>(0, t - half), std::min(len, t + half)});
    }
    std::sort(raw.begin(), raw.end(), [](const TimeInterval& a, const TimeInterval& b) { return a.begin < b.begin; });
    std::vector<TimeInterval> merged;
    for (const auto& iv : raw) {
        if (iv.length() <= 0) continue;
        if (!merged.empty() && iv.begin <= merged.back().end)
            merged.back().end = std::max(merged.back().end, iv.end);
        else
            merged.push_back(iv);
    }
    return merged;
}

std::vector<std::size_t> detect_points(std::span<const double> x, const InflectionConfig& config) {
    config.validate();
    auto points = find_inflections(x);
    const auto extra = gradient_complement(x, points, gradient_threshold(x, config.gradient));
    std::vector<std::size_t> out;
    std::merge(points.begin(), points.end(), extra.begin(), extra.end(), std::back_inserter(out));
    return out;
}

std::vector<TimeInterval> detect_regions(std::span<const double> x, SampleRate rate, const InflectionConfig& config) {
    const auto points = detect_points(x, config);
    return expand_and_merge(points, x.size(), rate, config);
}

std::vector<InflectionRegion> tag_regions(const std::vector<TimeInterval>& intervals, const std::string& source) {
    std::vector<InflectionRegion> out;
    out.reserve(intervals.size());
    for (const auto& iv : intervals) out.push_back({iv, source});
    return out;
}

std::string regions_to_json(const std::vector<InflectionRegion>& regions, SampleRate rate,
                            const std::string& config_hash) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : regions)
        j.push_back({{"start_s", rate.to_seconds(r.interval.begin)},
                     {"end_s", rate.to_seconds(r.interval.end)},
                     {"source", r.source}});
    if (config_hash.empty()) return j.dump(2);
    nlohmann::ordered_json doc;
    doc["config_hash"] = config_hash;
    doc["sample_rate_hz"] = format_rate(rate);
    doc["regions"] = std::move(j);
    return doc.dump(2);
}

std::vector<InflectionRegion> regions_from_json(const std::string& text, SampleRate rate) {
    std::vector<InflectionRegion> out;
    try {
        const auto doc = nlohmann::json::parse(text);
        const auto& j = doc.is_object() ? doc.at("regions") : doc;
        if (!j.is_array()) throw Error(ErrorKind::Parse, "regions: expected an array");
        for (const auto& r : j) {
            InflectionRegion region{{rate.to_samples(r.at("start_s").get<double>()),
                                     rate.to_samples(r.at("end_s").get<double>())},
                                    r.value("source", std::string{})};
            if (region.interval.begin >= region.interval.end)
                throw Error(ErrorKind::InvalidArgument, "region with start_s >= end_s");
            out.push_back(std::move(region));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("regions: ") + e.what());
    }
    return out;
}

void write_regions(const std::filesystem::path& path, const std::vector<InflectionRegion>& regions, SampleRate rate,
                   const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << regions_to_json(regions, rate, config_hash) << '\n';
}

std::vector<InflectionRegion> read_regions(const std::filesystem::path& path, SampleRate rate) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return regions_from_json(ss.str(), rate);
}

}  // namespace prefab

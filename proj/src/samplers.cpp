#include "prefab/samplers.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <fstream>

#include "prefab/csv.hpp"
#include "prefab/error.hpp"
#include "prefab/rng.hpp"

namespace prefab {

std::size_t round_count(double mean_count) {
    if (!(mean_count > 0.0)) throw Error(ErrorKind::InvalidArgument, "mean inflection count must be positive");
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double r = std::nearbyint(mean_count);
    std::fesetround(saved);
    return static_cast<std::size_t>(r);
}

namespace {
std::size_t checked_count(std::size_t trace_len, double mean_count) {
    const std::size_t n = round_count(mean_count);
    if (n > trace_len)
        throw Error(ErrorKind::CountTooLarge, std::to_string(n) + " points requested from a trace of " +
                                                  std::to_string(trace_len) + " samples");
    return n;
}
}  // namespace

std::vector<std::size_t> random_points(std::size_t trace_len, double mean_count, std::uint64_t seed) {
    const std::size_t n = checked_count(trace_len, mean_count);
    std::vector<std::size_t> idx(trace_len);
    for (std::size_t k = 0; k < trace_len; ++k) idx[k] = k;
    Rng rng(seed);
    // partial Fisher-Yates: the first n slots are a uniform sample without replacement
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.below(trace_len - k));
        std::swap(idx[k], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<std::size_t> uniform_points(std::size_t trace_len, double mean_count) {
    const std::size_t n = checked_count(trace_len, mean_count);
    std::vector<std::size_t> idx;
    idx.reserve(n);
    for (std::size_t k = 0; k < n; ++k) idx.push_back(((2 * k + 1) * trace_len) / (2 * n));
    return idx;
}

std::vector<TimeInterval> random_sampler(std::size_t trace_len, double mean_count, std::uint64_t seed,
                                         SampleRate rate, const InflectionConfig& config) {
    return expand_and_merge(random_points(trace_len, mean_count, seed), trace_len, rate, config);
}

std::vector<TimeInterval> uniform_sampler(std::size_t trace_len, double mean_count, SampleRate rate,
                                          const InflectionConfig& config) {
    return expand_and_merge(uniform_points(trace_len, mean_count), trace_len, rate, config);
}

const std::vector<std::string>& default_excluded_features() {
    static const std::vector<std::string> names{"t_s",   "time",        "timestamp", "time_index",
                                                "frame", "frame_index", "index",     "elapsed"};
    return names;
}

std::vector<FeatureCorrelation> rank_features(std::span<const Session* const> sessions,
                                              const std::vector<std::string>& excluded) {
    if (sessions.empty()) throw Error(ErrorKind::NoTrainingData, "rank_features needs at least one session");
    const auto& names = sessions.front()->feature_names;
    std::vector<double> dy;
    for (const auto* s : sessions) {
        if (!s->gt) throw Error(ErrorKind::NoGroundTruth, "session " + s->id);
        if (s->length() < 2) throw Error(ErrorKind::SessionTooShort, "session " + s->id + " has fewer than 2 frames");
        if (s->feature_names != names)
            throw Error(ErrorKind::DimensionMismatch, "session " + s->id + " has a different feature set");
        for (std::size_t t = 1; t < s->length(); ++t) dy.push_back((*s->gt)[t] - (*s->gt)[t - 1]);
    }

    std::vector<FeatureCorrelation> out;
    for (std::size_t f = 0; f < names.size(); ++f) {
        if (std::find(excluded.begin(), excluded.end(), names[f]) != excluded.end()) continue;
        std::vector<double> dx;
        dx.reserve(dy.size());
        for (const auto* s : sessions)
            for (std::size_t t = 1; t < s->length(); ++t) dx.push_back(s->frames.at(t, f) - s->frames.at(t - 1, f));

        const double n = static_cast<double>(dx.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t k = 0; k < dx.size(); ++k) {
            mx += dx[k];
            my += dy[k];
        }
        mx /= n;
        my /= n;
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t k = 0; k < dx.size(); ++k) {
            const double a = dx[k] - mx, b = dy[k] - my;
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        FeatureCorrelation fc{names[f], 0.0, dx.size(), false};
        if (sxx > 0.0 && syy > 0.0)
            fc.r = sxy / std::sqrt(sxx * syy);
        else
            fc.zero_variance = true;
        out.push_back(fc);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const FeatureCorrelation& a, const FeatureCorrelation& b) { return std::abs(a.r) > std::abs(b.r); });
    return out;
}

void write_feature_ranking_csv(const std::filesystem::path& path, const std::vector<FeatureCorrelation>& ranking,
                               const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
    out << "rank,feature,r,abs_r,n,zero_variance\n";
    for (std::size_t k = 0; k < ranking.size(); ++k) {
        const auto& fc = ranking[k];
        out << k + 1 << ',' << fc.feature << ',' << csv::format_double(fc.r) << ','
            << csv::format_double(std::abs(fc.r)) << ',' << fc.n << ',' << (fc.zero_variance ? 1 : 0) << '\n';
    }
}

std::vector<std::size_t> rule_based_points(std::span<const double> feature, SampleRate rate, double short_event_s) {
    std::vector<std::size_t> points;
    const std::int64_t short_samples = rate.to_samples(short_event_s);
    std::size_t t = 1;
    while (t < feature.size()) {
        if (feature[t] == feature[t - 1]) {
            ++t;
            continue;
        }
        const std::size_t first = t;
        while (t < feature.size() && feature[t] != feature[t - 1]) ++t;
        const std::size_t last = t - 1;
        // a run of L changed samples lasts L sample periods
        if (static_cast<std::int64_t>(last - first + 1) <= short_samples) {
            points.push_back((first + last) / 2);
        } else {
            points.push_back(first);
            points.push_back(last);
        }
    }
    return points;
}

std::vector<TimeInterval> rule_based_sampler(const Session& session, const std::string& event_feature,
                                             const InflectionConfig& config) {
    const auto f = session.feature_index(event_feature);
    if (f < 0)
        throw Error(ErrorKind::UnknownFeature, "session " + session.id + " has no feature '" + event_feature + "'");
    const auto column = session.feature_column(static_cast<std::size_t>(f));
    return expand_and_merge(rule_based_points(column, session.rate), session.length(), session.rate, config);
}

}  // namespace prefab

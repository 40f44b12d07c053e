#include "prefab/interpolate.hpp"

#include <string>

#include "prefab/error.hpp"

namespace prefab {

double latter_half_slope(std::span<const double> values) {
    // Indices are relative to the region start s, so m - s = floor((e - s) / 2).
    const std::size_t e = values.size() - 1;
    const std::size_t m = e / 2;
    if (e == m) return 0.0;
    double sum = 0.0;
    for (std::size_t t = m; t < e; ++t) sum += values[t + 1] - values[t];
    return sum / static_cast<double>(e - m);
}

AnnotationTrace interpolate(std::span<const AnnotatedRegion> regions, std::size_t total_len, SampleRate rate) {
    const auto T = static_cast<std::int64_t>(total_len);
    for (std::size_t k = 0; k < regions.size(); ++k) {
        const auto& iv = regions[k].interval;
        if (iv.begin < 0 || iv.end > T || iv.begin >= iv.end)
            throw Error(ErrorKind::InvalidArgument, "region " + std::to_string(k) + " lies outside [0, " +
                                                        std::to_string(total_len) + ")");
        if (regions[k].values.size() != static_cast<std::size_t>(iv.length()))
            throw Error(ErrorKind::LengthMismatch, "region " + std::to_string(k) + " spans " +
                                                       std::to_string(iv.length()) + " samples but has " +
                                                       std::to_string(regions[k].values.size()) + " values");
        if (k > 0 && iv.begin < regions[k - 1].interval.end)
            throw Error(ErrorKind::RegionsOverlap, "region " + std::to_string(k) + " starts before region " +
                                                       std::to_string(k - 1) + " ends");
    }

    AnnotationTrace out{rate, 0.0, std::vector<double>(total_len, 0.0)};
    auto& a = out.values;
    for (std::size_t k = 0; k < regions.size(); ++k) {
        const auto values = zero_baseline(std::span<const double>(regions[k].values));
        const auto s = static_cast<std::size_t>(regions[k].interval.begin);
        const std::size_t e = s + values.size() - 1;

        const double offset = a[s];
        for (std::size_t t = 0; t < values.size(); ++t) a[s + t] = offset + values[t];

        const double slope = latter_half_slope(values);
        const std::size_t stop =
            k + 1 < regions.size() ? static_cast<std::size_t>(regions[k + 1].interval.begin) : total_len - 1;
        for (std::size_t t = e + 1; t <= stop; ++t) a[t] = a[t - 1] + slope;
    }
    return out;
}

}  // namespace prefab

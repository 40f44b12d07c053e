#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "prefab/trace.hpp"

namespace prefab {

/// A region and the values the annotator recorded over it (one per sample).
struct AnnotatedRegion {
    TimeInterval interval;
    std::vector<double> values;
};

/// Cumulative slope propagation. Each region trace is zero-baselined and
/// placed on top of the value reached at its first sample; the gap after a
/// region continues linearly with the mean one-step slope of that region's
/// latter half (from floor((s+e)/2) to e). Samples before the first region
/// stay 0. A one-sample region propagates with slope 0.
///
/// Regions must be sorted and non-overlapping (touching is allowed) and lie
/// inside [0, total_len).
AnnotationTrace interpolate(std::span<const AnnotatedRegion> regions, std::size_t total_len,
                            SampleRate rate = {});

/// The slope used after a region, computed from its zero-baselined values.
double latter_half_slope(std::span<const double> values);

}  // namespace prefab

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "prefab/session.hpp"

namespace prefab {

/// Frames per model input window (3 s at 4 Hz).
inline constexpr std::size_t kWindowFrames = 12;

/// Model input X_i: the 12 frames ending at sample `index` plus the biography.
/// Views into the owning Session; valid as long as it is.
struct FeatureSegment {
    std::size_t index = 0;
    std::size_t frame_dim = 0;
    std::span<const double> frames;     // kWindowFrames * frame_dim, row-major, oldest first
    std::span<const double> biography;
};

/// Ordinal training pair: label +1 if A_j > A_i, -1 if lower, 0 if unchanged.
struct PairSample {
    std::size_t session = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    int label = 0;
};

struct PairOptions {
    std::size_t gap = 4;
    double eps = 0.0;
    bool balance = false;  // down-sample the majority label within the session
    std::uint64_t seed = 0;
};

/// Sample indices are 0-based. The first valid segment ends at index 12, so
/// frame 0 is never used and there are T - 12 segments.
inline constexpr std::size_t kFirstSegmentIndex = kWindowFrames;

FeatureSegment segment_at(const Session& session, std::size_t index);
std::vector<FeatureSegment> build_segments(const Session& session);

int ordinal_label(double delta, double eps);
/// {-1, 0, +1} → OCE class {0, 1, 2}.
inline int label_to_class(int label) { return label + 1; }

std::vector<PairSample> build_pairs(const Session& session, std::size_t session_index = 0,
                                    const PairOptions& options = {});

}  // namespace prefab

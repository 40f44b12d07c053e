#include "prefab/pairing.hpp"

#include <algorithm>
#include <array>

#include "prefab/error.hpp"
#include "prefab/rng.hpp"

namespace prefab {

FeatureSegment segment_at(const Session& session, std::size_t index) {
    if (index < kFirstSegmentIndex || index >= session.length())
        throw Error(ErrorKind::InvalidArgument, "segment index " + std::to_string(index) + " out of range for session " +
                                                    session.id);
    const std::size_t d = session.frames.cols;
    const std::size_t first = index + 1 - kWindowFrames;
    return {index, d, std::span<const double>(session.frames.data).subspan(first * d, kWindowFrames * d),
            std::span<const double>(session.biography)};
}

std::vector<FeatureSegment> build_segments(const Session& session) {
    if (session.length() <= kFirstSegmentIndex)
        throw Error(ErrorKind::SessionTooShort, "session " + session.id + " has " + std::to_string(session.length()) +
                                                    " frames; need at least " + std::to_string(kFirstSegmentIndex + 1));
    std::vector<FeatureSegment> out;
    out.reserve(session.length() - kFirstSegmentIndex);
    for (std::size_t i = kFirstSegmentIndex; i < session.length(); ++i) out.push_back(segment_at(session, i));
    return out;
}

int ordinal_label(double delta, double eps) {
    if (delta > eps) return 1;
    if (delta < -eps) return -1;
    return 0;
}

std::vector<PairSample> build_pairs(const Session& session, std::size_t session_index, const PairOptions& options) {
    if (!session.gt) throw Error(ErrorKind::NoGroundTruth, "session " + session.id + " has no ground-truth trace");
    const auto& gt = *session.gt;
    if (gt.size() != session.length())
        throw Error(ErrorKind::LengthMismatch, "session " + session.id + ": gt length " + std::to_string(gt.size()) +
                                                   " != frame count " + std::to_string(session.length()));
    if (options.gap == 0) throw Error(ErrorKind::InvalidArgument, "pair gap must be positive");

    std::vector<PairSample> pairs;
    for (std::size_t i = kFirstSegmentIndex; i + options.gap < session.length(); ++i) {
        const std::size_t j = i + options.gap;
        pairs.push_back({session_index, i, j, ordinal_label(gt[j] - gt[i], options.eps)});
    }
    if (!options.balance || pairs.empty()) return pairs;

    std::array<std::size_t, 3> counts{};
    for (const auto& p : pairs) ++counts[static_cast<std::size_t>(label_to_class(p.label))];
    const auto majority = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    std::array<std::size_t, 3> others = counts;
    others[majority] = 0;
    const std::size_t keep = *std::max_element(others.begin(), others.end());
    if (keep == 0) return pairs;

    // Pick `keep` majority pairs uniformly, then restore (session, i) order.
    std::vector<std::size_t> majority_idx;
    for (std::size_t k = 0; k < pairs.size(); ++k)
        if (static_cast<std::size_t>(label_to_class(pairs[k].label)) == majority) majority_idx.push_back(k);
    Rng rng(options.seed);
    rng.shuffle(majority_idx.begin(), majority_idx.end());
    std::vector<bool> drop(pairs.size(), false);
    for (std::size_t k = keep; k < majority_idx.size(); ++k) drop[majority_idx[k]] = true;
    std::vector<PairSample> balanced;
    for (std::size_t k = 0; k < pairs.size(); ++k)
        if (!drop[k]) balanced.push_back(pairs[k]);
    return balanced;
}

}  // namespace prefab

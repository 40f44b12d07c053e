#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include <json.hpp>

#include "prefab/kernels.hpp"

namespace prefab {

struct DtwParams {
    std::optional<std::size_t> window;  // Sakoe-Chiba band half-width in samples
};

/// Dynamic-programming alignment cost with squared-difference local cost.
/// With a band narrower than the length difference no path exists and the
/// result is +inf.
double dtw_distance(std::span<const double> a, std::span<const double> b, const DtwParams& params = {});

/// Symmetric n x n DTW matrix, row-major.
std::vector<double> dtw_matrix(std::span<const std::vector<double>> traces, const DtwParams& params,
                               kernels::Exec exec = kernels::Exec::Parallel);

namespace serial {
std::vector<double> dtw_matrix(std::span<const std::vector<double>> traces, const DtwParams& params);
}
namespace parallel {
std::vector<double> dtw_matrix(std::span<const std::vector<double>> traces, const DtwParams& params);
}

struct ClusterOptions {
    DtwParams dtw;
    std::size_t resample_length = 128;  // 0 keeps the traces as given
    std::size_t max_iterations = 100;
    std::size_t restarts = 0;  // extra seeded random initialisations; best cost wins
    // select_k returns k_min when no candidate reaches this silhouette
    double min_silhouette = 0.25;
};

struct ClusterAssignment {
    std::size_t k = 0;
    std::vector<int> labels;          // per trace
    std::vector<std::size_t> medoids; // trace index per cluster
    double silhouette = 0.0;
    double entropy = 0.0;             // natural-log entropy of cluster sizes
    double cost = 0.0;                // sum of distances to assigned medoid
};

/// Silhouette over a precomputed distance matrix. Singletons score 0; a
/// partition with k == n (or k < 2) reports 0.
double silhouette_score(std::span<const double> dist, std::size_t n, std::span<const int> labels, std::size_t k);
double label_entropy(std::span<const int> labels, std::size_t k);

/// k-medoids over a precomputed distance matrix. The greedy BUILD step
/// followed by alternating assign / medoid updates is deterministic; the seed
/// only drives optional random restarts.
ClusterAssignment cluster_matrix(std::span<const double> dist, std::size_t n, std::size_t k, std::uint64_t seed,
                                 const ClusterOptions& options = {});
ClusterAssignment cluster(std::span<const std::vector<double>> traces, std::size_t k, std::uint64_t seed,
                          const ClusterOptions& options = {});

struct KSelection {
    ClusterAssignment chosen;
    std::vector<ClusterAssignment> candidates;  // one per k in range
    std::vector<double> scores;                 // combined balance score per candidate
    bool structured = true;                     // false: fell back to k_min
};

/// Picks k in [k_min, k_max] maximizing the mean of the min-max-normalized
/// silhouette and the entropy normalized by ln k. Ties go to the smaller k.
/// If no candidate reaches options.min_silhouette the traces show no trend
/// structure and k_min is returned.
KSelection select_k(std::span<const std::vector<double>> traces, std::size_t k_min, std::size_t k_max,
                    std::uint64_t seed, const ClusterOptions& options = {});

/// Per-k silhouette / entropy table plus the chosen assignment.
nlohmann::ordered_json cluster_report(const KSelection& selection, std::span<const std::string> ids = {});

}  // namespace prefab

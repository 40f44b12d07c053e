#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prefab/clustering.hpp"
#include "prefab/config.hpp"
#include "prefab/interpolate.hpp"
#include "prefab/kernels.hpp"
#include "prefab/metrics.hpp"
#include "prefab/model.hpp"

namespace prefab {

/// Ground truth of a session, min-max normalised.
std::vector<double> normalized_gt(const Session& session);

/// Regions detected on the ground truth.
std::vector<TimeInterval> gt_regions(const Session& session, const InflectionConfig& config);

/// Trend clusters of the sessions' GT traces with k chosen by select_k.
KSelection cluster_sessions(std::span<const Session* const> sessions, const ClusterSettings& settings,
                            std::uint64_t seed);

struct FittedModel {
    TrainResult train;
    KSelection clusters;
    std::vector<int> aux_labels;
};

/// Clusters the training GT (when the auxiliary head is on), builds ordinal
/// pairs, and trains the configured model kind. The aux head width follows the
/// chosen k.
FittedModel fit_model(std::span<const Session* const> sessions, const RunConfig& config,
                      kernels::Exec exec = kernels::Exec::Parallel);

/// Predicted utility trace (model output, not normalised).
std::vector<double> predict_trace(const Session& session, const ModelWeights& weights,
                                  kernels::Exec exec = kernels::Exec::Parallel);
std::vector<TimeInterval> model_regions(const Session& session, const ModelWeights& weights,
                                        const InflectionConfig& config,
                                        kernels::Exec exec = kernels::Exec::Parallel);

/// An annotator who reproduces the GT inside each region: region traces are
/// GT slices, the full trace comes from interpolate().
AnnotationTrace simulate_annotation(std::span<const double> gt, std::span<const TimeInterval> regions,
                                    SampleRate rate);

/// Sampler names accepted by sampler_regions: "random", "uniform", "rule".
std::vector<TimeInterval> sampler_regions(const std::string& method, const Session& session, double mean_count,
                                          const RunConfig& config, std::uint64_t seed);

/// Mean number of GT inflection points per session (the count baselines match).
double mean_gt_inflections(std::span<const Session* const> sessions, const InflectionConfig& config);

/// Region F1 and TE against the GT regions, plus the agreement of the
/// simulated-annotation reconstruction with the GT.
EvalRow evaluate_method(const Session& session, const std::string& method, std::span<const TimeInterval> pred,
                        const InflectionConfig& config);

}  // namespace prefab

#include "prefab/pipeline.hpp"

#include "prefab/error.hpp"
#include "prefab/samplers.hpp"

namespace prefab {

std::vector<double> normalized_gt(const Session& session) {
    if (!session.gt) throw Error(ErrorKind::NoGroundTruth, "session " + session.id);
    return normalize_session(std::span<const double>(*session.gt));
}

std::vector<TimeInterval> gt_regions(const Session& session, const InflectionConfig& config) {
    const auto gt = normalized_gt(session);
    return detect_regions(gt, session.rate, config);
}

KSelection cluster_sessions(std::span<const Session* const> sessions, const ClusterSettings& settings,
                            std::uint64_t seed) {
    std::vector<std::vector<double>> traces;
    traces.reserve(sessions.size());
    for (const auto* s : sessions) traces.push_back(normalized_gt(*s));
    const auto k_max = std::min(settings.k_max, traces.size() > 1 ? traces.size() - 1 : std::size_t{1});
    if (k_max < settings.k_min)
        throw Error(ErrorKind::TooFewSessions, "need more than " + std::to_string(settings.k_min) +
                                                   " sessions to choose among k >= " + std::to_string(settings.k_min));
    return select_k(traces, settings.k_min, k_max, seed, settings.options);
}

FittedModel fit_model(std::span<const Session* const> sessions, const RunConfig& config, kernels::Exec exec) {
    if (sessions.empty()) throw Error(ErrorKind::NoTrainingData, "no training sessions");
    FittedModel fitted;
    NetworkConfig net = config.network;
    if (net.use_aux) {
        fitted.clusters = cluster_sessions(sessions, config.clustering, config.seed);
        fitted.aux_labels = fitted.clusters.chosen.labels;
        net.aux_classes = fitted.clusters.chosen.k;
    }
    if (config.model == ModelKind::Regression) {
        fitted.train = train_regression(sessions, fitted.aux_labels, net, exec);
        return fitted;
    }
    std::vector<PairSample> pairs;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        PairOptions opt = config.pairs;
        opt.seed = config.pairs.seed + s;
        const auto p = build_pairs(*sessions[s], s, opt);
        pairs.insert(pairs.end(), p.begin(), p.end());
    }
    fitted.train = train(sessions, pairs, fitted.aux_labels, net, exec);
    return fitted;
}

std::vector<double> predict_trace(const Session& session, const ModelWeights& weights, kernels::Exec exec) {
    return reconstruct(session, weights, exec).values;
}

std::vector<TimeInterval> model_regions(const Session& session, const ModelWeights& weights,
                                        const InflectionConfig& config, kernels::Exec exec) {
    const auto p = predict_trace(session, weights, exec);
    return detect_regions(p, session.rate, config);
}

AnnotationTrace simulate_annotation(std::span<const double> gt, std::span<const TimeInterval> regions,
                                    SampleRate rate) {
    std::vector<AnnotatedRegion> annotated;
    annotated.reserve(regions.size());
    for (const auto& r : regions) {
        if (r.begin < 0 || r.end > static_cast<std::int64_t>(gt.size()))
            throw Error(ErrorKind::InvalidArgument, "region outside the trace");
        annotated.push_back({r, std::vector<double>(gt.begin() + r.begin, gt.begin() + r.end)});
    }
    return interpolate(annotated, gt.size(), rate);
}

std::vector<TimeInterval> sampler_regions(const std::string& method, const Session& session, double mean_count,
                                          const RunConfig& config, std::uint64_t seed) {
    if (method == "random") return random_sampler(session.length(), mean_count, seed, session.rate, config.inflection);
    if (method == "uniform") return uniform_sampler(session.length(), mean_count, session.rate, config.inflection);
    if (method == "rule") return rule_based_sampler(session, config.rule_feature, config.inflection);
    throw Error(ErrorKind::InvalidArgument, "unknown sampler '" + method + "'");
}

double mean_gt_inflections(std::span<const Session* const> sessions, const InflectionConfig& config) {
    if (sessions.empty()) throw Error(ErrorKind::NoTrainingData, "no sessions");
    double total = 0.0;
    for (const auto* s : sessions) total += static_cast<double>(detect_points(normalized_gt(*s), config).size());
    return total / static_cast<double>(sessions.size());
}

EvalRow evaluate_method(const Session& session, const std::string& method, std::span<const TimeInterval> pred,
                        const InflectionConfig& config) {
    const auto gt = normalized_gt(session);
    const auto truth = detect_regions(gt, session.rate, config);
    EvalRow row;
    row.session = session.id;
    row.method = method;
    row.f1 = region_f1(truth, pred);
    row.te = time_efficiency(pred, session.length());
    row.gt_te = time_efficiency(truth, session.length());
    const auto rec = simulate_annotation(gt, pred, session.rate);
    score_reconstruction(row, gt, rec.values);
    return row;
}

}  // namespace prefab

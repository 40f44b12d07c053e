#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefab/trace.hpp"

namespace prefab {

// Region sets are sorted, disjoint half-open sample intervals. Durations are
// measured in samples; every ratio below is rate-independent.

std::int64_t covered_length(std::span<const TimeInterval> regions);
std::int64_t overlap_length(std::span<const TimeInterval> a, std::span<const TimeInterval> b);

/// 2|gt ∩ pred| / (|gt| + |pred|). Both empty gives 1, exactly one empty gives 0.
double region_f1(std::span<const TimeInterval> gt, std::span<const TimeInterval> pred);

/// Fraction of the session not covered by regions.
double time_efficiency(std::span<const TimeInterval> regions, std::size_t total_len);

/// Mean absolute difference of paired TE values.
double delta_te(std::span<const double> gt_tes, std::span<const double> pred_tes);

/// A correlation-type score. `degenerate` is set when the value was forced
/// to 0 because an input had no variance.
struct Agreement {
    double value = 0.0;
    bool degenerate = false;
};

Agreement pearson(std::span<const double> x, std::span<const double> y);
/// Population moments.
Agreement ccc(std::span<const double> x, std::span<const double> y);
/// 1-based ranks, ties share the mean of their positions.
std::vector<double> mid_ranks(std::span<const double> x);
Agreement spearman(std::span<const double> x, std::span<const double> y);

/// 1 / (1 + dtw(norm x, norm y) / max(|x|, |y|)) with min-max normalised inputs.
double dtw_similarity(std::span<const double> x, std::span<const double> y);

struct TemporalStats {
    std::size_t clip_count = 0;
    double total_s = 0.0;
    double mean_s = 0.0;
    std::size_t short_count = 0;  // clips strictly shorter than the short-clip limit
    double te = 1.0;
    bool te_over_half = true;
};

TemporalStats temporal_characteristics(std::span<const TimeInterval> regions, std::size_t total_len,
                                       SampleRate rate, double short_clip_s = 6.0);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, 0 for fewer than two values
    std::size_t n = 0;
};

MeanSd mean_sd(std::span<const double> values);
/// "8.00 ± 1.92"
std::string format_mean_sd(const MeanSd& m, int precision = 2);

struct TemporalSummary {
    MeanSd clip_count, total_s, mean_s, short_count, te;
    std::size_t sessions_te_over_half = 0;
    std::size_t sessions = 0;
};

TemporalSummary summarize_temporal(std::span<const TemporalStats> per_session);

/// One (session, method) evaluation row. Trace agreement fields are only
/// present when the method produced a reconstruction.
struct EvalRow {
    std::string session;
    std::string method;
    double f1 = 0.0;
    double te = 1.0;
    double gt_te = 1.0;
    std::optional<double> ccc, ccc_normalized, spearman, dtw_similarity;
};

struct MethodSummary {
    std::string method;
    MeanSd f1, te;
    double delta_te = 0.0;
    MeanSd ccc, ccc_normalized, spearman, dtw_similarity;
};

/// Per-method aggregates in first-appearance order.
std::vector<MethodSummary> summarize(std::span<const EvalRow> rows);

/// Fills the trace agreement fields of `row`. CCC is reported on the raw
/// reconstruction and on its min-max normalised form.
void score_reconstruction(EvalRow& row, std::span<const double> gt, std::span<const double> reconstruction);

void write_report_csv(const std::filesystem::path& path, std::span<const EvalRow> rows,
                      const std::string& config_hash = {});
void write_summary_csv(const std::filesystem::path& path, std::span<const MethodSummary> summary,
                       const std::string& config_hash = {});
std::string report_json(std::span<const EvalRow> rows, std::span<const MethodSummary> summary,
                        const std::string& config_hash = {});

}  // namespace prefab

#include "prefab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "prefab/clustering.hpp"
#include "prefab/csv.hpp"
#include "prefab/error.hpp"

namespace prefab {

std::int64_t covered_length(std::span<const TimeInterval> regions) {
    std::int64_t total = 0;
    for (const auto& r : regions) total += r.length();
    return total;
}

std::int64_t overlap_length(std::span<const TimeInterval> a, std::span<const TimeInterval> b) {
    std::int64_t total = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const auto lo = std::max(a[i].begin, b[j].begin);
        const auto hi = std::min(a[i].end, b[j].end);
        if (hi > lo) total += hi - lo;
        if (a[i].end < b[j].end)
            ++i;
        else
            ++j;
    }
    return total;
}

double region_f1(std::span<const TimeInterval> gt, std::span<const TimeInterval> pred) {
    const auto g = covered_length(gt), p = covered_length(pred);
    if (g == 0 && p == 0) return 1.0;
    if (g == 0 || p == 0) return 0.0;
    return 2.0 * static_cast<double>(overlap_length(gt, pred)) / static_cast<double>(g + p);
}

double time_efficiency(std::span<const TimeInterval> regions, std::size_t total_len) {
    if (total_len == 0) return 1.0;
    const auto total = static_cast<std::int64_t>(total_len);
    return static_cast<double>(total - covered_length(regions)) / static_cast<double>(total);
}

double delta_te(std::span<const double> gt_tes, std::span<const double> pred_tes) {
    if (gt_tes.size() != pred_tes.size())
        throw Error(ErrorKind::LengthMismatch, "delta_te needs paired TE lists of equal length");
    if (gt_tes.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < gt_tes.size(); ++k) sum += std::abs(gt_tes[k] - pred_tes[k]);
    return sum / static_cast<double>(gt_tes.size());
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, const char* what) {
    if (x.size() != y.size())
        throw Error(ErrorKind::LengthMismatch, std::string(what) + ": inputs differ in length");
    if (x.size() < 2) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": need at least 2 samples");
}

struct Moments {
    double mx = 0, my = 0, vx = 0, vy = 0, cov = 0;
};

// population moments, two-pass
Moments moments(std::span<const double> x, std::span<const double> y) {
    Moments m;
    const double n = static_cast<double>(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        m.mx += x[k];
        m.my += y[k];
    }
    m.mx /= n;
    m.my /= n;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double a = x[k] - m.mx, b = y[k] - m.my;
        m.vx += a * a;
        m.vy += b * b;
        m.cov += a * b;
    }
    m.vx /= n;
    m.vy /= n;
    m.cov /= n;
    return m;
}

}  // namespace

Agreement pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, "pearson");
    const auto m = moments(x, y);
    if (m.vx == 0.0 || m.vy == 0.0) return {0.0, true};
    return {std::clamp(m.cov / std::sqrt(m.vx * m.vy), -1.0, 1.0), false};
}

Agreement ccc(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, "ccc");
    const auto m = moments(x, y);
    if (m.vx == 0.0 && m.vy == 0.0) return {0.0, true};
    const double d = m.mx - m.my;
    return {2.0 * m.cov / (m.vx + m.vy + d * d), false};
}

std::vector<double> mid_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

Agreement spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, "spearman");
    const auto rx = mid_ranks(x), ry = mid_ranks(y);
    return pearson(rx, ry);
}

double dtw_similarity(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw Error(ErrorKind::EmptyTrace, "dtw_similarity needs non-empty inputs");
    const auto nx = normalize_session(x), ny = normalize_session(y);
    const double len = static_cast<double>(std::max(x.size(), y.size()));
    return 1.0 / (1.0 + dtw_distance(nx, ny) / len);
}

TemporalStats temporal_characteristics(std::span<const TimeInterval> regions, std::size_t total_len,
                                       SampleRate rate, double short_clip_s) {
    TemporalStats s;
    s.clip_count = regions.size();
    const auto short_limit = rate.to_samples(short_clip_s);
    for (const auto& r : regions)
        if (r.length() < short_limit) ++s.short_count;
    s.total_s = rate.to_seconds(covered_length(regions));
    s.mean_s = s.clip_count ? s.total_s / static_cast<double>(s.clip_count) : 0.0;
    s.te = time_efficiency(regions, total_len);
    s.te_over_half = s.te > 0.5;
    return s;
}

MeanSd mean_sd(std::span<const double> values) {
    MeanSd m;
    m.n = values.size();
    if (values.empty()) return m;
    m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(m.n);
    if (m.n < 2) return m;
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(m.n - 1));
    return m;
}

std::string format_mean_sd(const MeanSd& m, int precision) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(precision);
    os << m.mean << " ± " << m.sd;
    return os.str();
}

TemporalSummary summarize_temporal(std::span<const TemporalStats> per_session) {
    std::vector<double> count, total, mean, shorts, te;
    TemporalSummary out;
    out.sessions = per_session.size();
    for (const auto& s : per_session) {
        count.push_back(static_cast<double>(s.clip_count));
        total.push_back(s.total_s);
        mean.push_back(s.mean_s);
        shorts.push_back(static_cast<double>(s.short_count));
        te.push_back(s.te);
        if (s.te_over_half) ++out.sessions_te_over_half;
    }
    out.clip_count = mean_sd(count);
    out.total_s = mean_sd(total);
    out.mean_s = mean_sd(mean);
    out.short_count = mean_sd(shorts);
    out.te = mean_sd(te);
    return out;
}

std::vector<MethodSummary> summarize(std::span<const EvalRow> rows) {
    std::vector<std::string> methods;
    for (const auto& r : rows)
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);

    std::vector<MethodSummary> out;
    for (const auto& name : methods) {
        std::vector<double> f1, te, gt_te, c, cn, sp, dtw;
        for (const auto& r : rows) {
            if (r.method != name) continue;
            f1.push_back(r.f1);
            te.push_back(r.te);
            gt_te.push_back(r.gt_te);
            if (r.ccc) c.push_back(*r.ccc);
            if (r.ccc_normalized) cn.push_back(*r.ccc_normalized);
            if (r.spearman) sp.push_back(*r.spearman);
            if (r.dtw_similarity) dtw.push_back(*r.dtw_similarity);
        }
        MethodSummary m;
        m.method = name;
        m.f1 = mean_sd(f1);
        m.te = mean_sd(te);
        m.delta_te = delta_te(gt_te, te);
        m.ccc = mean_sd(c);
        m.ccc_normalized = mean_sd(cn);
        m.spearman = mean_sd(sp);
        m.dtw_similarity = mean_sd(dtw);
        out.push_back(std::move(m));
    }
    return out;
}

void score_reconstruction(EvalRow& row, std::span<const double> gt, std::span<const double> reconstruction) {
    row.ccc = ccc(gt, reconstruction).value;
    const auto norm_gt = normalize_session(gt);
    const auto norm_rec = normalize_session(reconstruction);
    row.ccc_normalized = ccc(norm_gt, norm_rec).value;
    row.spearman = spearman(gt, reconstruction).value;
    row.dtw_similarity = dtw_similarity(gt, reconstruction);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string{}; }

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json mean_sd_json(const MeanSd& m) { return {{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}}; }

}  // namespace

void write_report_csv(const std::filesystem::path& path, std::span<const EvalRow> rows,
                      const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << "session,method,f1,te,gt_te,ccc,ccc_normalized,spearman,dtw_similarity,config_hash\n";
    for (const auto& r : rows)
        out << r.session << ',' << r.method << ',' << csv::format_double(r.f1) << ',' << csv::format_double(r.te)
            << ',' << csv::format_double(r.gt_te) << ',' << opt(r.ccc) << ',' << opt(r.ccc_normalized) << ','
            << opt(r.spearman) << ',' << opt(r.dtw_similarity) << ',' << config_hash << '\n';
}

void write_summary_csv(const std::filesystem::path& path, std::span<const MethodSummary> summary,
                       const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << "method,f1,te,delta_te,ccc,ccc_normalized,spearman,dtw_similarity,config_hash\n";
    for (const auto& m : summary) {
        out << m.method << ',' << format_mean_sd(m.f1, 3) << ',' << format_mean_sd(m.te, 3) << ','
            << csv::format_double(m.delta_te);
        for (const auto* v : {&m.ccc, &m.ccc_normalized, &m.spearman, &m.dtw_similarity})
            out << ',' << (v->n ? format_mean_sd(*v, 3) : std::string{});
        out << ',' << config_hash << '\n';
    }
}

std::string report_json(std::span<const EvalRow> rows, std::span<const MethodSummary> summary,
                        const std::string& config_hash) {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"session", r.session},
                             {"method", r.method},
                             {"f1", r.f1},
                             {"te", r.te},
                             {"gt_te", r.gt_te},
                             {"ccc", opt_json(r.ccc)},
                             {"ccc_normalized", opt_json(r.ccc_normalized)},
                             {"spearman", opt_json(r.spearman)},
                             {"dtw_similarity", opt_json(r.dtw_similarity)}});
    j["summary"] = nlohmann::ordered_json::array();
    for (const auto& m : summary)
        j["summary"].push_back({{"method", m.method},
                                {"f1", mean_sd_json(m.f1)},
                                {"te", mean_sd_json(m.te)},
                                {"delta_te", m.delta_te},
                                {"ccc", mean_sd_json(m.ccc)},
                                {"ccc_normalized", mean_sd_json(m.ccc_normalized)},
                                {"spearman", mean_sd_json(m.spearman)},
                                {"dtw_similarity", mean_sd_json(m.dtw_similarity)}});
    return j.dump(2);
}

}  // namespace prefab

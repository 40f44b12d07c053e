#include "prefab/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "prefab/error.hpp"
#include "prefab/rng.hpp"

namespace prefab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> resample_to_length(const std::vector<double>& v, std::size_t length) {
    if (length == 0 || v.size() == length) return v;
    if (v.size() == 1) return std::vector<double>(length, v.front());
    std::vector<double> out(length);
    const double scale = static_cast<double>(v.size() - 1) / static_cast<double>(length - 1);
    for (std::size_t k = 0; k < length; ++k) {
        const double pos = static_cast<double>(k) * scale;
        const auto idx = std::min(static_cast<std::size_t>(pos), v.size() - 2);
        const double frac = pos - static_cast<double>(idx);
        out[k] = v[idx] + (v[idx + 1] - v[idx]) * frac;
    }
    return out;
}

std::vector<std::vector<double>> prepare(std::span<const std::vector<double>> traces, std::size_t length) {
    std::vector<std::vector<double>> out;
    out.reserve(traces.size());
    for (const auto& t : traces) {
        if (t.empty()) throw Error(ErrorKind::EmptyTrace, "clustering input contains an empty trace");
        out.push_back(resample_to_length(t, length));
    }
    return out;
}

}  // namespace

double dtw_distance(std::span<const double> a, std::span<const double> b, const DtwParams& params) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::EmptyTrace, "dtw_distance on empty trace");
    const std::size_t n = a.size(), m = b.size();
    const std::size_t band = params.window.value_or(std::max(n, m));
    std::vector<double> prev(m + 1, kInf), cur(m + 1, kInf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        std::fill(cur.begin(), cur.end(), kInf);
        const std::size_t lo = i > band ? i - band : 1;
        const std::size_t hi = std::min(m, i + band);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double d = a[i - 1] - b[j - 1];
            cur[j] = d * d + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

namespace serial {
std::vector<double> dtw_matrix(std::span<const std::vector<double>> traces, const DtwParams& params) {
    const std::size_t n = traces.size();
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = dtw_distance(traces[i], traces[j], params);
    return dist;
}
}  // namespace serial

namespace parallel {
std::vector<double> dtw_matrix(std::span<const std::vector<double>> traces, const DtwParams& params) {
    const std::size_t n = traces.size();
    std::vector<double> dist(n * n, 0.0);
    // Each unordered pair is owned by exactly one loop index.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - (n > 0)) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    kernels::parallel::for_each_index(pairs.size(), [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        dist[i * n + j] = dist[j * n + i] = dtw_distance(traces[i], traces[j], params);
    });
    return dist;
}
}  // namespace parallel

std::vector<double> dtw_matrix(std::span<const std::vector<double>> traces, const DtwParams& params,
                               kernels::Exec exec) {
    return exec == kernels::Exec::Serial ? serial::dtw_matrix(traces, params) : parallel::dtw_matrix(traces, params);
}

double silhouette_score(std::span<const double> dist, std::size_t n, std::span<const int> labels, std::size_t k) {
    if (k < 2 || k >= n) return 0.0;
    std::vector<std::size_t> sizes(k, 0);
    for (int c : labels) ++sizes[static_cast<std::size_t>(c)];
    double total = 0.0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(labels[i]);
        if (sizes[own] <= 1) continue;  // singleton contributes 0
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sums[static_cast<std::size_t>(labels[j])] += dist[i * n + j];
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = kInf;
        for (std::size_t c = 0; c < k; ++c)
            if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

double label_entropy(std::span<const int> labels, std::size_t k) {
    if (labels.empty()) return 0.0;
    std::vector<double> counts(k, 0.0);
    for (int c : labels) counts[static_cast<std::size_t>(c)] += 1.0;
    double h = 0.0;
    for (double c : counts) {
        if (c <= 0.0) continue;
        const double p = c / static_cast<double>(labels.size());
        h -= p * std::log(p);
    }
    return h;
}

namespace {

struct Partition {
    std::vector<std::size_t> medoids;
    std::vector<int> labels;
    double cost = kInf;
};

void assign(std::span<const double> dist, std::size_t n, Partition& p) {
    p.labels.assign(n, 0);
    p.cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_d = kInf;
        for (std::size_t c = 0; c < p.medoids.size(); ++c) {
            if (p.medoids[c] == i) {  // a medoid always belongs to its own cluster
                best = c;
                best_d = 0.0;
                break;
            }
            const double d = dist[i * n + p.medoids[c]];
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        p.labels[i] = static_cast<int>(best);
        p.cost += best_d;
    }
}

void refine(std::span<const double> dist, std::size_t n, Partition& p, std::size_t max_iterations) {
    assign(dist, n, p);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (std::size_t c = 0; c < p.medoids.size(); ++c) {
            std::size_t best = p.medoids[c];
            double best_sum = kInf;
            for (std::size_t i = 0; i < n; ++i) {
                if (p.labels[i] != static_cast<int>(c)) continue;
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    if (p.labels[j] == static_cast<int>(c)) s += dist[i * n + j];
                if (s < best_sum) {
                    best_sum = s;
                    best = i;
                }
            }
            if (best != p.medoids[c]) {
                p.medoids[c] = best;
                changed = true;
            }
        }
        if (!changed) break;
        assign(dist, n, p);
    }
}

Partition build_init(std::span<const double> dist, std::size_t n, std::size_t k) {
    Partition p;
    std::vector<double> nearest(n, kInf);
    std::vector<bool> chosen(n, false);
    // First medoid: smallest total distance. Later ones: largest cost reduction.
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = n;
        double best_score = -kInf;
        for (std::size_t c = 0; c < n; ++c) {
            if (chosen[c]) continue;
            double score = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = dist[c * n + j];
                score += step == 0 ? -d : std::max(0.0, nearest[j] - d);
            }
            if (score > best_score) {
                best_score = score;
                best = c;
            }
        }
        chosen[best] = true;
        p.medoids.push_back(best);
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], dist[best * n + j]);
    }
    return p;
}

ClusterAssignment finalize(std::span<const double> dist, std::size_t n, Partition p) {
    // Canonical labels: clusters ordered by medoid index.
    std::vector<std::size_t> order(p.medoids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.medoids[a] < p.medoids[b]; });
    std::vector<int> remap(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) remap[order[r]] = static_cast<int>(r);

    ClusterAssignment out;
    out.k = p.medoids.size();
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = remap[static_cast<std::size_t>(p.labels[i])];
    for (auto idx : order) out.medoids.push_back(p.medoids[idx]);
    out.cost = p.cost;
    out.silhouette = silhouette_score(dist, n, out.labels, out.k);
    out.entropy = label_entropy(out.labels, out.k);
    return out;
}

}  // namespace

ClusterAssignment cluster_matrix(std::span<const double> dist, std::size_t n, std::size_t k, std::uint64_t seed,
                                 const ClusterOptions& options) {
    if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be positive");
    if (k > n)
        throw Error(ErrorKind::TooFewSessions, "cannot form " + std::to_string(k) + " clusters from " +
                                                   std::to_string(n) + " traces");
    if (dist.size() != n * n) throw Error(ErrorKind::DimensionMismatch, "distance matrix is not n x n");

    Partition best = build_init(dist, n, k);
    refine(dist, n, best, options.max_iterations);

    Rng rng(seed);
    for (std::size_t r = 0; r < options.restarts; ++r) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        rng.shuffle(idx.begin(), idx.end());
        Partition p;
        p.medoids.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
        refine(dist, n, p, options.max_iterations);
        if (p.cost < best.cost) best = std::move(p);
    }
    return finalize(dist, n, std::move(best));
}

ClusterAssignment cluster(std::span<const std::vector<double>> traces, std::size_t k, std::uint64_t seed,
                          const ClusterOptions& options) {
    if (k > traces.size())
        throw Error(ErrorKind::TooFewSessions, "cannot form " + std::to_string(k) + " clusters from " +
                                                   std::to_string(traces.size()) + " traces");
    const auto prepared = prepare(traces, options.resample_length);
    const auto dist = dtw_matrix(prepared, options.dtw);
    return cluster_matrix(dist, traces.size(), k, seed, options);
}

KSelection select_k(std::span<const std::vector<double>> traces, std::size_t k_min, std::size_t k_max,
                    std::uint64_t seed, const ClusterOptions& options) {
    if (k_min < 2 || k_min > k_max) throw Error(ErrorKind::InvalidArgument, "k range must satisfy 2 <= k_min <= k_max");
    if (k_max > traces.size())
        throw Error(ErrorKind::TooFewSessions, "k_max " + std::to_string(k_max) + " exceeds " +
                                                   std::to_string(traces.size()) + " traces");
    const auto prepared = prepare(traces, options.resample_length);
    const auto dist = dtw_matrix(prepared, options.dtw);
    const std::size_t n = traces.size();

    KSelection sel;
    for (std::size_t k = k_min; k <= k_max; ++k) sel.candidates.push_back(cluster_matrix(dist, n, k, seed, options));

    double s_lo = kInf, s_hi = -kInf;
    for (const auto& c : sel.candidates) {
        s_lo = std::min(s_lo, c.silhouette);
        s_hi = std::max(s_hi, c.silhouette);
    }
    std::size_t best = 0;
    for (std::size_t idx = 0; idx < sel.candidates.size(); ++idx) {
        const auto& c = sel.candidates[idx];
        const double s_norm = s_hi > s_lo ? (c.silhouette - s_lo) / (s_hi - s_lo) : 0.0;
        const double e_norm = c.entropy / std::log(static_cast<double>(c.k));
        sel.scores.push_back(0.5 * (s_norm + e_norm));
        if (sel.scores[idx] > sel.scores[best]) best = idx;  // strict: ties keep the smaller k
    }
    sel.structured = s_hi >= options.min_silhouette;
    sel.chosen = sel.candidates[sel.structured ? best : 0];
    return sel;
}

nlohmann::ordered_json cluster_report(const KSelection& selection, std::span<const std::string> ids) {
    nlohmann::ordered_json j;
    j["table"] = nlohmann::ordered_json::array();
    for (std::size_t idx = 0; idx < selection.candidates.size(); ++idx) {
        const auto& c = selection.candidates[idx];
        j["table"].push_back({{"k", c.k},
                              {"silhouette", c.silhouette},
                              {"entropy", c.entropy},
                              {"entropy_normalized", c.entropy / std::log(static_cast<double>(c.k))},
                              {"score", selection.scores[idx]}});
    }
    const auto& ch = selection.chosen;
    nlohmann::ordered_json chosen;
    chosen["k"] = ch.k;
    chosen["silhouette"] = ch.silhouette;
    chosen["entropy"] = ch.entropy;
    chosen["medoids"] = ch.medoids;
    if (ids.size() == ch.labels.size()) {
        nlohmann::ordered_json labels = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < ids.size(); ++i) labels[ids[i]] = ch.labels[i];
        chosen["labels"] = labels;
    } else {
        chosen["labels"] = ch.labels;
    }
    j["chosen"] = chosen;
    j["structured"] = selection.structured;
    return j;
}

}  // namespace prefab

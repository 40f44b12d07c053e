// Acceptance runner: one PASS/FAIL line per criterion.
//
//   prefab_acceptance [--only 1,5,6] [--known-failure 7] [--report out.txt]
//
// A known failure still prints FAIL; it only stops that line from turning the
// exit status non-zero. An unexpected pass of a known failure is reported.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "cli.hpp"
#include "prefab/clustering.hpp"
#include "prefab/config.hpp"
#include "prefab/inflection.hpp"
#include "prefab/interpolate.hpp"
#include "prefab/losses.hpp"
#include "prefab/metrics.hpp"
#include "prefab/model.hpp"
#include "prefab/pipeline.hpp"
#include "prefab/rng.hpp"
#include "prefab/service.hpp"
#include "prefab/synth.hpp"

using namespace prefab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel_err(double a, double b, double floor) {
    return std::abs(a - b) / std::max({floor, std::abs(a), std::abs(b)});
}

// ---------------------------------------------------------------- 1

struct GradStats {
    double max_rel = 0.0;
    std::size_t checks = 0;
    void add(double r) {
        max_rel = std::max(max_rel, r);
        ++checks;
    }
};

NetworkConfig random_network(Rng& rng) {
    NetworkConfig c;
    c.encoder_layers.assign(1 + rng.below(2), 0);
    for (auto& w : c.encoder_layers) w = 2 + rng.below(6);
    c.latent_dim = 2 + rng.below(5);
    c.film_hidden = rng.below(5);
    c.aux_classes = 2 + rng.below(4);
    c.use_film = rng.below(2) == 1;
    c.use_aux = rng.below(2) == 1;
    c.alpha = rng.uniform(0.001, 0.5);
    const double c0 = rng.uniform(-2, 0);
    c.cuts = {c0, c0 + rng.uniform(0.3, 3)};
    c.seed = rng.next_u64();
    return c;
}

Outcome criterion_gradients() {
    const double h = 1e-5;
    GradStats losses, film_stats, network;
    Rng rng(101);
    for (int n = 0; n < 200; ++n) {
        const double c0 = rng.uniform(-3, 0);
        const loss::Cutpoints cuts{c0, c0 + rng.uniform(0.2, 3)};
        const double pi = rng.normal(0, 2), pj = rng.normal(0, 2);
        for (int cls = 0; cls < 3; ++cls) {
            const auto g = loss::oce_grad(pi, pj, cls, cuts);
            const auto f = [&](double a, double b) { return loss::oce_loss(a, b, cls, cuts).value; };
            losses.add(rel_err(g.d_pj, (f(pi, pj + h) - f(pi, pj - h)) / (2 * h), 1e-8));
            losses.add(rel_err(g.d_pi, (f(pi + h, pj) - f(pi - h, pj)) / (2 * h), 1e-8));
        }
        for (int y : {0, 1}) {
            const auto g = loss::bce_grad(pi, pj, y);
            losses.add(rel_err(g.d_pj, (loss::bce_loss(pi, pj + h, y) - loss::bce_loss(pi, pj - h, y)) / (2 * h), 1e-8));
            losses.add(rel_err(g.d_pi, (loss::bce_loss(pi + h, pj, y) - loss::bce_loss(pi - h, pj, y)) / (2 * h), 1e-8));
        }
    }

    Rng net_rng(202);
    for (int n = 0; n < 200; ++n) {
        auto config = random_network(net_rng);
        const std::size_t d = 1 + net_rng.below(4), b = 1 + net_rng.below(3);
        auto w = init_weights(config, d, b);
        for (auto& p : w.params) p += net_rng.normal(0, 0.3);
        std::vector<double> fa(kWindowFrames * d), fb(kWindowFrames * d), bio(b);
        for (auto& v : fa) v = net_rng.normal();
        for (auto& v : fb) v = net_rng.normal();
        for (auto& v : bio) v = net_rng.normal();
        const FeatureSegment sa{kFirstSegmentIndex, d, fa, bio}, sb{kFirstSegmentIndex + 4, d, fb, bio};
        const int cls = static_cast<int>(net_rng.below(3));
        const int aux = static_cast<int>(net_rng.below(config.aux_classes));
        const bool regression = n % 4 == 3;
        const double target = net_rng.normal();
        const auto objective = [&](const ModelWeights& m, std::span<double> g) {
            return regression ? regression_objective(m, sa, target, aux, g) : pair_objective(m, sa, sb, cls, aux, g);
        };
        std::vector<double> grad(w.params.size(), 0.0);
        objective(w, grad);
        auto probe = w;
        for (std::size_t k = 0; k < w.params.size(); ++k) {
            probe.params[k] = w.params[k] + h;
            const double up = objective(probe, {});
            probe.params[k] = w.params[k] - h;
            const double down = objective(probe, {});
            probe.params[k] = w.params[k];
            network.add(rel_err(grad[k], (up - down) / (2 * h), 1e-6));
        }

        // FiLM layer alone: L = Σ u ⊙ (γ ⊙ z + β) against the generator weights and z
        if (!config.use_film) continue;
        std::vector<double> z(config.latent_dim), u(config.latent_dim);
        for (auto& v : z) v = net_rng.normal();
        for (auto& v : u) v = net_rng.normal();
        const auto film_loss = [&](const ModelWeights& m, std::span<const double> zz) {
            Activations act;
            film::generate(m, bio, act);
            double s = 0.0;
            for (std::size_t k = 0; k < zz.size(); ++k) s += u[k] * (act.gamma[k] * zz[k] + act.beta[k]);
            return s;
        };
        Activations act;
        film::generate(w, bio, act);
        std::vector<double> fgrad(w.params.size(), 0.0), dz(z.size(), 0.0);
        film::backward(w, bio, act, z, u, fgrad, dz);
        for (const auto& layer : w.arch.film)
            for (std::size_t k = layer.offset; k < layer.offset + layer.size(); ++k) {
                probe.params[k] = w.params[k] + h;
                const double up = film_loss(probe, z);
                probe.params[k] = w.params[k] - h;
                const double down = film_loss(probe, z);
                probe.params[k] = w.params[k];
                film_stats.add(rel_err(fgrad[k], (up - down) / (2 * h), 1e-6));
            }
        for (std::size_t k = 0; k < z.size(); ++k) {
            auto zu = z, zd = z;
            zu[k] += h;
            zd[k] -= h;
            film_stats.add(rel_err(dz[k], (film_loss(w, zu) - film_loss(w, zd)) / (2 * h), 1e-6));
        }
    }
    const bool pass = losses.max_rel < 1e-5 && film_stats.max_rel < 1e-4 && network.max_rel < 1e-4;
    return {pass, fmt("max rel err: losses %.2e (%zu checks, < 1e-5), FiLM %.2e (%zu, < 1e-4), network %.2e (%zu, < 1e-4)",
                      losses.max_rel, losses.checks, film_stats.max_rel, film_stats.checks, network.max_rel,
                      network.checks)};
}

// ---------------------------------------------------------------- 2

Outcome criterion_oce() {
    Rng rng(303);
    double worst_sum = 0.0;
    std::size_t monotone_violations = 0, collapse_violations = 0;
    double worst_collapse = 0.0;
    const std::size_t n = 1000000;
    for (std::size_t k = 0; k < n; ++k) {
        const double c0 = rng.uniform(-5, 5);
        const loss::Cutpoints cuts{c0, c0 + rng.uniform(1e-6, 6)};
        const double p = rng.uniform(-10, 10);
        const auto a = loss::oce_probs(p, cuts);
        worst_sum = std::max(worst_sum, std::abs(a.p0 + a.p1 + a.p2 - 1.0));
        const auto b = loss::oce_probs(p + rng.uniform(0.01, 1.0), cuts);
        if (!(b.p0 < a.p0) || !(b.p2 > a.p2)) ++monotone_violations;
        const double c1 = rng.uniform(-5, 5);
        const double p1 = loss::oce_probs(p, {c1 - 1e-8, c1}).p1;
        worst_collapse = std::max(worst_collapse, p1);
        if (!(p1 < 1e-8)) ++collapse_violations;
    }
    const bool pass = worst_sum <= 1e-12 && monotone_violations == 0 && collapse_violations == 0;
    return {pass, fmt("%zu draws: max |ΣP - 1| %.1e, monotonicity violations %zu, max collapsed P1 %.2e",
                      n, worst_sum, monotone_violations, worst_collapse)};
}

// ---------------------------------------------------------------- 3

using Regions = std::vector<AnnotatedRegion>;

Regions random_dyadic_regions(Rng& rng, std::size_t T) {
    // latter-half lengths that are powers of two keep every slope exact
    static const std::int64_t lens[] = {2, 3, 4, 5, 8, 9, 16, 17};
    Regions out;
    std::int64_t t = static_cast<std::int64_t>(rng.below(5));
    while (true) {
        const std::int64_t len = lens[rng.below(8)];
        if (t + len > static_cast<std::int64_t>(T)) break;
        AnnotatedRegion r{{t, t + len}, {}};
        for (std::int64_t k = 0; k < len; ++k) r.values.push_back(static_cast<double>(static_cast<int>(rng.below(21)) - 10));
        out.push_back(std::move(r));
        t += len + 1 + static_cast<std::int64_t>(rng.below(15));
    }
    return out;
}

Outcome criterion_interpolate() {
    struct Fixture {
        const char* name;
        Regions regions;
        std::size_t length;
        std::vector<double> expect;
    };
    // expected traces worked out by hand
    const std::vector<Fixture> fixtures{
        {"T=8 single region", {{{0, 4}, {0, 1, 2, 3}}}, 8, {0, 1, 2, 3, 4, 5, 6, 7}},
        {"two regions with gap", {{{0, 3}, {5, 6, 7}}, {{5, 8}, {2, 1, 1}}}, 8, {0, 1, 2, 3, 4, 5, 4, 4}},
        {"whole-session region is identity", {{{0, 6}, {0, 2, -1, 4, 4, 7}}}, 6, {0, 2, -1, 4, 4, 7}},
        {"length-1 region", {{{1, 2}, {7}}}, 5, {0, 0, 0, 0, 0}},
        {"length-1 session", {{{0, 1}, {3}}}, 1, {0}},
        {"leading zeros", {{{2, 4}, {10, 12}}}, 6, {0, 0, 0, 2, 4, 6}},
        {"touching regions", {{{0, 2}, {0, 3}}, {{2, 4}, {1, 0}}}, 6, {0, 3, 6, 5, 4, 3}},
        {"latter-half slope", {{{0, 5}, {0, 0, 1, 3, 3}}}, 7, {0, 0, 1, 3, 3, 4, 5}},
        {"no regions", {}, 4, {0, 0, 0, 0}},
    };
    std::vector<std::string> wrong;
    for (const auto& f : fixtures)
        if (interpolate(f.regions, f.length).values != f.expect) wrong.push_back(f.name);

    Rng rng(404);
    std::size_t nonzero = 0, checked = 0;
    for (int n = 0; n < 1000; ++n) {
        const std::size_t T = 40 + rng.below(200);
        const auto regions = random_dyadic_regions(rng, T);
        const auto a = interpolate(regions, T).values;
        for (std::size_t k = 0; k < regions.size(); ++k) {
            const auto e = static_cast<std::size_t>(regions[k].interval.end) - 1;
            // the next region's first sample is overwritten by that region
            const auto last = k + 1 < regions.size() ? static_cast<std::size_t>(regions[k + 1].interval.begin) - 1 : T - 1;
            for (std::size_t t = e + 1; t + 1 <= last; ++t, ++checked)
                if ((a[t + 1] - a[t]) - (a[t] - a[t - 1]) != 0.0) ++nonzero;
        }
    }
    std::string detail = fmt("%zu/%zu fixtures exact; %zu gap second differences on 1000 inputs, %zu nonzero",
                             fixtures.size() - wrong.size(), fixtures.size(), checked, nonzero);
    for (const auto& w : wrong) detail += "; wrong: " + w;
    return {wrong.empty() && nonzero == 0 && checked > 0, detail};
}

// ---------------------------------------------------------------- 4

std::vector<TimeInterval> mask_to_regions(const std::vector<bool>& mask) {
    std::vector<TimeInterval> out;
    for (std::size_t t = 0; t < mask.size(); ++t) {
        if (!mask[t]) continue;
        if (!out.empty() && out.back().end == static_cast<std::int64_t>(t))
            ++out.back().end;
        else
            out.push_back({static_cast<std::int64_t>(t), static_cast<std::int64_t>(t) + 1});
    }
    return out;
}

double mask_f1(const std::vector<bool>& gt, const std::vector<bool>& pred) {
    double inter = 0, g = 0, p = 0;
    for (std::size_t t = 0; t < gt.size(); ++t) {
        inter += gt[t] && pred[t];
        g += gt[t];
        p += pred[t];
    }
    if (g + p == 0) return 1.0;
    return 2 * inter / (g + p);
}

// minimum over every monotone alignment path, enumerated recursively
double brute_dtw(const std::vector<double>& a, const std::vector<double>& b, std::size_t i, std::size_t j) {
    const double c = (a[i] - b[j]) * (a[i] - b[j]);
    if (i + 1 == a.size() && j + 1 == b.size()) return c;
    double best = INFINITY;
    if (i + 1 < a.size()) best = std::min(best, brute_dtw(a, b, i + 1, j));
    if (j + 1 < b.size()) best = std::min(best, brute_dtw(a, b, i, j + 1));
    if (i + 1 < a.size() && j + 1 < b.size()) best = std::min(best, brute_dtw(a, b, i + 1, j + 1));
    return c + best;
}

double naive_mean(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double naive_ccc(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = naive_mean(x), my = naive_mean(y);
    double vx = 0, vy = 0, cxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        vx += (x[k] - mx) * (x[k] - mx);
        vy += (y[k] - my) * (y[k] - my);
        cxy += (x[k] - mx) * (y[k] - my);
    }
    const double n = static_cast<double>(x.size());
    return 2 * cxy / n / (vx / n + vy / n + (mx - my) * (mx - my));
}

std::vector<double> naive_ranks(const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double less = 0, equal = 0;
        for (double v : x) {
            less += v < x[i];
            equal += v == x[i];
        }
        r[i] = less + (equal + 1) / 2;
    }
    return r;
}

double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = naive_mean(x), my = naive_mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

Outcome criterion_metrics() {
    std::size_t f1_cases = 0, f1_bad = 0;
    // every pair of masks up to length 6, then random masks for each length up to 200
    for (std::size_t T = 1; T <= 6; ++T)
        for (std::uint32_t gm = 0; gm < (1u << T); ++gm)
            for (std::uint32_t pm = 0; pm < (1u << T); ++pm) {
                std::vector<bool> g(T), p(T);
                for (std::size_t t = 0; t < T; ++t) {
                    g[t] = (gm >> t) & 1;
                    p[t] = (pm >> t) & 1;
                }
                ++f1_cases;
                if (region_f1(mask_to_regions(g), mask_to_regions(p)) != mask_f1(g, p)) ++f1_bad;
            }
    Rng rng(505);
    for (std::size_t T = 7; T <= 200; ++T)
        for (int n = 0; n < 50; ++n) {
            std::vector<bool> g(T), p(T);
            const double dg = rng.uniform(), dp = rng.uniform();
            // runs rather than independent bits so regions have realistic lengths
            bool on_g = false, on_p = false;
            for (std::size_t t = 0; t < T; ++t) {
                if (rng.uniform() < 0.15) on_g = rng.uniform() < dg;
                if (rng.uniform() < 0.15) on_p = rng.uniform() < dp;
                g[t] = on_g;
                p[t] = on_p;
            }
            ++f1_cases;
            if (std::abs(region_f1(mask_to_regions(g), mask_to_regions(p)) - mask_f1(g, p)) > 1e-15) ++f1_bad;
        }

    std::size_t dtw_cases = 0;
    double dtw_worst = 0.0;
    for (std::size_t la = 1; la <= 8; ++la)
        for (std::size_t lb = 1; lb <= 8; ++lb)
            for (int n = 0; n < 3; ++n) {
                std::vector<double> a(la), b(lb);
                for (auto& v : a) v = rng.normal();
                for (auto& v : b) v = rng.normal();
                const double ref = brute_dtw(a, b, 0, 0);
                dtw_worst = std::max(dtw_worst, rel_err(dtw_distance(a, b), ref, 1e-300));
                ++dtw_cases;
            }

    double corr_worst = 0.0;
    for (int n = 0; n < 500; ++n) {
        const std::size_t len = 3 + rng.below(200);
        std::vector<double> x(len), y(len);
        const bool ties = n % 2 == 0;
        for (std::size_t k = 0; k < len; ++k) {
            x[k] = ties ? static_cast<double>(rng.below(6)) : rng.normal();
            y[k] = 0.5 * x[k] + (ties ? static_cast<double>(rng.below(4)) : rng.normal());
        }
        const double rho = naive_pearson(naive_ranks(x), naive_ranks(y));
        corr_worst = std::max(corr_worst, std::abs(spearman(x, y).value - rho));
        corr_worst = std::max(corr_worst, std::abs(ccc(x, y).value - naive_ccc(x, y)));
    }
    const bool pass = f1_bad == 0 && dtw_worst <= 1e-12 && corr_worst <= 1e-12;
    return {pass, fmt("F1 %zu/%zu mask cases equal; DTW %zu cases max rel err %.1e; Spearman/CCC max |diff| %.1e",
                      f1_cases - f1_bad, f1_cases, dtw_cases, dtw_worst, corr_worst)};
}

// ---------------------------------------------------------------- 5

Outcome criterion_select_k() {
    std::map<std::size_t, int> counts;
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        synth::ArchetypeCorpusOptions opt;
        opt.per_archetype = 20;
        opt.noise_sd = 0.05;
        opt.seed = seed;
        const auto corpus = synth::make_archetype_corpus(opt);
        const auto sel = select_k(corpus.traces, 2, 7, seed);
        ++counts[sel.chosen.k];
        hits += sel.chosen.k == 4;
    }
    std::string hist;
    for (const auto& [k, c] : counts) hist += fmt(" k=%zu:%d", k, c);
    return {hits >= 18, fmt("k = 4 on %d/20 seeds (need >= 18);%s", hits, hist.c_str())};
}

// ---------------------------------------------------------------- shared world runs

// Model-based acceptance runs train for this many epochs; the remaining
// settings are the defaults.
constexpr std::size_t kEpochs = 20;

RunConfig world_config(std::uint64_t seed) {
    RunConfig c;
    c.apply_seed(seed);
    c.network.epochs = kEpochs;
    return c;
}

struct WorldEval {
    MeanSd f1;
    MeanSd te;
    double delta_te = 0.0;
};

WorldEval evaluate_regions(std::span<const Session* const> test, const RunConfig& config,
                           const std::function<std::vector<TimeInterval>(std::size_t)>& regions_of) {
    std::vector<double> f1, te, gt_te;
    for (std::size_t k = 0; k < test.size(); ++k) {
        const auto gt = gt_regions(*test[k], config.inflection);
        const auto pred = regions_of(k);
        f1.push_back(region_f1(gt, pred));
        te.push_back(time_efficiency(pred, test[k]->length()));
        gt_te.push_back(time_efficiency(gt, test[k]->length()));
    }
    return {mean_sd(f1), mean_sd(te), delta_te(gt_te, te)};
}

// ---------------------------------------------------------------- 6

Outcome criterion_end_to_end() {
    const auto config = world_config(1);
    const auto corpus = synth::make_world(config.world);
    const auto train = corpus.select(corpus.train_ids), test = corpus.select(corpus.test_ids);
    const auto fitted = fit_model(train, config);
    const double count = mean_gt_inflections(train, config.inflection);
    const auto prefab = evaluate_regions(test, config, [&](std::size_t k) {
        return model_regions(*test[k], fitted.train.weights, config.inflection);
    });
    const auto random = evaluate_regions(test, config, [&](std::size_t k) {
        return sampler_regions("random", *test[k], count, config, config.seed * 1000003 + k);
    });
    const auto uniform = evaluate_regions(test, config, [&](std::size_t k) {
        return sampler_regions("uniform", *test[k], count, config, 0);
    });
    const double margin = prefab.f1.mean - random.f1.mean;
    const bool pass = margin >= 0.10 && prefab.delta_te <= uniform.delta_te;
    return {pass, fmt("F1 prefab %.3f, random %.3f, uniform %.3f (margin %.3f, need >= 0.10); "
                      "dTE prefab %.3f <= uniform %.3f",
                      prefab.f1.mean, random.f1.mean, uniform.f1.mean, margin, prefab.delta_te, uniform.delta_te)};
}

// ---------------------------------------------------------------- 7

Outcome criterion_regression_contrast() {
    int wins = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto config = world_config(seed);
        config.world.flat = synth::FlatSegment{};
        config.world.feature_noise_sd = 0.02;
        const auto corpus = synth::make_world(config.world);
        const auto train = corpus.select(corpus.train_ids), test = corpus.select(corpus.test_ids);
        const auto flat_begin = config.world.rate.to_samples(config.world.flat->start_s);
        const auto flat_end = config.world.rate.to_samples(config.world.flat->start_s + config.world.flat->length_s);
        std::size_t inside[2] = {0, 0};
        for (int variant = 0; variant < 2; ++variant) {
            auto c = config;
            c.model = variant == 0 ? ModelKind::Ordinal : ModelKind::Regression;
            const auto fitted = fit_model(train, c);
            for (const auto* s : test)
                for (auto t : detect_points(predict_trace(*s, fitted.train.weights), c.inflection))
                    inside[variant] += static_cast<std::int64_t>(t) >= flat_begin && static_cast<std::int64_t>(t) < flat_end;
        }
        const bool win = inside[1] >= 2 * inside[0];
        wins += win;
        per_seed += fmt(" %llu:%zu/%zu", static_cast<unsigned long long>(seed), inside[1], inside[0]);
    }
    return {wins >= 8, fmt("regression >= 2x ordinal inside the flat segment on %d/10 seeds (need >= 8); "
                           "seed:regression/ordinal%s",
                           wins, per_seed.c_str())};
}

// ---------------------------------------------------------------- 8

Outcome criterion_ablation() {
    struct Cell {
        const char* name;
        bool film, aux;
        std::vector<double> f1, te;
    };
    std::vector<Cell> cells{{"None", false, false, {}, {}},
                            {"FiLM", true, false, {}, {}},
                            {"Aux", false, true, {}, {}},
                            {"All (PREFAB)", true, true, {}, {}}};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto base = world_config(seed);
        const auto corpus = synth::make_world(base.world);
        const auto train = corpus.select(corpus.train_ids), test = corpus.select(corpus.test_ids);
        for (auto& cell : cells) {
            auto c = base;
            c.network.use_film = cell.film;
            c.network.use_aux = cell.aux;
            const auto fitted = fit_model(train, c);
            const auto e = evaluate_regions(test, c, [&](std::size_t k) {
                return model_regions(*test[k], fitted.train.weights, c.inflection);
            });
            cell.f1.push_back(e.f1.mean);
            cell.te.push_back(e.te.mean);
        }
    }
    std::printf("    %-14s %-16s %-16s\n", "Configuration", "F1", "TE");
    double best_other = -1.0;
    for (const auto& cell : cells) {
        std::printf("    %-14s %-16s %-16s\n", cell.name, format_mean_sd(mean_sd(cell.f1), 3).c_str(),
                    format_mean_sd(mean_sd(cell.te), 3).c_str());
        if (!(cell.film && cell.aux)) best_other = std::max(best_other, mean_sd(cell.f1).mean);
    }
    const double all = mean_sd(cells.back().f1).mean;
    return {all > best_other, fmt("all-on mean F1 %.3f vs best other cell %.3f over 5 seeds", all, best_other)};
}

// ---------------------------------------------------------------- 9

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), root).string()] = ss.str();
    }
    return files;
}

Outcome criterion_determinism() {
    const auto base = fs::temp_directory_path() / "prefab_acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base);
    {
        RunConfig c;
        c.network.epochs = 5;
        c.world.train_sessions = 12;
        c.world.test_sessions = 4;
        save_run_config(base / "config.json", c);
    }
    const std::vector<std::vector<std::string>> steps{
        {"synth"},           {"cluster"},           {"train"},          {"detect", "--source", "gt"},
        {"detect"},          {"sample", "random"},  {"sample", "uniform"}, {"sample", "rule"},
        {"sample", "regression"}, {"evaluate"}};
    for (const char* run : {"a", "b"})
        for (const auto& step : steps) {
            std::vector<std::string> args{"prefab", "--config", (base / "config.json").string(), "--seed", "9",
                                          "--out", (base / run).string()};
            args.insert(args.end(), step.begin(), step.end());
            std::ostringstream out, err;
            if (cli::run(args, out, err) != cli::kOk) return {false, step[0] + " failed: " + err.str()};
        }
    const auto a = read_tree(base / "a"), b = read_tree(base / "b");
    std::size_t differ = 0, checkpoints = 0, regions = 0, reports = 0;
    for (const auto& [name, bytes] : a) {
        const auto it = b.find(name);
        if (it == b.end() || it->second != bytes) ++differ;
        checkpoints += name.rfind("checkpoint", 0) == 0;
        regions += name.rfind("regions", 0) == 0;
        reports += name.rfind("report", 0) == 0;
    }
    const bool pass = differ == 0 && a.size() == b.size() && checkpoints == 2 && regions > 0 && reports == 2;
    return {pass, fmt("%zu files compared (%zu checkpoints, %zu region files, %zu reports), %zu differ", a.size(),
                      checkpoints, regions, reports, differ)};
}

// ---------------------------------------------------------------- 10

Outcome criterion_service() {
    Rng rng(1010);
    SessionStore store;
    struct Script {
        std::string id;
        std::size_t length;
        std::vector<AnnotatedRegion> regions;
    };
    std::vector<Script> scripts;
    for (int n = 0; n < 12; ++n) {
        Script s{"s" + std::to_string(n), 120 + rng.below(400), {}};
        std::int64_t t = static_cast<std::int64_t>(rng.below(20));
        while (true) {
            const std::int64_t len = 1 + static_cast<std::int64_t>(rng.below(30));
            if (t + len > static_cast<std::int64_t>(s.length)) break;
            AnnotatedRegion r{{t, t + len}, {}};
            double x = rng.normal(0, 2);
            for (std::int64_t k = 0; k < len; ++k) r.values.push_back(x += rng.normal(0, 0.4));
            s.regions.push_back(std::move(r));
            t += len + static_cast<std::int64_t>(rng.below(40));
        }
        std::vector<InflectionRegion> tagged;
        for (const auto& r : s.regions) tagged.push_back({r.interval, "model"});
        store.add(make_manifest(s.id, {4, 1}, s.length, n % 2 ? Condition::PrefabPreview : Condition::PrefabNoPreview,
                                tagged));
        scripts.push_back(std::move(s));
    }
    SessionServer server(store);
    const int port = server.bind("127.0.0.1", 0);
    std::thread thread([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(10, 0);
    for (int i = 0; i < 200 && !client.Get("/sessions"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));

    std::size_t exact = 0, bad_status = 0, samples = 0;
    for (const auto& s : scripts) {
        // submit in a shuffled order; the result must not depend on it
        std::vector<std::size_t> order(s.regions.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        rng.shuffle(order.begin(), order.end());
        for (auto k : order) {
            const auto res = client.Post("/sessions/" + s.id + "/regions/" + std::to_string(k) + "/trace",
                                         nlohmann::json{{"samples", s.regions[k].values}}.dump(), "application/json");
            if (!res || res->status != 201) ++bad_status;
        }
        const auto done = client.Post("/sessions/" + s.id + "/complete", "", "application/json");
        if (!done || done->status != 200) ++bad_status;
        const auto rec = client.Get("/sessions/" + s.id + "/reconstruction");
        if (!rec || rec->status != 200) {
            ++bad_status;
            continue;
        }
        const auto values = nlohmann::json::parse(rec->body).at("values").get<std::vector<double>>();
        const auto expect = interpolate(s.regions, s.length, {4, 1}).values;
        samples += values.size();
        exact += values == expect;
    }
    server.stop();
    thread.join();
    const bool pass = exact == scripts.size() && bad_status == 0;
    return {pass, fmt("%zu/%zu sessions bit-exact (%zu samples), %zu unexpected statuses", exact, scripts.size(),
                      samples, bad_status)};
}

std::set<int> parse_list(const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only, known;
    std::string report_path;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--only") only = parse_list(argv[i + 1]);
        else if (flag == "--known-failure") known = parse_list(argv[i + 1]);
        else if (flag == "--report") report_path = argv[i + 1];
        else {
            std::fprintf(stderr, "usage: %s [--only 1,2] [--known-failure 7] [--report out.txt]\n", argv[0]);
            return 2;
        }
    }
    struct Criterion {
        int id;
        const char* name;
        double budget_s;  // 0: no runtime limit
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "gradient correctness", 60, criterion_gradients},
        {2, "OCE soundness", 0, criterion_oce},
        {3, "interpolation oracle", 0, criterion_interpolate},
        {4, "metric oracles", 0, criterion_metrics},
        {5, "clustering k-selection", 300, criterion_select_k},
        {6, "end-to-end direction", 900, criterion_end_to_end},
        {7, "regression vs ordinal on flat segment", 0, criterion_regression_contrast},
        {8, "ablation direction", 0, criterion_ablation},
        {9, "determinism", 0, criterion_determinism},
        {10, "service equivalence", 0, criterion_service},
    };
    std::FILE* report = report_path.empty() ? nullptr : std::fopen(report_path.c_str(), "w");
    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s budget", c.budget_s);
        }
        const bool is_known = known.count(c.id) > 0;
        const auto line = fmt("%s %2d %s: ", o.pass ? "PASS" : "FAIL", c.id, c.name) + o.detail +
                          fmt(" [%.1f s]%s\n", secs,
                              !o.pass && is_known ? " (known failure)" : o.pass && is_known ? " (listed as known failure)" : "");
        std::fputs(line.c_str(), stdout);
        std::fflush(stdout);
        if (report) {
            std::fputs(line.c_str(), report);
            std::fflush(report);
        }
        if (!o.pass && !is_known) ++failures;
    }
    if (report) std::fclose(report);
    return failures == 0 ? 0 : 1;
}

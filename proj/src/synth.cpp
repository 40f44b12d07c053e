#include "prefab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "prefab/error.hpp"
#include "prefab/pairing.hpp"
#include "prefab/rng.hpp"

namespace prefab::synth {

double archetype_value(Archetype a, double u, double peak) {
    u = std::clamp(u, 0.0, 1.0);
    // smooth bump with apex at `peak`: 0 at both ends, 1 at the apex
    const double bump = u <= peak ? std::sin(0.5 * std::numbers::pi * u / peak)
                                  : std::sin(0.5 * std::numbers::pi * (1.0 - u) / (1.0 - peak));
    switch (a) {
        case Archetype::Rising: return u;
        case Archetype::Falling: return 1.0 - u;
        case Archetype::Hill: return bump;
        case Archetype::Valley: return 1.0 - bump;
    }
    return 0.0;
}

ArchetypeCorpus make_archetype_corpus(const ArchetypeCorpusOptions& options) {
    if (options.min_length < 2 || options.max_length < options.min_length)
        throw Error(ErrorKind::InvalidArgument, "archetype corpus lengths must satisfy 2 <= min <= max");
    Rng rng(options.seed);
    ArchetypeCorpus out;
    for (std::size_t n = 0; n < options.per_archetype; ++n) {
        for (std::size_t a = 0; a < kArchetypes; ++a) {
            const auto len = options.min_length + rng.below(options.max_length - options.min_length + 1);
            const double peak = rng.uniform(0.3, 0.7);
            std::vector<double> trace(len);
            for (std::size_t t = 0; t < len; ++t) {
                const double u = static_cast<double>(t) / static_cast<double>(len - 1);
                trace[t] = archetype_value(static_cast<Archetype>(a), u, peak) + rng.normal(0.0, options.noise_sd);
            }
            out.traces.push_back(std::move(trace));
            out.labels.push_back(static_cast<int>(a));
        }
    }
    return out;
}

const std::vector<std::string>& world_feature_names() {
    static const std::vector<std::string> names{"enemies", "speed",  "health", "proximity",
                                                "damage",  "pickups", "progress", "score"};
    return names;
}

const std::vector<std::string>& world_biography_keys() {
    static const std::vector<std::string> keys{"thrill_seeker", "skill", "age"};
    return keys;
}

namespace {

constexpr std::size_t kSmooth = 6;  // sinusoidal features
constexpr std::size_t kProgress = 6;
constexpr std::size_t kScore = 7;

struct SessionDraw {
    Session session;
    int archetype = 0;
};

std::vector<double> moving_average(const std::vector<double>& x, std::size_t width) {
    if (width < 2) return x;
    const auto half = static_cast<std::ptrdiff_t>(width / 2);
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    std::vector<double> out(x.size());
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        const auto lo = std::max<std::ptrdiff_t>(0, t - half);
        const auto hi = std::min<std::ptrdiff_t>(n - 1, t + half);
        double s = 0.0;
        for (auto k = lo; k <= hi; ++k) s += x[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(t)] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

SessionDraw draw_session(const WorldOptions& opt, std::size_t index, std::uint64_t seed) {
    Rng rng(seed);
    const auto T = static_cast<std::size_t>(opt.rate.to_samples(opt.duration_s));
    if (T <= kFirstSegmentIndex + 1) throw Error(ErrorKind::InvalidArgument, "world sessions too short");
    const double dt = opt.rate.period_s();

    SessionDraw d;
    d.archetype = static_cast<int>(index % kArchetypes);
    Session& s = d.session;
    char id[32];
    std::snprintf(id, sizeof id, "s%03zu", index);
    s.id = id;
    s.game = "synthetic";
    s.rate = opt.rate;
    s.feature_names = world_feature_names();
    s.biography_keys = world_biography_keys();
    const double thrill = static_cast<double>(rng.below(2));
    const double skill = rng.uniform();
    s.biography = {thrill, skill, rng.uniform()};

    // true feature trajectories
    std::vector<std::vector<double>> f(world_feature_names().size(), std::vector<double>(T, 0.0));
    for (std::size_t k = 0; k < kSmooth; ++k) {
        double period[3], amp[3], phase[3];
        for (int m = 0; m < 3; ++m) {
            period[m] = rng.uniform(20.0, 60.0);
            amp[m] = rng.uniform(0.3, 0.6);
            phase[m] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        for (std::size_t t = 0; t < T; ++t) {
            const double ts = static_cast<double>(t) * dt;
            double v = 0.0;
            for (int m = 0; m < 3; ++m) v += amp[m] * std::sin(2.0 * std::numbers::pi * ts / period[m] + phase[m]);
            f[k][t] = v;
        }
    }
    const double peak = rng.uniform(0.35, 0.65);
    for (std::size_t t = 0; t < T; ++t)
        f[kProgress][t] = archetype_value(static_cast<Archetype>(d.archetype),
                                          static_cast<double>(t) / static_cast<double>(T - 1), peak);

    // score events: short and long runs of per-sample increments
    std::vector<double> event(T, 0.0);
    const std::size_t n_events = 3 + rng.below(4);
    for (std::size_t e = 0; e < n_events; ++e) {
        const auto len = static_cast<std::size_t>(opt.rate.to_samples(rng.uniform(1.0, 10.0)));
        const auto start = rng.below(T - len);
        for (std::size_t t = start; t < start + len; ++t) event[t] = 1.0;
    }

    std::size_t flat_begin = T, flat_end = T;
    if (opt.flat) {
        flat_begin = std::min(T, static_cast<std::size_t>(opt.rate.to_samples(opt.flat->start_s)));
        flat_end = std::min(T, flat_begin + static_cast<std::size_t>(opt.rate.to_samples(opt.flat->length_s)));
        for (std::size_t t = flat_begin; t < flat_end; ++t) {
            for (std::size_t k = 0; k < kScore; ++k) f[k][t] = f[k][flat_begin];
            event[t] = 0.0;
        }
    }
    double score = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        score += event[t];
        f[kScore][t] = score;
    }

    // biography-dependent response
    const double sign = thrill > 0.5 ? 1.0 : -1.0;
    const double w[kSmooth] = {0.6 * sign, 0.5 * sign, -0.4 * (0.5 + skill), 0.5 * sign, 0.4 * (0.5 + skill), 0.3};
    std::vector<double> latent(T);
    for (std::size_t t = 0; t < T; ++t) {
        double u = 1.5 * f[kProgress][t] + 0.8 * event[t];
        for (std::size_t k = 0; k < kSmooth; ++k) u += w[k] * f[k][t];
        latent[t] = u;
    }
    latent = moving_average(latent, static_cast<std::size_t>(opt.rate.to_samples(opt.smoothing_s)));
    for (std::size_t t = flat_begin; t < flat_end; ++t) latent[t] = latent[flat_begin];
    s.gt = normalize_session(std::span<const double>(latent));

    s.frames = FrameMatrix(T, f.size());
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < f.size(); ++k)
            s.frames.at(t, k) = k == kScore ? f[k][t] : f[k][t] + rng.normal(0.0, opt.feature_noise_sd);
    return d;
}

std::vector<SessionDraw> draw_world(const WorldOptions& options) {
    Rng master(options.seed);
    std::vector<SessionDraw> out;
    const auto n = options.train_sessions + options.test_sessions;
    for (std::size_t k = 0; k < n; ++k) out.push_back(draw_session(options, k, master.next_u64()));
    return out;
}

}  // namespace

Corpus make_world(const WorldOptions& options) {
    Corpus c;
    auto draws = draw_world(options);
    for (std::size_t k = 0; k < draws.size(); ++k) {
        (k < options.train_sessions ? c.train_ids : c.test_ids).push_back(draws[k].session.id);
        c.sessions.push_back(std::move(draws[k].session));
    }
    return c;
}

std::vector<int> world_archetypes(const WorldOptions& options) {
    std::vector<int> out;
    for (const auto& d : draw_world(options)) out.push_back(d.archetype);
    return out;
}

}  // namespace prefab::synth

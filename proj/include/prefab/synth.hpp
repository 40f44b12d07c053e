#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "prefab/session.hpp"

namespace prefab::synth {

enum class Archetype { Rising = 0, Falling = 1, Hill = 2, Valley = 3 };
inline constexpr std::size_t kArchetypes = 4;

/// Archetype shape at phase u in [0, 1], range [0, 1]. `peak` moves the apex
/// of hills and valleys.
double archetype_value(Archetype a, double u, double peak = 0.5);

struct ArchetypeCorpusOptions {
    std::size_t per_archetype = 20;
    std::size_t min_length = 360;
    std::size_t max_length = 600;
    double noise_sd = 0.05;
    std::uint64_t seed = 0;
};

struct ArchetypeCorpus {
    std::vector<std::vector<double>> traces;
    std::vector<int> labels;  // Archetype as int
};

/// Noisy arousal-like traces, per_archetype of each shape, with random
/// lengths and apex positions, interleaved by archetype.
ArchetypeCorpus make_archetype_corpus(const ArchetypeCorpusOptions& options);

struct FlatSegment {
    double start_s = 45.0;
    double length_s = 30.0;
};

struct WorldOptions {
    std::size_t train_sessions = 60;
    std::size_t test_sessions = 20;
    double duration_s = 120.0;
    SampleRate rate{4, 1};
    double feature_noise_sd = 0.0;
    double smoothing_s = 2.0;  // moving-average width applied to the latent arousal
    std::optional<FlatSegment> flat;
    std::uint64_t seed = 0;
};

/// Feature columns in the order they are written.
const std::vector<std::string>& world_feature_names();
/// Biography keys in the order they are written.
const std::vector<std::string>& world_biography_keys();

/// Synthetic game world. Eight logged features drive a latent arousal whose
/// response depends on the player's biography: the `thrill_seeker` trait flips
/// the sign of three features and `skill` scales two more. A session-level
/// `progress` feature follows one of the four archetypes, so GT trends form
/// clusters. `score` is an event counter that increases during short and long
/// events. GT is the smoothed latent, min-max normalised per session; with
/// `flat` set, every feature except `score` is frozen over that window (only
/// observation noise remains), no events occur, and GT is exactly constant.
Corpus make_world(const WorldOptions& options);

/// The archetype used for the progress feature of each session, aligned with
/// `make_world(options).sessions`.
std::vector<int> world_archetypes(const WorldOptions& options);

}  // namespace prefab::synth

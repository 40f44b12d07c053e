#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefab/trace.hpp"

namespace prefab {

/// Row-major T x d matrix of log-feature frames.
struct FrameMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    FrameMatrix() = default;
    FrameMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

/// One recorded task session: log features, player biography, and (for
/// training / evaluation data) the full ground-truth annotation.
struct Session {
    std::string id;
    std::string game;
    SampleRate rate;
    std::vector<std::string> feature_names;
    FrameMatrix frames;
    std::vector<std::string> biography_keys;
    std::vector<double> biography;
    std::optional<std::vector<double>> gt;  // aligned 1:1 with frames

    std::size_t length() const { return frames.rows; }
    std::ptrdiff_t feature_index(const std::string& name) const;
    std::vector<double> feature_column(std::size_t f) const;
};

/// A set of sessions with a train/test split, as written by `synth` or
/// assembled by hand.
struct Corpus {
    std::vector<Session> sessions;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;

    std::vector<const Session*> select(const std::vector<std::string>& ids) const;
    const Session* find(const std::string& id) const;
};

// On-disk layout: corpus.json lists session entries
//   {"session_id", "game", "sample_rate_hz", "features": "<csv>",
//    "biography": {..ordered..}, "gt": "<csv|jsonl>" (optional)}
// plus {"split": {"train": [...], "test": [...]}}. Paths are relative to corpus.json.
Corpus load_corpus(const std::filesystem::path& corpus_json);
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus, const std::string& config_hash = {});

/// Feature CSV: `t_s,f0,f1,...`.
void read_features_csv(const std::filesystem::path& path, Session& into);
void write_features_csv(const std::filesystem::path& path, const Session& session,
                        const std::string& config_hash = {});

}  // namespace prefab

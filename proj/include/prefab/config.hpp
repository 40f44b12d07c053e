#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "prefab/clustering.hpp"
#include "prefab/inflection.hpp"
#include "prefab/model.hpp"
#include "prefab/pairing.hpp"
#include "prefab/synth.hpp"

namespace prefab {

struct ClusterSettings {
    std::size_t k_min = 2;
    std::size_t k_max = 7;
    ClusterOptions options;
};

struct ServiceSettings {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string ui_dir;  // static annotator bundle; empty disables the mount
};

enum class ModelKind { Ordinal, Regression };

/// Everything a run depends on. Serialized canonically so its hash can tag
/// every artifact the run writes.
struct RunConfig {
    std::uint64_t seed = 0;
    ModelKind model = ModelKind::Ordinal;
    NetworkConfig network;
    PairOptions pairs;
    InflectionConfig inflection;
    ClusterSettings clustering;
    std::string rule_feature = "score";
    synth::WorldOptions world;
    ServiceSettings service;

    /// Propagates one seed to every seeded component.
    void apply_seed(std::uint64_t s);
};

nlohmann::ordered_json to_json(const RunConfig& config);
/// Strict: unknown keys, wrong types, and invalid values raise ErrorKind::Config.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

std::string sha256_hex(std::string_view data);
/// SHA-256 of the canonical JSON form.
std::string config_hash(const RunConfig& config);

std::string to_string(ModelKind kind);

}  // namespace prefab

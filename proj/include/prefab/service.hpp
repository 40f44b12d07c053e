#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefab/inflection.hpp"
#include "prefab/trace.hpp"

namespace prefab {

/// Study condition, fixed when the session is created.
enum class Condition { Full, PrefabNoPreview, PrefabPreview };

std::string to_string(Condition c);
Condition parse_condition(const std::string& name);

/// One annotation session as the service sees it. `clips[k]` is the media for
/// region k: a path (relative paths resolve against `base_dir`) or an http(s) URL.
struct SessionManifest {
    std::string session_id;
    SampleRate rate;
    std::size_t length = 0;  // samples in the whole session
    std::string features;    // feature frames path, informational
    std::string config_hash;  // of the run that produced the regions
    Condition condition = Condition::PrefabNoPreview;
    std::vector<InflectionRegion> regions;
    std::vector<std::string> clips;
    std::vector<std::optional<std::vector<double>>> traces;  // per region, once submitted
    std::optional<std::vector<double>> reconstruction;
    std::filesystem::path base_dir;

    std::size_t submitted() const;
    /// "pending", "in_progress" or "complete".
    std::string status() const;
    bool preview() const { return condition == Condition::PrefabPreview; }
    /// Checks regions against the length and the condition; a full-annotation
    /// manifest without regions gets the whole session as its single region.
    void validate_and_fill();
};

nlohmann::ordered_json to_json(const SessionManifest& m);
SessionManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
SessionManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const SessionManifest& m);

/// Builds a manifest from detected regions; clips default to
/// `clip_pattern` with {k} replaced by the region index, when given.
SessionManifest make_manifest(const std::string& session_id, SampleRate rate, std::size_t length, Condition condition,
                              const std::vector<InflectionRegion>& regions, const std::string& clip_pattern = {});

/// Thread-safe session registry. Writes to one session are serialised by its
/// own mutex; readers take an immutable snapshot without locking the writer.
class SessionStore {
public:
    enum class Outcome { Ok, NotFound, Conflict, LengthMismatch };

    struct Result {
        Outcome outcome = Outcome::Ok;
        std::string message;
        std::shared_ptr<const SessionManifest> session;
    };

    /// With a state directory every change is written to <dir>/<id>.json.
    explicit SessionStore(std::optional<std::filesystem::path> state_dir = std::nullopt);

    /// Not safe to call while requests are being served.
    void add(SessionManifest manifest);
    /// Loads every *.json manifest in `dir`.
    void load_dir(const std::filesystem::path& dir);

    std::shared_ptr<const SessionManifest> get(const std::string& id) const;
    std::vector<std::shared_ptr<const SessionManifest>> list() const;

    Result submit(const std::string& id, std::size_t region, std::vector<double> samples);
    /// Zero-baselines and interpolates the collected traces. Idempotent.
    Result complete(const std::string& id);

private:
    struct Entry {
        std::mutex write;
        std::shared_ptr<const SessionManifest> snapshot;
    };
    void persist(const SessionManifest& m) const;

    std::map<std::string, std::unique_ptr<Entry>> sessions_;
    std::optional<std::filesystem::path> state_dir_;
};

/// The reconstruction the service stores on completion, computed directly.
AnnotationTrace reconstruct_from_traces(const SessionManifest& m);

/// HTTP front end over a SessionStore, optionally hosting the annotator UI
/// bundle as static files.
class SessionServer {
public:
    SessionServer(SessionStore& store, std::string ui_dir = {});
    ~SessionServer();
    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    /// Binds the socket; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace prefab

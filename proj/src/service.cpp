#include "prefab/service.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "prefab/csv.hpp"
#include "prefab/error.hpp"
#include "prefab/interpolate.hpp"

namespace prefab {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string to_string(Condition c) {
    switch (c) {
        case Condition::Full: return "full";
        case Condition::PrefabNoPreview: return "prefab_no_preview";
        case Condition::PrefabPreview: return "prefab_preview";
    }
    return "?";
}

Condition parse_condition(const std::string& name) {
    if (name == "full") return Condition::Full;
    if (name == "prefab_no_preview") return Condition::PrefabNoPreview;
    if (name == "prefab_preview") return Condition::PrefabPreview;
    throw Error(ErrorKind::Parse, "unknown condition '" + name + "' (full, prefab_no_preview, prefab_preview)");
}

std::size_t SessionManifest::submitted() const {
    return static_cast<std::size_t>(std::count_if(traces.begin(), traces.end(), [](const auto& t) { return t.has_value(); }));
}

std::string SessionManifest::status() const {
    if (reconstruction) return "complete";
    return submitted() == 0 ? "pending" : "in_progress";
}

void SessionManifest::validate_and_fill() {
    if (session_id.empty()) throw Error(ErrorKind::Parse, "manifest without session_id");
    if (length == 0) throw Error(ErrorKind::Parse, "session " + session_id + " has length 0");
    if (condition == Condition::Full && regions.empty())
        regions.push_back({{0, static_cast<std::int64_t>(length)}, "full"});
    for (std::size_t k = 0; k < regions.size(); ++k) {
        const auto& iv = regions[k].interval;
        if (iv.begin < 0 || iv.end > static_cast<std::int64_t>(length) || iv.begin >= iv.end)
            throw Error(ErrorKind::InvalidArgument, "session " + session_id + ": region " + std::to_string(k) +
                                                        " outside the session");
        if (k > 0 && iv.begin < regions[k - 1].interval.end)
            throw Error(ErrorKind::RegionsOverlap, "session " + session_id + ": regions overlap or are unsorted");
    }
    if (clips.empty()) clips.resize(regions.size());
    if (traces.empty()) traces.resize(regions.size());
    if (clips.size() != regions.size() || traces.size() != regions.size())
        throw Error(ErrorKind::LengthMismatch, "session " + session_id + ": per-region lists differ in length");
    for (std::size_t k = 0; k < regions.size(); ++k)
        if (traces[k] && traces[k]->size() != static_cast<std::size_t>(regions[k].interval.length()))
            throw Error(ErrorKind::LengthMismatch, "session " + session_id + ": stored trace " + std::to_string(k) +
                                                       " does not match its region");
    if (reconstruction && reconstruction->size() != length)
        throw Error(ErrorKind::LengthMismatch, "session " + session_id + ": stored reconstruction length");
}

ojson to_json(const SessionManifest& m) {
    ojson j;
    j["session_id"] = m.session_id;
    j["sample_rate_hz"] = format_rate(m.rate);
    j["length"] = m.length;
    j["features"] = m.features;
    if (!m.config_hash.empty()) j["config_hash"] = m.config_hash;
    j["condition"] = to_string(m.condition);
    j["regions"] = ojson::array();
    for (std::size_t k = 0; k < m.regions.size(); ++k)
        j["regions"].push_back({{"start_s", m.rate.to_seconds(m.regions[k].interval.begin)},
                                {"end_s", m.rate.to_seconds(m.regions[k].interval.end)},
                                {"source", m.regions[k].source},
                                {"clip", k < m.clips.size() ? m.clips[k] : std::string{}}});
    j["traces"] = ojson::array();
    for (const auto& t : m.traces) j["traces"].push_back(t ? ojson(*t) : ojson(nullptr));
    j["reconstruction"] = m.reconstruction ? ojson(*m.reconstruction) : ojson(nullptr);
    return j;
}

SessionManifest manifest_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    SessionManifest m;
    m.base_dir = base_dir;
    try {
        m.session_id = j.at("session_id").get<std::string>();
        const auto& rate = j.at("sample_rate_hz");
        m.rate = rate.is_string() ? parse_rate(rate.get<std::string>()) : parse_rate(rate.dump());
        m.length = j.at("length").get<std::size_t>();
        m.features = j.value("features", std::string{});
        m.config_hash = j.value("config_hash", std::string{});
        m.condition = parse_condition(j.value("condition", std::string("prefab_no_preview")));
        for (const auto& r : j.value("regions", nlohmann::json::array())) {
            m.regions.push_back({{m.rate.to_samples(r.at("start_s").get<double>()),
                                  m.rate.to_samples(r.at("end_s").get<double>())},
                                 r.value("source", std::string{})});
            m.clips.push_back(r.value("clip", std::string{}));
        }
        if (j.contains("traces"))
            for (const auto& t : j.at("traces"))
                m.traces.push_back(t.is_null() ? std::nullopt : std::optional(t.get<std::vector<double>>()));
        if (j.contains("reconstruction") && !j.at("reconstruction").is_null())
            m.reconstruction = j.at("reconstruction").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("manifest: ") + e.what());
    }
    m.validate_and_fill();
    return m;
}

SessionManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    return manifest_from_json(j, path.parent_path());
}

void save_manifest(const fs::path& path, const SessionManifest& m) {
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out << to_json(m).dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

SessionManifest make_manifest(const std::string& session_id, SampleRate rate, std::size_t length, Condition condition,
                              const std::vector<InflectionRegion>& regions, const std::string& clip_pattern) {
    SessionManifest m;
    m.session_id = session_id;
    m.rate = rate;
    m.length = length;
    m.condition = condition;
    if (condition != Condition::Full) m.regions = regions;
    m.validate_and_fill();
    if (!clip_pattern.empty())
        for (std::size_t k = 0; k < m.clips.size(); ++k) {
            std::string clip = clip_pattern;
            if (auto pos = clip.find("{k}"); pos != std::string::npos) clip.replace(pos, 3, std::to_string(k));
            m.clips[k] = clip;
        }
    return m;
}

AnnotationTrace reconstruct_from_traces(const SessionManifest& m) {
    std::vector<AnnotatedRegion> annotated;
    annotated.reserve(m.regions.size());
    for (std::size_t k = 0; k < m.regions.size(); ++k) {
        if (!m.traces[k]) throw Error(ErrorKind::InvalidArgument, "region " + std::to_string(k) + " has no trace");
        annotated.push_back({m.regions[k].interval, *m.traces[k]});
    }
    return interpolate(annotated, m.length, m.rate);
}

// ---- store

SessionStore::SessionStore(std::optional<fs::path> state_dir) : state_dir_(std::move(state_dir)) {
    if (state_dir_) fs::create_directories(*state_dir_);
}

void SessionStore::add(SessionManifest manifest) {
    manifest.validate_and_fill();
    const auto id = manifest.session_id;
    if (sessions_.count(id)) throw Error(ErrorKind::InvalidArgument, "duplicate session id " + id);
    auto entry = std::make_unique<Entry>();
    entry->snapshot = std::make_shared<const SessionManifest>(std::move(manifest));
    sessions_.emplace(id, std::move(entry));
}

void SessionStore::load_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add(load_manifest(f));
}

std::shared_ptr<const SessionManifest> SessionStore::get(const std::string& id) const {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    return std::atomic_load(&it->second->snapshot);
}

std::vector<std::shared_ptr<const SessionManifest>> SessionStore::list() const {
    std::vector<std::shared_ptr<const SessionManifest>> out;
    for (const auto& [id, entry] : sessions_) out.push_back(std::atomic_load(&entry->snapshot));
    return out;
}

void SessionStore::persist(const SessionManifest& m) const {
    if (state_dir_) save_manifest(*state_dir_ / (m.session_id + ".json"), m);
}

SessionStore::Result SessionStore::submit(const std::string& id, std::size_t region, std::vector<double> samples) {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return {Outcome::NotFound, "unknown session " + id, nullptr};
    auto& entry = *it->second;
    std::lock_guard lock(entry.write);
    const auto current = entry.snapshot;
    if (region >= current->regions.size())
        return {Outcome::NotFound, "session " + id + " has no region " + std::to_string(region), current};
    if (current->reconstruction) return {Outcome::Conflict, "session " + id + " is already complete", current};
    if (current->traces[region])
        return {Outcome::Conflict, "region " + std::to_string(region) + " already has a trace", current};
    const auto expected = static_cast<std::size_t>(current->regions[region].interval.length());
    if (samples.size() != expected)
        return {Outcome::LengthMismatch,
                "region " + std::to_string(region) + " spans " + std::to_string(expected) + " samples, got " +
                    std::to_string(samples.size()),
                current};
    auto next = std::make_shared<SessionManifest>(*current);
    next->traces[region] = std::move(samples);
    persist(*next);
    std::atomic_store(&entry.snapshot, std::shared_ptr<const SessionManifest>(next));
    return {Outcome::Ok, {}, next};
}

SessionStore::Result SessionStore::complete(const std::string& id) {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return {Outcome::NotFound, "unknown session " + id, nullptr};
    auto& entry = *it->second;
    std::lock_guard lock(entry.write);
    const auto current = entry.snapshot;
    if (current->reconstruction) return {Outcome::Ok, {}, current};
    std::vector<std::size_t> missing;
    for (std::size_t k = 0; k < current->traces.size(); ++k)
        if (!current->traces[k]) missing.push_back(k);
    if (!missing.empty()) {
        std::string list;
        for (auto k : missing) list += (list.empty() ? "" : ", ") + std::to_string(k);
        return {Outcome::Conflict, "regions without a trace: " + list, current};
    }
    auto next = std::make_shared<SessionManifest>(*current);
    next->reconstruction = reconstruct_from_traces(*next).values;
    persist(*next);
    std::atomic_store(&entry.snapshot, std::shared_ptr<const SessionManifest>(next));
    return {Outcome::Ok, {}, next};
}

// ---- HTTP

namespace {

void send_json(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

int http_status(SessionStore::Outcome o) {
    switch (o) {
        case SessionStore::Outcome::Ok: return 200;
        case SessionStore::Outcome::NotFound: return 404;
        case SessionStore::Outcome::Conflict: return 409;
        case SessionStore::Outcome::LengthMismatch: return 422;
    }
    return 500;
}

ojson summary(const SessionManifest& m) {
    return {{"session_id", m.session_id},
            {"condition", to_string(m.condition)},
            {"sample_rate_hz", format_rate(m.rate)},
            {"length", m.length},
            {"duration_s", m.rate.to_seconds(static_cast<std::int64_t>(m.length))},
            {"regions", m.regions.size()},
            {"submitted", m.submitted()},
            {"status", m.status()}};
}

ojson regions_payload(const SessionManifest& m) {
    ojson regions = ojson::array();
    for (std::size_t k = 0; k < m.regions.size(); ++k) {
        const auto& iv = m.regions[k].interval;
        regions.push_back({{"index", k},
                           {"start_s", m.rate.to_seconds(iv.begin)},
                           {"end_s", m.rate.to_seconds(iv.end)},
                           {"samples", iv.length()},
                           {"source", m.regions[k].source},
                           {"preview", m.preview()},
                           {"has_clip", !m.clips[k].empty()},
                           {"submitted", m.traces[k].has_value()}});
    }
    return {{"session_id", m.session_id},
            {"condition", to_string(m.condition)},
            {"sample_rate_hz", format_rate(m.rate)},
            {"regions", regions}};
}

std::string media_type(const fs::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".mp4") return "video/mp4";
    if (ext == ".webm") return "video/webm";
    if (ext == ".ogg" || ext == ".ogv") return "video/ogg";
    if (ext == ".mov") return "video/quicktime";
    return "application/octet-stream";
}

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

std::optional<std::size_t> parse_index(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) return std::nullopt;
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

struct SessionServer::Impl {
    SessionStore& store;
    httplib::Server server;

    explicit Impl(SessionStore& s) : store(s) {}
};

SessionServer::SessionServer(SessionStore& store, std::string ui_dir) : impl_(std::make_unique<Impl>(store)) {
    auto& srv = impl_->server;
    auto& st = impl_->store;

    if (!ui_dir.empty() && !srv.set_mount_point("/", ui_dir))
        throw Error(ErrorKind::Io, "UI directory not found: " + ui_dir);

    srv.Get("/sessions", [&st](const httplib::Request&, httplib::Response& res) {
        ojson out = ojson::array();
        for (const auto& m : st.list()) out.push_back(summary(*m));
        send_json(res, 200, out);
    });

    srv.Get(R"(/sessions/([^/]+))", [&st](const httplib::Request& req, httplib::Response& res) {
        const auto m = st.get(req.matches[1]);
        if (!m) return send_error(res, 404, "unknown session " + std::string(req.matches[1]));
        send_json(res, 200, summary(*m));
    });

    srv.Get(R"(/sessions/([^/]+)/regions)", [&st](const httplib::Request& req, httplib::Response& res) {
        const auto m = st.get(req.matches[1]);
        if (!m) return send_error(res, 404, "unknown session " + std::string(req.matches[1]));
        send_json(res, 200, regions_payload(*m));
    });

    srv.Get(R"(/sessions/([^/]+)/regions/([^/]+)/clip)", [&st](const httplib::Request& req, httplib::Response& res) {
        const auto m = st.get(req.matches[1]);
        if (!m) return send_error(res, 404, "unknown session " + std::string(req.matches[1]));
        const auto k = parse_index(req.matches[2]);
        if (!k || *k >= m->regions.size()) return send_error(res, 404, "no region " + std::string(req.matches[2]));
        const auto& clip = m->clips[*k];
        if (clip.empty()) return send_error(res, 404, "region " + std::to_string(*k) + " has no clip");
        if (is_url(clip)) return res.set_redirect(clip);
        fs::path path(clip);
        if (path.is_relative()) path = m->base_dir / path;
        std::ifstream in(path, std::ios::binary);
        if (!in) return send_error(res, 404, "clip file missing: " + path.string());
        std::ostringstream bytes;
        bytes << in.rdbuf();
        res.status = 200;
        res.set_content(bytes.str(), media_type(path));
    });

    srv.Post(R"(/sessions/([^/]+)/regions/([^/]+)/trace)", [&st](const httplib::Request& req, httplib::Response& res) {
        const auto k = parse_index(req.matches[2]);
        if (!st.get(req.matches[1])) return send_error(res, 404, "unknown session " + std::string(req.matches[1]));
        if (!k) return send_error(res, 404, "no region " + std::string(req.matches[2]));
        std::vector<double> samples;
        try {
            const auto body = nlohmann::json::parse(req.body);
            samples = body.at("samples").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            return send_error(res, 400, std::string("body must be {\"samples\": [numbers]}: ") + e.what());
        }
        const auto r = st.submit(req.matches[1], *k, std::move(samples));
        if (r.outcome != SessionStore::Outcome::Ok) return send_error(res, http_status(r.outcome), r.message);
        send_json(res, 201, {{"session_id", r.session->session_id},
                             {"region", *k},
                             {"submitted", r.session->submitted()},
                             {"regions", r.session->regions.size()}});
    });

    srv.Post(R"(/sessions/([^/]+)/complete)", [&st](const httplib::Request& req, httplib::Response& res) {
        const auto r = st.complete(req.matches[1]);
        if (r.outcome != SessionStore::Outcome::Ok) return send_error(res, http_status(r.outcome), r.message);
        send_json(res, 200, summary(*r.session));
    });

    srv.Get(R"(/sessions/([^/]+)/reconstruction)", [&st](const httplib::Request& req, httplib::Response& res) {
        const auto m = st.get(req.matches[1]);
        if (!m) return send_error(res, 404, "unknown session " + std::string(req.matches[1]));
        if (!m->reconstruction) return send_error(res, 409, "session " + m->session_id + " is not complete");
        if (req.get_param_value("format") == "csv") {
            std::ostringstream out;
            out << "t_s,value\n";
            for (std::size_t t = 0; t < m->reconstruction->size(); ++t)
                out << csv::format_double(m->rate.to_seconds(static_cast<std::int64_t>(t))) << ','
                    << csv::format_double((*m->reconstruction)[t]) << '\n';
            res.status = 200;
            return res.set_content(out.str(), "text/csv");
        }
        send_json(res, 200, {{"session_id", m->session_id},
                             {"sample_rate_hz", format_rate(m->rate)},
                             {"values", *m->reconstruction}});
    });
}

SessionServer::~SessionServer() { stop(); }

int SessionServer::bind(const std::string& host, int port) {
    auto& srv = impl_->server;
    if (port == 0) {
        const int bound = srv.bind_to_any_port(host);
        if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host);
        return bound;
    }
    if (!srv.bind_to_port(host, port)) throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void SessionServer::listen() { impl_->server.listen_after_bind(); }

void SessionServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace prefab

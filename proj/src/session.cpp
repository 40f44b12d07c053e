#include "prefab/session.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "prefab/csv.hpp"
#include "prefab/error.hpp"

namespace prefab {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::ptrdiff_t Session::feature_index(const std::string& name) const {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    return it == feature_names.end() ? -1 : it - feature_names.begin();
}

std::vector<double> Session::feature_column(std::size_t f) const {
    std::vector<double> out(frames.rows);
    for (std::size_t t = 0; t < frames.rows; ++t) out[t] = frames.at(t, f);
    return out;
}

std::vector<const Session*> Corpus::select(const std::vector<std::string>& ids) const {
    std::vector<const Session*> out;
    for (const auto& id : ids) {
        const auto* s = find(id);
        if (!s) throw Error(ErrorKind::InvalidArgument, "unknown session id " + id);
        out.push_back(s);
    }
    return out;
}

const Session* Corpus::find(const std::string& id) const {
    for (const auto& s : sessions)
        if (s.id == id) return &s;
    return nullptr;
}

void read_features_csv(const fs::path& path, Session& into) {
    const auto table = csv::read(path);
    const auto t_col = table.column("t_s");
    if (t_col < 0) throw Error(ErrorKind::Parse, path.string() + ": missing t_s column");
    into.feature_names.clear();
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (static_cast<std::ptrdiff_t>(c) == t_col) continue;
        into.feature_names.push_back(table.header[c]);
        cols.push_back(c);
    }
    into.frames = FrameMatrix(table.rows.size(), cols.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        for (std::size_t k = 0; k < cols.size(); ++k) into.frames.at(r, k) = table.rows[r][cols[k]];
}

void write_features_csv(const fs::path& path, const Session& s, const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
    out << "t_s";
    for (const auto& n : s.feature_names) out << ',' << n;
    out << '\n';
    for (std::size_t t = 0; t < s.frames.rows; ++t) {
        out << csv::format_double(s.rate.to_seconds(static_cast<std::int64_t>(t)));
        for (std::size_t f = 0; f < s.frames.cols; ++f) out << ',' << csv::format_double(s.frames.at(t, f));
        out << '\n';
    }
}

Corpus load_corpus(const fs::path& corpus_json) {
    std::ifstream in(corpus_json);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + corpus_json.string());
    ojson doc;
    try {
        doc = ojson::parse(in);
    } catch (const ojson::exception& e) {
        throw Error(ErrorKind::Parse, corpus_json.string() + ": " + e.what());
    }
    const auto base = corpus_json.parent_path();
    Corpus corpus;
    try {
        for (const auto& entry : doc.at("sessions")) {
            Session s;
            s.id = entry.at("session_id").get<std::string>();
            s.game = entry.value("game", std::string{});
            const auto& rate = entry.at("sample_rate_hz");
            s.rate = parse_rate(rate.is_string() ? rate.get<std::string>() : csv::format_double(rate.get<double>()));
            read_features_csv(base / entry.at("features").get<std::string>(), s);
            if (entry.contains("biography")) {
                for (const auto& [key, value] : entry.at("biography").items()) {
                    s.biography_keys.push_back(key);
                    s.biography.push_back(value.get<double>());
                }
            }
            if (entry.contains("gt") && !entry.at("gt").is_null()) {
                auto gt = read_trace(base / entry.at("gt").get<std::string>(), s.rate);
                s.gt = std::move(gt.values);
            }
            corpus.sessions.push_back(std::move(s));
        }
        if (doc.contains("split")) {
            corpus.train_ids = doc.at("split").value("train", std::vector<std::string>{});
            corpus.test_ids = doc.at("split").value("test", std::vector<std::string>{});
        }
    } catch (const ojson::exception& e) {
        throw Error(ErrorKind::Parse, corpus_json.string() + ": " + e.what());
    }
    return corpus;
}

void save_corpus(const fs::path& dir, const Corpus& corpus, const std::string& config_hash) {
    fs::create_directories(dir / "sessions");
    ojson doc;
    doc["version"] = 1;
    if (!config_hash.empty()) doc["config_hash"] = config_hash;
    doc["sessions"] = ojson::array();
    for (const auto& s : corpus.sessions) {
        const std::string feat = "sessions/" + s.id + "_features.csv";
        write_features_csv(dir / feat, s, config_hash);
        ojson entry;
        entry["session_id"] = s.id;
        entry["game"] = s.game;
        entry["sample_rate_hz"] = format_rate(s.rate);
        entry["features"] = feat;
        ojson bio = ojson::object();
        for (std::size_t k = 0; k < s.biography.size(); ++k) bio[s.biography_keys[k]] = s.biography[k];
        entry["biography"] = bio;
        if (s.gt) {
            const std::string gt = "sessions/" + s.id + "_gt.csv";
            write_trace_csv(dir / gt, AnnotationTrace{s.rate, 0.0, *s.gt}, config_hash);
            entry["gt"] = gt;
        }
        doc["sessions"].push_back(entry);
    }
    doc["split"] = {{"train", corpus.train_ids}, {"test", corpus.test_ids}};
    std::ofstream out(dir / "corpus.json");
    if (!out) throw Error(ErrorKind::Io, "cannot write corpus.json in " + dir.string());
    out << doc.dump(2) << '\n';
}

}  // namespace prefab

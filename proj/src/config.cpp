#include "prefab/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "prefab/error.hpp"

namespace prefab {

using ojson = nlohmann::ordered_json;

void RunConfig::apply_seed(std::uint64_t s) {
    seed = s;
    network.seed = s;
    pairs.seed = s;
    world.seed = s;
}

std::string to_string(ModelKind kind) { return kind == ModelKind::Ordinal ? "ordinal" : "regression"; }

namespace {

std::string gradient_mode_name(GradientRule::Mode m) {
    switch (m) {
        case GradientRule::Mode::Off: return "off";
        case GradientRule::Mode::Absolute: return "absolute";
        case GradientRule::Mode::Percentile: return "percentile";
        case GradientRule::Mode::RangeFraction: return "range_fraction";
    }
    return "off";
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::Config, where + ": " + what);
}

void check_object(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    for (const auto& [key, _] : j.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            fail(where, "unknown key '" + key + "'");
}

std::uint64_t get_unsigned(const nlohmann::json& j, const char* key, std::uint64_t fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_unsigned()) fail(where, std::string(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

double get_number(const nlohmann::json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) fail(where, std::string(key) + " must be a number");
    return v.get<double>();
}

bool get_bool(const nlohmann::json& j, const char* key, bool fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_boolean()) fail(where, std::string(key) + " must be a boolean");
    return v.get<bool>();
}

std::string get_string(const nlohmann::json& j, const char* key, const std::string& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_string()) fail(where, std::string(key) + " must be a string");
    return v.get<std::string>();
}

NetworkConfig parse_network(const nlohmann::json& j) {
    check_object(j, "network",
                 {"encoder_layers", "latent_dim", "film_hidden", "aux_classes", "use_film", "use_aux", "seed",
                  "optimizer", "learning_rate", "batch_size", "epochs", "alpha", "cutpoints"});
    if (j.contains("encoder_layers")) {
        const auto& l = j.at("encoder_layers");
        if (!l.is_array() || !std::all_of(l.begin(), l.end(), [](const auto& v) { return v.is_number_unsigned(); }))
            fail("network", "encoder_layers must be an array of positive integers");
    }
    if (j.contains("cutpoints")) {
        const auto& c = j.at("cutpoints");
        if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
            fail("network", "cutpoints must be [c0, c1]");
    }
    for (const char* key : {"latent_dim", "film_hidden", "aux_classes", "seed", "batch_size", "epochs"})
        get_unsigned(j, key, 0, "network");
    for (const char* key : {"learning_rate", "alpha"}) get_number(j, key, 0, "network");
    for (const char* key : {"use_film", "use_aux"}) get_bool(j, key, false, "network");
    get_string(j, "optimizer", "adam", "network");
    try {
        return network_config_from_json(j);
    } catch (const Error& e) {
        fail("network", e.what());
    }
}

GradientRule parse_gradient(const nlohmann::json& j) {
    check_object(j, "inflection.gradient", {"mode", "value"});
    GradientRule g;
    const auto mode = get_string(j, "mode", gradient_mode_name(g.mode), "inflection.gradient");
    if (mode == "off")
        g.mode = GradientRule::Mode::Off;
    else if (mode == "absolute")
        g.mode = GradientRule::Mode::Absolute;
    else if (mode == "percentile")
        g.mode = GradientRule::Mode::Percentile;
    else if (mode == "range_fraction")
        g.mode = GradientRule::Mode::RangeFraction;
    else
        fail("inflection.gradient", "unknown mode '" + mode + "'");
    g.value = get_number(j, "value", g.value, "inflection.gradient");
    return g;
}

}  // namespace

ojson to_json(const RunConfig& c) {
    ojson j;
    j["seed"] = c.seed;
    j["model"] = to_string(c.model);
    j["network"] = to_json(c.network);
    j["pairs"] = {{"gap", c.pairs.gap}, {"eps", c.pairs.eps}, {"balance", c.pairs.balance}, {"seed", c.pairs.seed}};
    j["inflection"] = {{"half_window_s", c.inflection.half_window_s},
                       {"gradient", {{"mode", gradient_mode_name(c.inflection.gradient.mode)},
                                     {"value", c.inflection.gradient.value}}}};
    ojson window = c.clustering.options.dtw.window ? ojson(*c.clustering.options.dtw.window) : ojson(nullptr);
    j["clustering"] = {{"k_min", c.clustering.k_min},
                       {"k_max", c.clustering.k_max},
                       {"resample_length", c.clustering.options.resample_length},
                       {"max_iterations", c.clustering.options.max_iterations},
                       {"restarts", c.clustering.options.restarts},
                       {"min_silhouette", c.clustering.options.min_silhouette},
                       {"dtw_window", window}};
    j["rule_feature"] = c.rule_feature;
    ojson world = {{"train_sessions", c.world.train_sessions},
                   {"test_sessions", c.world.test_sessions},
                   {"duration_s", c.world.duration_s},
                   {"sample_rate_hz", format_rate(c.world.rate)},
                   {"feature_noise_sd", c.world.feature_noise_sd},
                   {"smoothing_s", c.world.smoothing_s},
                   {"seed", c.world.seed}};
    world["flat"] = c.world.flat ? ojson{{"start_s", c.world.flat->start_s}, {"length_s", c.world.flat->length_s}}
                                 : ojson(nullptr);
    j["world"] = world;
    j["service"] = {{"host", c.service.host}, {"port", c.service.port}, {"ui_dir", c.service.ui_dir}};
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    check_object(j, "config",
                 {"seed", "model", "network", "pairs", "inflection", "clustering", "rule_feature", "world", "service",
                  "config_hash"});
    RunConfig c;
    c.seed = get_unsigned(j, "seed", c.seed, "config");
    // a top-level seed is the default for every component; sections may override it
    c.apply_seed(c.seed);

    const auto model = get_string(j, "model", "ordinal", "config");
    if (model == "ordinal")
        c.model = ModelKind::Ordinal;
    else if (model == "regression")
        c.model = ModelKind::Regression;
    else
        fail("config", "model must be 'ordinal' or 'regression'");

    if (j.contains("network")) {
        auto net = j.at("network");
        if (net.is_object() && !net.contains("seed")) net["seed"] = c.seed;
        c.network = parse_network(net);
    }

    if (j.contains("pairs")) {
        const auto& p = j.at("pairs");
        check_object(p, "pairs", {"gap", "eps", "balance", "seed"});
        c.pairs.gap = get_unsigned(p, "gap", c.pairs.gap, "pairs");
        c.pairs.eps = get_number(p, "eps", c.pairs.eps, "pairs");
        c.pairs.balance = get_bool(p, "balance", c.pairs.balance, "pairs");
        c.pairs.seed = get_unsigned(p, "seed", c.pairs.seed, "pairs");
        if (c.pairs.gap == 0) fail("pairs", "gap must be positive");
        if (c.pairs.eps < 0.0) fail("pairs", "eps must be non-negative");
    }

    if (j.contains("inflection")) {
        const auto& f = j.at("inflection");
        check_object(f, "inflection", {"half_window_s", "gradient"});
        c.inflection.half_window_s = get_number(f, "half_window_s", c.inflection.half_window_s, "inflection");
        if (f.contains("gradient")) c.inflection.gradient = parse_gradient(f.at("gradient"));
        try {
            c.inflection.validate();
        } catch (const Error& e) {
            fail("inflection", e.what());
        }
    }

    if (j.contains("clustering")) {
        const auto& k = j.at("clustering");
        check_object(k, "clustering", {"k_min", "k_max", "resample_length", "max_iterations", "restarts", "min_silhouette",
                                           "dtw_window"});
        c.clustering.k_min = get_unsigned(k, "k_min", c.clustering.k_min, "clustering");
        c.clustering.k_max = get_unsigned(k, "k_max", c.clustering.k_max, "clustering");
        c.clustering.options.resample_length =
            get_unsigned(k, "resample_length", c.clustering.options.resample_length, "clustering");
        c.clustering.options.max_iterations =
            get_unsigned(k, "max_iterations", c.clustering.options.max_iterations, "clustering");
        c.clustering.options.restarts = get_unsigned(k, "restarts", c.clustering.options.restarts, "clustering");
        c.clustering.options.min_silhouette =
            get_number(k, "min_silhouette", c.clustering.options.min_silhouette, "clustering");
        if (k.contains("dtw_window") && !k.at("dtw_window").is_null())
            c.clustering.options.dtw.window = get_unsigned(k, "dtw_window", 0, "clustering");
        if (c.clustering.k_min < 2 || c.clustering.k_max < c.clustering.k_min)
            fail("clustering", "need 2 <= k_min <= k_max");
    }

    c.rule_feature = get_string(j, "rule_feature", c.rule_feature, "config");

    if (j.contains("world")) {
        const auto& w = j.at("world");
        check_object(w, "world",
                     {"train_sessions", "test_sessions", "duration_s", "sample_rate_hz", "feature_noise_sd",
                      "smoothing_s", "seed", "flat"});
        c.world.train_sessions = get_unsigned(w, "train_sessions", c.world.train_sessions, "world");
        c.world.test_sessions = get_unsigned(w, "test_sessions", c.world.test_sessions, "world");
        c.world.duration_s = get_number(w, "duration_s", c.world.duration_s, "world");
        if (w.contains("sample_rate_hz")) {
            const auto& r = w.at("sample_rate_hz");
            try {
                c.world.rate = r.is_string() ? parse_rate(r.get<std::string>()) : parse_rate(r.dump());
            } catch (const Error& e) {
                fail("world", e.what());
            }
        }
        c.world.feature_noise_sd = get_number(w, "feature_noise_sd", c.world.feature_noise_sd, "world");
        c.world.smoothing_s = get_number(w, "smoothing_s", c.world.smoothing_s, "world");
        c.world.seed = get_unsigned(w, "seed", c.world.seed, "world");
        if (w.contains("flat") && !w.at("flat").is_null()) {
            const auto& f = w.at("flat");
            check_object(f, "world.flat", {"start_s", "length_s"});
            synth::FlatSegment flat;
            flat.start_s = get_number(f, "start_s", flat.start_s, "world.flat");
            flat.length_s = get_number(f, "length_s", flat.length_s, "world.flat");
            c.world.flat = flat;
        }
        if (!(c.world.duration_s > 0.0)) fail("world", "duration_s must be positive");
        if (c.world.feature_noise_sd < 0.0) fail("world", "feature_noise_sd must be non-negative");
    }

    if (j.contains("service")) {
        const auto& s = j.at("service");
        check_object(s, "service", {"host", "port", "ui_dir"});
        c.service.host = get_string(s, "host", c.service.host, "service");
        const auto port = get_unsigned(s, "port", static_cast<std::uint64_t>(c.service.port), "service");
        if (port > 65535) fail("service", "port out of range");
        c.service.port = static_cast<int>(port);
        c.service.ui_dir = get_string(s, "ui_dir", c.service.ui_dir, "service");
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    auto j = to_json(config);
    j["config_hash"] = config_hash(config);
    out << j.dump(2) << '\n';
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::InvalidArgument, "SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int k = 0; k < len; ++k) {
        out.push_back(hex[digest[k] >> 4]);
        out.push_back(hex[digest[k] & 0xf]);
    }
    return out;
}

std::string config_hash(const RunConfig& config) { return sha256_hex(to_json(config).dump()); }

}  // namespace prefab

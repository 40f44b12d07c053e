#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "prefab/config.hpp"
#include "prefab/csv.hpp"
#include "prefab/error.hpp"
#include "prefab/interpolate.hpp"
#include "prefab/losses.hpp"
#include "prefab/metrics.hpp"
#include "prefab/pipeline.hpp"
#include "prefab/samplers.hpp"
#include "prefab/service.hpp"
#include "prefab/synth.hpp"

namespace prefab::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// An input file the command needs but cannot find.
struct MissingInput : std::runtime_error {
    MissingInput(const std::string& artifact, const fs::path& path)
        : std::runtime_error("missing input: " + artifact + " (" + path.string() + ")") {}
};

void require(const fs::path& path, const std::string& artifact) {
    if (!fs::exists(path)) throw MissingInput(artifact, path);
}

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

// Resolved config and run directory for one invocation.
struct Run {
    RunConfig config;
    std::string hash;
    fs::path dir;
    std::ostream* out = nullptr;

    fs::path path(const std::string& rel) const { return dir / rel; }
};

void save_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
    f << text;
}

// Config precedence: --config, then <out>/config.json, then defaults; --seed last.
// `adjust` lets a command fold its own flags into the config before hashing.
Run open_run(const Globals& g, std::ostream& out, const std::function<void(RunConfig&)>& adjust = {}) {
    Run run;
    run.out = &out;
    if (!g.config.empty()) {
        require(g.config, "config");
        run.config = load_run_config(g.config);
    } else if (!g.out.empty() && fs::exists(fs::path(g.out) / "config.json")) {
        run.config = load_run_config(fs::path(g.out) / "config.json");
    }
    if (g.seed) run.config.apply_seed(*g.seed);
    if (adjust) adjust(run.config);
    run.hash = config_hash(run.config);
    run.dir = g.out.empty() ? fs::path("runs") / run.hash.substr(0, 12) : fs::path(g.out);
    fs::create_directories(run.dir);
    save_run_config(run.dir / "config.json", run.config);
    return run;
}

fs::path corpus_path(const Run& run, const std::string& given) {
    const fs::path p = given.empty() ? run.path("corpus/corpus.json") : fs::path(given);
    require(p, "corpus");
    return p;
}

std::vector<const Session*> pick(const Corpus& corpus, const std::string& split) {
    if (split == "all" || (corpus.train_ids.empty() && corpus.test_ids.empty())) {
        std::vector<const Session*> all;
        for (const auto& s : corpus.sessions) all.push_back(&s);
        return all;
    }
    if (split == "train") return corpus.select(corpus.train_ids);
    if (split == "test") return corpus.select(corpus.test_ids);
    throw Error(ErrorKind::InvalidArgument, "unknown split '" + split + "' (train, test, all)");
}

ModelWeights load_weights(const Run& run, const std::string& given, const std::string& fallback) {
    const fs::path p = given.empty() ? run.path(fallback) : fs::path(given);
    require(p, "checkpoint");
    return load_checkpoint(p);
}

void write_region_set(const Run& run, const std::string& method, const Session& s,
                      const std::vector<TimeInterval>& regions) {
    const auto dir = run.path("regions/" + method);
    fs::create_directories(dir);
    write_regions(dir / (s.id + ".json"), tag_regions(regions, method), s.rate, run.hash);
}

std::vector<TimeInterval> intervals_of(const std::vector<InflectionRegion>& regions) {
    std::vector<TimeInterval> out;
    for (const auto& r : regions) out.push_back(r.interval);
    return out;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- commands

struct SynthOpts {
    bool flat = false;
    std::optional<double> noise;
    std::optional<std::size_t> train, test;
};

void cmd_synth(const Globals& g, const SynthOpts& o, std::ostream& out) {
    const auto run = open_run(g, out, [&](RunConfig& c) {
        if (o.flat) c.world.flat = synth::FlatSegment{};
        if (o.noise) c.world.feature_noise_sd = *o.noise;
        if (o.train) c.world.train_sessions = *o.train;
        if (o.test) c.world.test_sessions = *o.test;
    });
    const auto corpus = synth::make_world(run.config.world);
    save_corpus(run.path("corpus"), corpus, run.hash);
    out << "synth: " << corpus.sessions.size() << " sessions (" << corpus.train_ids.size() << " train, "
        << corpus.test_ids.size() << " test) -> " << run.path("corpus/corpus.json").string() << '\n';
}

void cmd_ingest(const Globals& g, const std::string& corpus_arg, std::ostream& out) {
    const auto run = open_run(g, out);
    const auto corpus = load_corpus(corpus_path(run, corpus_arg));
    ojson report;
    report["config_hash"] = run.hash;
    report["sessions"] = ojson::array();
    std::vector<const Session*> with_gt;
    for (const auto& s : corpus.sessions) {
        if (s.gt && s.gt->size() != s.length())
            throw Error(ErrorKind::LengthMismatch, "session " + s.id + ": GT has " + std::to_string(s.gt->size()) +
                                                       " samples, features have " + std::to_string(s.length()));
        report["sessions"].push_back({{"session_id", s.id},
                                      {"samples", s.length()},
                                      {"duration_s", s.rate.to_seconds(static_cast<std::int64_t>(s.length()))},
                                      {"sample_rate_hz", format_rate(s.rate)},
                                      {"features", s.feature_names.size()},
                                      {"biography", s.biography_keys},
                                      {"has_gt", s.gt.has_value()}});
        if (s.gt) with_gt.push_back(&s);
    }
    report["train"] = corpus.train_ids;
    report["test"] = corpus.test_ids;
    save_text(run.path("ingest.json"), report.dump(2) + "\n");
    if (!with_gt.empty()) {
        const auto ranking = rank_features(with_gt);
        write_feature_ranking_csv(run.path("feature_ranking.csv"), ranking, run.hash);
        if (!ranking.empty())
            out << "ingest: strongest feature " << ranking.front().feature << " (r = " << std::setprecision(3)
                << ranking.front().r << ")\n";
    }
    out << "ingest: " << corpus.sessions.size() << " sessions, " << with_gt.size() << " with GT\n";
}

void cmd_cluster(const Globals& g, const std::string& corpus_arg, std::ostream& out) {
    const auto run = open_run(g, out);
    const auto corpus = load_corpus(corpus_path(run, corpus_arg));
    const auto sessions = pick(corpus, "train");
    const auto sel = cluster_sessions(sessions, run.config.clustering, run.config.seed);
    std::vector<std::string> ids;
    for (const auto* s : sessions) ids.push_back(s->id);
    auto report = cluster_report(sel, ids);
    report["config_hash"] = run.hash;
    save_text(run.path("clusters.json"), report.dump(2) + "\n");
    out << "cluster: k = " << sel.chosen.k << " (silhouette " << std::setprecision(3) << sel.chosen.silhouette
        << (sel.structured ? "" : ", no trend structure") << ")\n";
}

struct TrainOpts {
    std::string corpus;
    bool verbose = false;
};

void train_into(const Run& run, const std::vector<const Session*>& sessions, const std::string& checkpoint,
                const std::string& log_name, bool verbose, std::ostream& out) {
    RunConfig config = run.config;
    const auto fitted = fit_model(sessions, config);
    if (verbose)
        for (const auto& e : fitted.train.log) out << "epoch " << e.epoch << " loss " << e.loss << '\n';
    save_checkpoint(run.path(checkpoint), fitted.train.weights, run.hash);
    write_train_log(run.path(log_name), fitted.train, run.hash);
    if (config.network.use_aux) {
        std::vector<std::string> ids;
        for (const auto* s : sessions) ids.push_back(s->id);
        auto report = cluster_report(fitted.clusters, ids);
        report["config_hash"] = run.hash;
        save_text(run.path("clusters.json"), report.dump(2) + "\n");
    }
    out << "train: " << fitted.train.loss_path << " model, " << fitted.train.log.size() << " epochs, final loss "
        << std::setprecision(6) << (fitted.train.log.empty() ? 0.0 : fitted.train.log.back().loss) << " -> "
        << run.path(checkpoint).string() << '\n';
}

void cmd_train(const Globals& g, const TrainOpts& o, std::ostream& out) {
    const auto run = open_run(g, out);
    const auto corpus = load_corpus(corpus_path(run, o.corpus));
    const bool regression = run.config.model == ModelKind::Regression;
    train_into(run, pick(corpus, "train"), regression ? "checkpoint_regression.json" : "checkpoint.json",
               regression ? "train_log_regression.jsonl" : "train_log.jsonl", o.verbose, out);
}

struct SplitOpts {
    std::string corpus;
    std::string split = "test";
    std::string checkpoint;
};

void cmd_reconstruct(const Globals& g, const SplitOpts& o, std::ostream& out) {
    const auto run = open_run(g, out);
    const auto corpus = load_corpus(corpus_path(run, o.corpus));
    const auto weights = load_weights(run, o.checkpoint, "checkpoint.json");
    fs::create_directories(run.path("traces/predicted"));
    std::size_t n = 0;
    for (const auto* s : pick(corpus, o.split)) {
        write_trace_csv(run.path("traces/predicted/" + s->id + ".csv"),
                        AnnotationTrace{s->rate, 0.0, predict_trace(*s, weights)}, run.hash);
        ++n;
    }
    out << "reconstruct: " << n << " predicted traces -> " << run.path("traces/predicted").string() << '\n';
}

struct DetectOpts : SplitOpts {
    std::string source = "model";
};

void cmd_detect(const Globals& g, const DetectOpts& o, std::ostream& out) {
    const auto run = open_run(g, out);
    const auto corpus = load_corpus(corpus_path(run, o.corpus));
    const auto sessions = pick(corpus, o.split);
    std::size_t total = 0;
    if (o.source == "gt") {
        for (const auto* s : sessions) {
            const auto r = gt_regions(*s, run.config.inflection);
            write_region_set(run, "gt", *s, r);
            total += r.size();
        }
    } else if (o.source == "model") {
        const auto weights = load_weights(run, o.checkpoint, "checkpoint.json");
        for (const auto* s : sessions) {
            const auto r = model_regions(*s, weights, run.config.inflection);
            write_region_set(run, "prefab", *s, r);
            total += r.size();
        }
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown source '" + o.source + "' (model, gt)");
    }
    out << "detect: " << total << " regions over " << sessions.size() << " sessions\n";
}

struct SampleOpts : SplitOpts {
    std::string method;
    std::optional<double> count;
    bool verbose = false;
};

void cmd_sample(const Globals& g, const SampleOpts& o, std::ostream& out) {
    const bool regression = o.method == "regression";
    const auto run = open_run(g, out);
    const auto corpus = load_corpus(corpus_path(run, o.corpus));
    const auto sessions = pick(corpus, o.split);
    if (regression) {
        // the cardinal baseline: same network, squared error, then the same detector
        Run reg = run;
        reg.config.model = ModelKind::Regression;
        fs::path ckpt = o.checkpoint.empty() ? run.path("checkpoint_regression.json") : fs::path(o.checkpoint);
        if (!o.checkpoint.empty()) require(ckpt, "checkpoint");
        if (!fs::exists(ckpt)) train_into(reg, pick(corpus, "train"), "checkpoint_regression.json",
                                          "train_log_regression.jsonl", o.verbose, out);
        const auto weights = load_checkpoint(ckpt);
        std::size_t total = 0;
        for (const auto* s : sessions) {
            const auto r = model_regions(*s, weights, run.config.inflection);
            write_region_set(run, "regression", *s, r);
            total += r.size();
        }
        out << "sample regression: " << total << " regions over " << sessions.size() << " sessions\n";
        return;
    }
    double mean_count = 0.0;
    if (o.method != "rule") mean_count = o.count ? *o.count : mean_gt_inflections(pick(corpus, "train"), run.config.inflection);
    std::size_t total = 0;
    for (std::size_t k = 0; k < sessions.size(); ++k) {
        const auto r = sampler_regions(o.method, *sessions[k], mean_count, run.config, run.config.seed * 1000003 + k);
        write_region_set(run, o.method, *sessions[k], r);
        total += r.size();
    }
    out << "sample " << o.method << ": " << total << " regions over " << sessions.size() << " sessions";
    if (o.method != "rule") out << " (" << round_count(mean_count) << " points each)";
    out << '\n';
}

struct InterpolateOpts {
    std::string manifest;
    std::string regions;
    std::string region_traces;
    std::optional<std::size_t> length;
    std::string rate = "4";
    std::string output;
};

void cmd_interpolate(const Globals& g, const InterpolateOpts& o, std::ostream& out) {
    const auto run = open_run(g, out);
    AnnotationTrace result;
    if (!o.manifest.empty()) {
        require(o.manifest, "manifest");
        result = reconstruct_from_traces(load_manifest(o.manifest));
    } else {
        if (o.regions.empty() || o.region_traces.empty() || !o.length)
            throw Error(ErrorKind::InvalidArgument, "interpolate needs --manifest or --regions, --region-traces and --length");
        require(o.regions, "regions");
        require(o.region_traces, "region traces");
        const auto rate = parse_rate(o.rate);
        const auto regions = read_regions(o.regions, rate);
        nlohmann::json traces;
        try {
            traces = nlohmann::json::parse(read_text(o.region_traces));
            if (traces.is_object()) traces = traces.at("traces");
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, o.region_traces + ": " + e.what());
        }
        if (traces.size() != regions.size())
            throw Error(ErrorKind::LengthMismatch, std::to_string(regions.size()) + " regions but " +
                                                       std::to_string(traces.size()) + " region traces");
        std::vector<AnnotatedRegion> annotated;
        for (std::size_t k = 0; k < regions.size(); ++k)
            annotated.push_back({regions[k].interval, traces[k].get<std::vector<double>>()});
        result = interpolate(annotated, *o.length, rate);
    }
    const fs::path dest = o.output.empty() ? run.path("traces/reconstruction.csv") : fs::path(o.output);
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    write_trace_csv(dest, result, run.hash);
    out << "interpolate: " << result.size() << " samples -> " << dest.string() << '\n';
}

struct EvaluateOpts {
    std::string corpus;
    std::string split = "test";
    std::vector<std::string> methods;
    std::string gt_regions;
    std::string pred_regions;
    std::optional<std::size_t> length;
    std::string rate = "4";
};

void print_summary(std::ostream& out, const std::vector<MethodSummary>& summary) {
    out << std::left << std::setw(12) << "method" << std::setw(16) << "F1" << std::setw(16) << "TE" << std::setw(8)
        << "dTE" << std::setw(16) << "CCC" << "Spearman\n";
    for (const auto& m : summary) {
        std::ostringstream dte;
        dte << std::fixed << std::setprecision(3) << m.delta_te;
        out << std::setw(12) << m.method << std::setw(16) << format_mean_sd(m.f1, 3) << std::setw(16)
            << format_mean_sd(m.te, 3) << std::setw(8) << dte.str() << std::setw(16)
            << (m.ccc.n ? format_mean_sd(m.ccc, 3) : "-") << (m.spearman.n ? format_mean_sd(m.spearman, 3) : "-")
            << '\n';
    }
}

void cmd_evaluate(const Globals& g, const EvaluateOpts& o, std::ostream& out) {
    const auto run = open_run(g, out);
    std::vector<EvalRow> rows;
    if (!o.gt_regions.empty() || !o.pred_regions.empty()) {
        // direct comparison of two region files
        require(o.gt_regions, "GT regions");
        require(o.pred_regions, "predicted regions");
        if (!o.length) throw Error(ErrorKind::InvalidArgument, "--length is required with --gt-regions");
        const auto rate = parse_rate(o.rate);
        const auto gt = intervals_of(read_regions(o.gt_regions, rate));
        const auto pred = intervals_of(read_regions(o.pred_regions, rate));
        EvalRow row;
        row.session = fs::path(o.pred_regions).stem().string();
        row.method = "input";
        row.f1 = region_f1(gt, pred);
        row.te = time_efficiency(pred, *o.length);
        row.gt_te = time_efficiency(gt, *o.length);
        rows.push_back(row);
    } else {
        const auto corpus = load_corpus(corpus_path(run, o.corpus));
        const auto sessions = pick(corpus, o.split);
        std::vector<std::string> methods = o.methods;
        if (methods.empty()) {
            for (const char* m : {"prefab", "regression", "random", "uniform", "rule"})
                if (fs::is_directory(run.path(std::string("regions/") + m))) methods.push_back(m);
        }
        if (methods.empty()) throw MissingInput("region sets", run.path("regions"));
        for (const auto& m : methods) {
            for (const auto* s : sessions) {
                const auto file = run.path("regions/" + m + "/" + s->id + ".json");
                require(file, "regions for method " + m);
                const auto pred = intervals_of(read_regions(file, s->rate));
                rows.push_back(evaluate_method(*s, m, pred, run.config.inflection));
            }
        }
        ojson temporal_json = ojson::object();
        for (const auto& m : methods) {
            std::vector<TemporalStats> stats;
            for (const auto* s : sessions) {
                const auto pred = intervals_of(read_regions(run.path("regions/" + m + "/" + s->id + ".json"), s->rate));
                stats.push_back(temporal_characteristics(pred, s->length(), s->rate));
            }
            const auto t = summarize_temporal(stats);
            temporal_json[m] = {{"clips", format_mean_sd(t.clip_count)},
                                {"total_s", format_mean_sd(t.total_s)},
                                {"mean_s", format_mean_sd(t.mean_s)},
                                {"short_clips", format_mean_sd(t.short_count)},
                                {"te", format_mean_sd(t.te)},
                                {"sessions_te_over_half", t.sessions_te_over_half},
                                {"sessions", t.sessions}};
        }
        ojson doc{{"config_hash", run.hash}, {"temporal", temporal_json}};
        save_text(run.path("temporal.json"), doc.dump(2) + "\n");
    }
    const auto summary = summarize(rows);
    write_report_csv(run.path("report.csv"), rows, run.hash);
    write_summary_csv(run.path("summary.csv"), summary, run.hash);
    save_text(run.path("report.json"), report_json(rows, summary, run.hash) + "\n");
    print_summary(out, summary);
}

struct CurvesOpts {
    std::string cuts;
    double min = -8.0;
    double max = 8.0;
    double step = 0.05;
    std::string output;
};

void cmd_curves(const Globals& g, const CurvesOpts& o, std::ostream& out) {
    const auto run = open_run(g, out);
    loss::Cutpoints cuts = run.config.network.cuts;
    if (!o.cuts.empty()) {
        const auto parts = csv::split(o.cuts);
        try {
            if (parts.size() != 2) throw std::invalid_argument("two values");
            cuts = {std::stod(parts[0]), std::stod(parts[1])};
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidArgument, "--cuts expects two numbers, e.g. -3,3");
        }
    }
    cuts.validate();
    if (!(o.step > 0) || !(o.max > o.min)) throw Error(ErrorKind::InvalidArgument, "need min < max and step > 0");
    std::ostringstream csvtext;
    csvtext << "# config_hash=" << run.hash << '\n' << "p_ij,bce,p0,p1,p2\n";
    const auto n = static_cast<std::size_t>(std::floor((o.max - o.min) / o.step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) {
        const double p = o.min + static_cast<double>(k) * o.step;
        const auto probs = loss::oce_probs(p, cuts);
        csvtext << csv::format_double(p) << ',' << csv::format_double(loss::bce_prob(p)) << ','
                << csv::format_double(probs.p0) << ',' << csv::format_double(probs.p1) << ','
                << csv::format_double(probs.p2) << '\n';
    }
    if (o.output.empty())
        out << csvtext.str();
    else
        save_text(o.output, csvtext.str());
}

struct ManifestOpts : SplitOpts {
    std::string source = "prefab";
    std::string condition = "prefab_no_preview";
    std::string clip_pattern;
};

void cmd_manifest(const Globals& g, const ManifestOpts& o, std::ostream& out) {
    const auto run = open_run(g, out);
    const auto corpus = load_corpus(corpus_path(run, o.corpus));
    const auto condition = parse_condition(o.condition);
    const auto dir = run.path("sessions");
    fs::create_directories(dir);
    std::size_t n = 0;
    for (const auto* s : pick(corpus, o.split)) {
        std::vector<InflectionRegion> regions;
        if (condition != Condition::Full) {
            const auto file = run.path("regions/" + o.source + "/" + s->id + ".json");
            require(file, "regions for " + s->id);
            regions = read_regions(file, s->rate);
        }
        std::string pattern = o.clip_pattern;
        if (auto pos = pattern.find("{id}"); pos != std::string::npos) pattern.replace(pos, 4, s->id);
        auto m = make_manifest(s->id, s->rate, s->length(), condition, regions, pattern);
        m.features = s->id + "_features.csv";
        m.config_hash = run.hash;
        save_manifest(dir / (s->id + ".json"), m);
        ++n;
    }
    out << "manifest: " << n << " sessions (" << o.condition << ") -> " << dir.string() << '\n';
}

struct ServeOpts {
    std::string sessions;
    std::string host;
    std::optional<int> port;
    std::string ui;
    std::string state;
};

void cmd_serve(const Globals& g, const ServeOpts& o, std::ostream& out) {
    const auto run = open_run(g, out);
    const fs::path sessions = o.sessions.empty() ? run.path("sessions") : fs::path(o.sessions);
    require(sessions, "session manifests");
    const auto host = o.host.empty() ? run.config.service.host : o.host;
    const int port = o.port ? *o.port : run.config.service.port;
    const auto ui = o.ui.empty() ? run.config.service.ui_dir : o.ui;
    if (!ui.empty()) require(ui, "UI bundle");
    // with a state directory, completed work survives restarts; it is read back first
    std::optional<fs::path> state;
    if (!o.state.empty()) state = fs::path(o.state);
    SessionStore store(state);
    store.load_dir(state && !fs::is_empty(*state) ? *state : sessions);
    SessionServer server(store, ui);
    const int bound = server.bind(host, port);
    out << "serve: " << store.list().size() << " sessions on http://" << host << ':' << bound << '\n' << std::flush;
    server.listen();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Low-budget retrospective self-annotation pipeline", "prefab"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Run config (JSON)");
    app.add_option("--seed", g.seed, "Seed for every seeded component");
    app.add_option("--out", g.out, "Run directory (default runs/<config hash>)");

    SynthOpts synth_o;
    auto* synth = app.add_subcommand("synth", "Generate the synthetic game world corpus");
    synth->add_flag("--flat", synth_o.flat, "Insert a flat 30 s segment at 45 s");
    synth->add_option("--noise", synth_o.noise, "Feature observation noise sd");
    synth->add_option("--train", synth_o.train, "Training sessions");
    synth->add_option("--test", synth_o.test, "Test sessions");

    std::string ingest_corpus;
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus and rank features by delta correlation");
    ingest->add_option("--corpus", ingest_corpus, "corpus.json");

    std::string cluster_corpus;
    auto* cluster = app.add_subcommand("cluster", "Cluster training GT traces into trend groups");
    cluster->add_option("--corpus", cluster_corpus, "corpus.json");

    TrainOpts train_o;
    auto* train = app.add_subcommand("train", "Train the preference model");
    train->add_option("--corpus", train_o.corpus, "corpus.json");
    train->add_flag("-v,--verbose", train_o.verbose, "Print per-epoch loss");

    auto add_split = [](CLI::App* cmd, SplitOpts& o) {
        cmd->add_option("--corpus", o.corpus, "corpus.json");
        cmd->add_option("--split", o.split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
        cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
    };

    SplitOpts recon_o;
    auto* recon = app.add_subcommand("reconstruct", "Predict utility traces with a trained model");
    add_split(recon, recon_o);

    DetectOpts detect_o;
    auto* detect = app.add_subcommand("detect", "Detect inflection regions on model output or GT");
    add_split(detect, detect_o);
    detect->add_option("--source", detect_o.source, "model or gt")->check(CLI::IsMember({"model", "gt"}));

    SampleOpts sample_o;
    auto* sample = app.add_subcommand("sample", "Baseline region samplers");
    sample->add_option("method", sample_o.method, "random, uniform, rule or regression")
        ->required()
        ->check(CLI::IsMember({"random", "uniform", "rule", "regression"}));
    add_split(sample, sample_o);
    sample->add_option("--count", sample_o.count, "Points per session (default: mean GT inflection count)");
    sample->add_flag("-v,--verbose", sample_o.verbose, "Print per-epoch loss when training");

    InterpolateOpts interp_o;
    auto* interp = app.add_subcommand("interpolate", "Rebuild a full trace from region traces");
    interp->add_option("--manifest", interp_o.manifest, "Session manifest with collected traces");
    interp->add_option("--regions", interp_o.regions, "Regions JSON");
    interp->add_option("--region-traces", interp_o.region_traces, "JSON array of per-region sample arrays");
    interp->add_option("--length", interp_o.length, "Session length in samples");
    interp->add_option("--rate", interp_o.rate, "Sample rate in Hz");
    interp->add_option("--output", interp_o.output, "Output CSV");

    EvaluateOpts eval_o;
    auto* eval = app.add_subcommand("evaluate", "Score region sets against GT");
    eval->add_option("--corpus", eval_o.corpus, "corpus.json");
    eval->add_option("--split", eval_o.split, "train, test or all");
    eval->add_option("--methods", eval_o.methods, "Methods to compare")->delimiter(',');
    eval->add_option("--gt-regions", eval_o.gt_regions, "Compare two region files directly");
    eval->add_option("--pred-regions", eval_o.pred_regions, "Predicted regions file");
    eval->add_option("--length", eval_o.length, "Session length in samples (direct mode)");
    eval->add_option("--rate", eval_o.rate, "Sample rate in Hz (direct mode)");

    CurvesOpts curves_o;
    auto* curves = app.add_subcommand("curves", "BCE and OCE probability curves as CSV");
    curves->add_option("--cuts", curves_o.cuts, "Cutpoints c0,c1");
    curves->add_option("--min", curves_o.min, "Smallest p_ij");
    curves->add_option("--max", curves_o.max, "Largest p_ij");
    curves->add_option("--step", curves_o.step, "Grid step");
    curves->add_option("--output", curves_o.output, "Output CSV (default stdout)");

    ManifestOpts manifest_o;
    auto* manifest = app.add_subcommand("manifest", "Write annotation session manifests for the service");
    add_split(manifest, manifest_o);
    manifest->add_option("--source", manifest_o.source, "Region set to annotate");
    manifest->add_option("--condition", manifest_o.condition, "full, prefab_no_preview or prefab_preview")
        ->check(CLI::IsMember({"full", "prefab_no_preview", "prefab_preview"}));
    manifest->add_option("--clip-pattern", manifest_o.clip_pattern, "Clip path with {id} and {k} placeholders");

    ServeOpts serve_o;
    auto* serve = app.add_subcommand("serve", "Run the annotation session service");
    serve->add_option("--sessions", serve_o.sessions, "Directory of session manifests");
    serve->add_option("--host", serve_o.host, "Bind address");
    serve->add_option("--port", serve_o.port, "Port (0 picks a free one)");
    serve->add_option("--ui", serve_o.ui, "Annotator UI bundle directory");
    serve->add_option("--state", serve_o.state, "Directory that keeps collected traces");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*synth) cmd_synth(g, synth_o, out);
        else if (*ingest) cmd_ingest(g, ingest_corpus, out);
        else if (*cluster) cmd_cluster(g, cluster_corpus, out);
        else if (*train) cmd_train(g, train_o, out);
        else if (*recon) cmd_reconstruct(g, recon_o, out);
        else if (*detect) cmd_detect(g, detect_o, out);
        else if (*sample) cmd_sample(g, sample_o, out);
        else if (*interp) cmd_interpolate(g, interp_o, out);
        else if (*eval) cmd_evaluate(g, eval_o, out);
        else if (*curves) cmd_curves(g, curves_o, out);
        else if (*manifest) cmd_manifest(g, manifest_o, out);
        else if (*serve) cmd_serve(g, serve_o, out);
    } catch (const MissingInput& e) {
        err << "error: " << e.what() << '\n';
        return kMissingInput;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        if (e.kind() == ErrorKind::Config) return kConfigError;
        if (e.kind() == ErrorKind::Io) return kMissingInput;
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}

}  // namespace prefab::cli

#include "prefab/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "prefab/error.hpp"
#include "prefab/rng.hpp"

namespace prefab {

using ojson = nlohmann::ordered_json;

void NetworkConfig::validate() const {
    if (latent_dim == 0) throw Error(ErrorKind::InvalidArgument, "latent_dim must be positive");
    if (aux_classes < 2) throw Error(ErrorKind::InvalidArgument, "aux_classes must be at least 2");
    if (batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch_size must be positive");
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning_rate must be positive");
    if (!(alpha >= 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be non-negative");
    for (auto w : encoder_layers)
        if (w == 0) throw Error(ErrorKind::InvalidArgument, "encoder layer widths must be positive");
    cuts.validate();
}

ojson to_json(const NetworkConfig& c) {
    ojson j;
    j["encoder_layers"] = c.encoder_layers;
    j["latent_dim"] = c.latent_dim;
    j["film_hidden"] = c.film_hidden;
    j["aux_classes"] = c.aux_classes;
    j["use_film"] = c.use_film;
    j["use_aux"] = c.use_aux;
    j["seed"] = c.seed;
    j["optimizer"] = c.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["alpha"] = c.alpha;
    j["cutpoints"] = {c.cuts.c0, c.cuts.c1};
    return j;
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
    NetworkConfig c;
    try {
        c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
        c.latent_dim = j.value("latent_dim", c.latent_dim);
        c.film_hidden = j.value("film_hidden", c.film_hidden);
        c.aux_classes = j.value("aux_classes", c.aux_classes);
        c.use_film = j.value("use_film", c.use_film);
        c.use_aux = j.value("use_aux", c.use_aux);
        c.seed = j.value("seed", c.seed);
        const auto opt = j.value("optimizer", std::string("adam"));
        if (opt == "adam")
            c.optimizer = OptimizerKind::Adam;
        else if (opt == "sgd")
            c.optimizer = OptimizerKind::Sgd;
        else
            throw Error(ErrorKind::InvalidArgument, "unknown optimizer '" + opt + "'");
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.epochs = j.value("epochs", c.epochs);
        c.alpha = j.value("alpha", c.alpha);
        if (j.contains("cutpoints")) {
            const auto cuts = j.at("cutpoints").get<std::vector<double>>();
            if (cuts.size() != 2) throw Error(ErrorKind::InvalidArgument, "cutpoints must have two entries");
            c.cuts = {cuts[0], cuts[1]};
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("network config: ") + e.what());
    }
    c.validate();
    return c;
}

Architecture Architecture::build(const NetworkConfig& config, std::size_t frame_dim, std::size_t bio_dim) {
    config.validate();
    Architecture a;
    a.frame_dim = frame_dim;
    a.bio_dim = bio_dim;
    a.input_dim = kWindowFrames * frame_dim;
    std::size_t offset = 0;
    auto add = [&offset](std::size_t in, std::size_t out) {
        DenseShape d{in, out, offset};
        offset += d.size();
        return d;
    };
    std::size_t width = a.input_dim;
    for (auto w : config.encoder_layers) {
        a.encoder.push_back(add(width, w));
        width = w;
    }
    a.encoder.push_back(add(width, config.latent_dim));
    if (config.use_film) {
        if (config.film_hidden > 0) {
            a.film.push_back(add(bio_dim, config.film_hidden));
            a.film.push_back(add(config.film_hidden, 2 * config.latent_dim));
        } else {
            a.film.push_back(add(bio_dim, 2 * config.latent_dim));
        }
    }
    a.main_head = add(config.latent_dim, 1);
    a.aux_head = add(config.latent_dim, config.aux_classes);
    a.param_count = offset;
    return a;
}

ModelWeights init_weights(const NetworkConfig& config, std::size_t frame_dim, std::size_t bio_dim) {
    ModelWeights w;
    w.config = config;
    w.arch = Architecture::build(config, frame_dim, bio_dim);
    w.input_mean.assign(frame_dim, 0.0);
    w.input_scale.assign(frame_dim, 1.0);
    w.params.assign(w.arch.param_count, 0.0);

    Rng rng(config.seed);
    auto fill = [&](const DenseShape& d) {
        if (d.in == 0) return;
        const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
        for (std::size_t k = 0; k < d.in * d.out; ++k) w.params[d.weight_offset() + k] = rng.uniform(-bound, bound);
    };
    for (const auto& d : w.arch.encoder) fill(d);
    for (const auto& d : w.arch.film) fill(d);
    fill(w.arch.main_head);
    fill(w.arch.aux_head);
    return w;
}

void fit_standardization(ModelWeights& weights, std::span<const Session* const> sessions) {
    const std::size_t d = weights.arch.frame_dim;
    std::vector<double> sum(d, 0.0), sq(d, 0.0);
    double n = 0.0;
    for (const auto* s : sessions) {
        if (s->frames.cols != d) throw Error(ErrorKind::DimensionMismatch, "session " + s->id + " frame width");
        for (std::size_t t = 0; t < s->frames.rows; ++t)
            for (std::size_t f = 0; f < d; ++f) sum[f] += s->frames.at(t, f);
        n += static_cast<double>(s->frames.rows);
    }
    if (n == 0.0) return;
    for (std::size_t f = 0; f < d; ++f) weights.input_mean[f] = sum[f] / n;
    for (const auto* s : sessions)
        for (std::size_t t = 0; t < s->frames.rows; ++t)
            for (std::size_t f = 0; f < d; ++f) {
                const double dv = s->frames.at(t, f) - weights.input_mean[f];
                sq[f] += dv * dv;
            }
    for (std::size_t f = 0; f < d; ++f) {
        const double sd = std::sqrt(sq[f] / n);
        weights.input_scale[f] = sd > 1e-12 ? sd : 1.0;
    }
}

namespace {

// out = W in + b
void dense(const std::vector<double>& params, const DenseShape& d, std::span<const double> in, std::span<double> out) {
    const double* w = params.data() + d.weight_offset();
    const double* b = params.data() + d.bias_offset();
    for (std::size_t o = 0; o < d.out; ++o) {
        double acc = b[o];
        const double* row = w + o * d.in;
        for (std::size_t i = 0; i < d.in; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

// grad_W += d_out ⊗ in, grad_b += d_out; optionally d_in = Wᵀ d_out
void dense_backward(const std::vector<double>& params, const DenseShape& d, std::span<const double> in,
                    std::span<const double> d_out, std::span<double> grad, std::span<double> d_in) {
    double* gw = grad.data() + d.weight_offset();
    double* gb = grad.data() + d.bias_offset();
    for (std::size_t o = 0; o < d.out; ++o) {
        const double g = d_out[o];
        gb[o] += g;
        double* row = gw + o * d.in;
        for (std::size_t i = 0; i < d.in; ++i) row[i] += g * in[i];
    }
    if (d_in.empty()) return;
    std::fill(d_in.begin(), d_in.end(), 0.0);
    const double* w = params.data() + d.weight_offset();
    for (std::size_t o = 0; o < d.out; ++o) {
        const double g = d_out[o];
        const double* row = w + o * d.in;
        for (std::size_t i = 0; i < d.in; ++i) d_in[i] += row[i] * g;
    }
}

void check_segment(const FeatureSegment& s, const ModelWeights& w) {
    if (s.frame_dim != w.arch.frame_dim || s.frames.size() != w.arch.input_dim)
        throw Error(ErrorKind::DimensionMismatch, "segment has frame width " + std::to_string(s.frame_dim) +
                                                      ", model expects " + std::to_string(w.arch.frame_dim));
    if (s.biography.size() != w.arch.bio_dim)
        throw Error(ErrorKind::DimensionMismatch, "biography has " + std::to_string(s.biography.size()) +
                                                      " entries, model expects " + std::to_string(w.arch.bio_dim));
}

}  // namespace

namespace film {

void generate(const ModelWeights& w, std::span<const double> bio, Activations& act) {
    const auto& layers = w.arch.film;
    const std::size_t L = w.config.latent_dim;
    std::vector<double> out(2 * L);
    if (layers.size() == 2) {
        act.film_hidden.resize(layers[0].out);
        dense(w.params, layers[0], bio, act.film_hidden);
        for (auto& v : act.film_hidden) v = std::tanh(v);
        dense(w.params, layers[1], act.film_hidden, out);
    } else {
        act.film_hidden.clear();
        dense(w.params, layers[0], bio, out);
    }
    act.gamma.resize(L);
    act.beta.resize(L);
    for (std::size_t k = 0; k < L; ++k) {
        act.gamma[k] = 1.0 + out[k];
        act.beta[k] = out[L + k];
    }
}

void backward(const ModelWeights& w, std::span<const double> bio, const Activations& act, std::span<const double> z,
              std::span<const double> d_latent, std::span<double> grad, std::span<double> d_z) {
    const auto& layers = w.arch.film;
    const std::size_t L = w.config.latent_dim;
    std::vector<double> d_out(2 * L);
    for (std::size_t k = 0; k < L; ++k) {
        d_z[k] = d_latent[k] * act.gamma[k];
        d_out[k] = d_latent[k] * z[k];
        d_out[L + k] = d_latent[k];
    }
    if (layers.size() == 2) {
        std::vector<double> d_hidden(layers[0].out);
        dense_backward(w.params, layers[1], act.film_hidden, d_out, grad, d_hidden);
        for (std::size_t k = 0; k < d_hidden.size(); ++k)
            d_hidden[k] *= 1.0 - act.film_hidden[k] * act.film_hidden[k];
        dense_backward(w.params, layers[0], bio, d_hidden, grad, {});
    } else {
        dense_backward(w.params, layers[0], bio, d_out, grad, {});
    }
}

}  // namespace film

void forward(const FeatureSegment& segment, const ModelWeights& w, Activations& act) {
    check_segment(segment, w);
    const auto& arch = w.arch;
    const std::size_t d = arch.frame_dim;

    act.input.resize(arch.input_dim);
    for (std::size_t k = 0; k < arch.input_dim; ++k)
        act.input[k] = (segment.frames[k] - w.input_mean[k % d]) / w.input_scale[k % d];

    act.hidden.resize(arch.encoder.size());
    std::span<const double> h = act.input;
    for (std::size_t l = 0; l < arch.encoder.size(); ++l) {
        act.hidden[l].resize(arch.encoder[l].out);
        dense(w.params, arch.encoder[l], h, act.hidden[l]);
        for (auto& v : act.hidden[l]) v = std::tanh(v);
        h = act.hidden[l];
    }

    const auto& z = act.hidden.back();
    act.latent.resize(z.size());
    if (w.config.use_film) {
        film::generate(w, segment.biography, act);
        for (std::size_t k = 0; k < z.size(); ++k) act.latent[k] = act.gamma[k] * z[k] + act.beta[k];
    } else {
        std::copy(z.begin(), z.end(), act.latent.begin());
    }

    double p = 0.0;
    dense(w.params, arch.main_head, act.latent, std::span<double>(&p, 1));
    act.p = p;

    act.logits.resize(arch.aux_head.out);
    dense(w.params, arch.aux_head, act.latent, act.logits);
    act.q = act.logits;
    loss::softmax(act.q);
}

ForwardResult forward(const FeatureSegment& segment, const ModelWeights& weights) {
    Activations act;
    forward(segment, weights, act);
    return {act.p, act.q};
}

void backward(const FeatureSegment& segment, const ModelWeights& w, const Activations& act, double d_p,
              std::span<const double> d_logits, std::span<double> grad) {
    const auto& arch = w.arch;
    const std::size_t L = w.config.latent_dim;

    std::vector<double> d_latent(L, 0.0);
    dense_backward(w.params, arch.main_head, act.latent, std::span<const double>(&d_p, 1), grad, d_latent);
    if (!d_logits.empty()) {
        std::vector<double> d_from_aux(L);
        dense_backward(w.params, arch.aux_head, act.latent, d_logits, grad, d_from_aux);
        for (std::size_t k = 0; k < L; ++k) d_latent[k] += d_from_aux[k];
    }

    std::vector<double> d_h(L);
    if (w.config.use_film)
        film::backward(w, segment.biography, act, act.hidden.back(), d_latent, grad, d_h);
    else
        d_h = d_latent;

    for (std::size_t l = arch.encoder.size(); l-- > 0;) {
        const auto& out = act.hidden[l];
        for (std::size_t k = 0; k < out.size(); ++k) d_h[k] *= 1.0 - out[k] * out[k];
        std::span<const double> in = l == 0 ? std::span<const double>(act.input) : act.hidden[l - 1];
        std::vector<double> d_in(l == 0 ? 0 : in.size());
        dense_backward(w.params, arch.encoder[l], in, d_h, grad, d_in);
        d_h = std::move(d_in);
    }
}

PairOutput siamese_forward(const FeatureSegment& xi, const FeatureSegment& xj, const ModelWeights& weights) {
    return {forward(xi, weights), forward(xj, weights), &weights, &weights};
}

namespace {

struct PairWorkspace {
    Activations a;
    Activations b;
    std::vector<double> d_logits_a;
    std::vector<double> d_logits_b;
};

PairWorkspace& workspace() {
    thread_local PairWorkspace ws;
    return ws;
}

}  // namespace

double pair_objective(const ModelWeights& w, const FeatureSegment& xi, const FeatureSegment& xj, int cls, int aux,
                      std::span<double> grad) {
    auto& ws = workspace();
    forward(xi, w, ws.a);
    forward(xj, w, ws.b);
    const auto& cuts = w.config.cuts;
    double value = loss::oce_loss(ws.a.p, ws.b.p, cls, cuts).value;

    const bool aux_on = w.config.use_aux;
    if (aux_on) {
        ws.d_logits_a.resize(ws.a.logits.size());
        ws.d_logits_b.resize(ws.b.logits.size());
        const double ce_a = loss::cross_entropy_logits(ws.a.logits, aux, ws.d_logits_a);
        const double ce_b = loss::cross_entropy_logits(ws.b.logits, aux, ws.d_logits_b);
        value += w.config.alpha * (ce_a + ce_b);
        for (auto& g : ws.d_logits_a) g *= w.config.alpha;
        for (auto& g : ws.d_logits_b) g *= w.config.alpha;
    }
    if (grad.empty()) return value;

    const auto g = loss::oce_grad(ws.a.p, ws.b.p, cls, cuts);
    backward(xi, w, ws.a, g.d_pi, aux_on ? std::span<const double>(ws.d_logits_a) : std::span<const double>{}, grad);
    backward(xj, w, ws.b, g.d_pj, aux_on ? std::span<const double>(ws.d_logits_b) : std::span<const double>{}, grad);
    return value;
}

double regression_objective(const ModelWeights& w, const FeatureSegment& x, double target, int aux,
                            std::span<double> grad) {
    auto& ws = workspace();
    forward(x, w, ws.a);
    const double err = ws.a.p - target;
    double value = err * err;
    const bool aux_on = w.config.use_aux;
    if (aux_on) {
        ws.d_logits_a.resize(ws.a.logits.size());
        value += w.config.alpha * loss::cross_entropy_logits(ws.a.logits, aux, ws.d_logits_a);
        for (auto& g : ws.d_logits_a) g *= w.config.alpha;
    }
    if (grad.empty()) return value;
    backward(x, w, ws.a, 2.0 * err, aux_on ? std::span<const double>(ws.d_logits_a) : std::span<const double>{}, grad);
    return value;
}

namespace {

class Optimizer {
public:
    Optimizer(const NetworkConfig& c, std::size_t n) : config_(c), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, std::span<const double> grad) {
        const double lr = config_.learning_rate;
        if (config_.optimizer == OptimizerKind::Sgd) {
            for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr * grad[k];
            return;
        }
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t_;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            m_[k] = b1 * m_[k] + (1.0 - b1) * grad[k];
            v_[k] = b2 * v_[k] + (1.0 - b2) * grad[k] * grad[k];
            params[k] -= lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps);
        }
    }

private:
    const NetworkConfig& config_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

void check_aux_labels(std::span<const Session* const> sessions, std::span<const int> aux_labels,
                      const NetworkConfig& config) {
    if (!config.use_aux) return;
    if (aux_labels.size() != sessions.size())
        throw Error(ErrorKind::DimensionMismatch, "use_aux needs one trend label per session (got " +
                                                      std::to_string(aux_labels.size()) + " for " +
                                                      std::to_string(sessions.size()) + " sessions)");
    for (int c : aux_labels)
        if (c < 0 || static_cast<std::size_t>(c) >= config.aux_classes)
            throw Error(ErrorKind::DimensionMismatch, "aux label " + std::to_string(c) + " outside [0, aux_classes)");
}

// Shared mini-batch loop; `item_objective(item, grad)` evaluates one training item.
template <typename ItemObjective>
std::vector<EpochLog> run_epochs(ModelWeights& weights, std::size_t n_items, const ItemObjective& item_objective,
                                 kernels::Exec exec, const EpochCallback& on_epoch) {
    const auto& config = weights.config;
    const std::size_t P = weights.params.size();
    Optimizer opt(config, P);
    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(n_items);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(P);
    std::vector<EpochLog> log;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n_items; start += config.batch_size) {
            const std::size_t n = std::min(config.batch_size, n_items - start);
            const double batch_loss = kernels::accumulate_gradients(
                exec, n, P,
                [&](std::size_t k, std::span<double> g) { return item_objective(order[start + k], g); }, grad);
            if (!std::isfinite(batch_loss))
                throw Error(ErrorKind::TrainingDiverged, "non-finite loss at epoch " + std::to_string(epoch) +
                                                             ", batch starting at item " + std::to_string(start) +
                                                             " (lr " + std::to_string(config.learning_rate) + ")");
            const double inv = 1.0 / static_cast<double>(n);
            for (auto& g : grad) g *= inv;
            opt.step(weights.params, grad);
            epoch_loss += batch_loss;
        }
        EpochLog entry{epoch, epoch_loss / static_cast<double>(n_items)};
        log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    return log;
}

}  // namespace

TrainResult train(std::span<const Session* const> sessions, std::span<const PairSample> pairs,
                  std::span<const int> aux_labels, const NetworkConfig& config, kernels::Exec exec,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (pairs.empty() || sessions.empty()) throw Error(ErrorKind::NoTrainingData, "no training pairs");
    check_aux_labels(sessions, aux_labels, config);
    const auto& first = *sessions.front();
    for (const auto* s : sessions)
        if (s->frames.cols != first.frames.cols || s->biography.size() != first.biography.size())
            throw Error(ErrorKind::DimensionMismatch, "session " + s->id + " differs in feature or biography width");

    TrainResult result{init_weights(config, first.frames.cols, first.biography.size()), {}, "ordinal"};
    fit_standardization(result.weights, sessions);
    const auto& w = result.weights;

    auto item = [&](std::size_t k, std::span<double> g) {
        const auto& pair = pairs[k];
        const Session& s = *sessions[pair.session];
        const int aux = config.use_aux ? aux_labels[pair.session] : 0;
        return pair_objective(w, segment_at(s, pair.i), segment_at(s, pair.j), label_to_class(pair.label), aux, g);
    };
    result.log = run_epochs(result.weights, pairs.size(), item, exec, on_epoch);
    return result;
}

TrainResult train_regression(std::span<const Session* const> sessions, std::span<const int> aux_labels,
                             const NetworkConfig& config, kernels::Exec exec, const EpochCallback& on_epoch) {
    config.validate();
    check_aux_labels(sessions, aux_labels, config);
    struct Item {
        std::size_t session;
        std::size_t index;
    };
    std::vector<Item> items;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        if (!sessions[s]->gt) throw Error(ErrorKind::NoGroundTruth, "session " + sessions[s]->id);
        if (sessions[s]->gt->size() != sessions[s]->length())
            throw Error(ErrorKind::LengthMismatch, "session " + sessions[s]->id + ": gt length != frame count");
        for (std::size_t i = kFirstSegmentIndex; i < sessions[s]->length(); ++i) items.push_back({s, i});
    }
    if (items.empty()) throw Error(ErrorKind::NoTrainingData, "no regression targets");
    const auto& first = *sessions.front();

    TrainResult result{init_weights(config, first.frames.cols, first.biography.size()), {}, "regression"};
    fit_standardization(result.weights, sessions);
    const auto& w = result.weights;

    auto item = [&](std::size_t k, std::span<double> g) {
        const auto& it = items[k];
        const Session& s = *sessions[it.session];
        const int aux = config.use_aux ? aux_labels[it.session] : 0;
        return regression_objective(w, segment_at(s, it.index), (*s.gt)[it.index], aux, g);
    };
    result.log = run_epochs(result.weights, items.size(), item, exec, on_epoch);
    return result;
}

AnnotationTrace reconstruct(const Session& session, const ModelWeights& weights, kernels::Exec exec) {
    const auto segments = build_segments(session);
    AnnotationTrace out{session.rate, 0.0, std::vector<double>(session.length(), 0.0)};
    kernels::for_each_index(exec, segments.size(), [&](std::size_t k) {
        out.values[segments[k].index] = forward(segments[k], weights).p;
    });
    std::fill(out.values.begin(), out.values.begin() + static_cast<std::ptrdiff_t>(kFirstSegmentIndex),
              out.values[kFirstSegmentIndex]);
    return out;
}

namespace {

void push_tensor(ojson& tensors, const std::string& name, const DenseShape& d, const std::vector<double>& params) {
    auto first = params.begin() + static_cast<std::ptrdiff_t>(d.weight_offset());
    ojson t;
    t["name"] = name;
    t["shape"] = {d.out, d.in};
    t["weight"] = std::vector<double>(first, first + static_cast<std::ptrdiff_t>(d.in * d.out));
    auto bias = params.begin() + static_cast<std::ptrdiff_t>(d.bias_offset());
    t["bias"] = std::vector<double>(bias, bias + static_cast<std::ptrdiff_t>(d.out));
    tensors.push_back(t);
}

std::vector<std::pair<std::string, DenseShape>> named_layers(const Architecture& a) {
    std::vector<std::pair<std::string, DenseShape>> out;
    for (std::size_t l = 0; l < a.encoder.size(); ++l) out.emplace_back("encoder." + std::to_string(l), a.encoder[l]);
    for (std::size_t l = 0; l < a.film.size(); ++l) out.emplace_back("film." + std::to_string(l), a.film[l]);
    out.emplace_back("main_head", a.main_head);
    out.emplace_back("aux_head", a.aux_head);
    return out;
}

}  // namespace

ojson checkpoint_json(const ModelWeights& w) {
    for (double v : w.params)
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "refusing to checkpoint non-finite weights");
    ojson j;
    j["format"] = "prefab-checkpoint";
    j["version"] = 1;
    j["seed"] = w.config.seed;
    j["config"] = to_json(w.config);
    j["frame_dim"] = w.arch.frame_dim;
    j["bio_dim"] = w.arch.bio_dim;
    j["input_mean"] = w.input_mean;
    j["input_scale"] = w.input_scale;
    ojson tensors = ojson::array();
    for (const auto& [name, d] : named_layers(w.arch)) push_tensor(tensors, name, d, w.params);
    j["tensors"] = tensors;
    return j;
}

ModelWeights weights_from_checkpoint(const nlohmann::json& j) {
    try {
        if (j.at("format") != "prefab-checkpoint") throw Error(ErrorKind::Parse, "not a prefab checkpoint");
        if (j.at("version").get<int>() != 1) throw Error(ErrorKind::Parse, "unsupported checkpoint version");
        ModelWeights w;
        w.config = network_config_from_json(j.at("config"));
        w.arch = Architecture::build(w.config, j.at("frame_dim").get<std::size_t>(), j.at("bio_dim").get<std::size_t>());
        w.input_mean = j.at("input_mean").get<std::vector<double>>();
        w.input_scale = j.at("input_scale").get<std::vector<double>>();
        if (w.input_mean.size() != w.arch.frame_dim || w.input_scale.size() != w.arch.frame_dim)
            throw Error(ErrorKind::DimensionMismatch, "standardization vectors do not match frame_dim");
        w.params.assign(w.arch.param_count, 0.0);
        const auto layers = named_layers(w.arch);
        const auto& tensors = j.at("tensors");
        if (tensors.size() != layers.size()) throw Error(ErrorKind::DimensionMismatch, "tensor count mismatch");
        for (std::size_t k = 0; k < layers.size(); ++k) {
            const auto& [name, d] = layers[k];
            const auto& t = tensors[k];
            const auto shape = t.at("shape").get<std::vector<std::size_t>>();
            if (t.at("name") != name || shape.size() != 2 || shape[0] != d.out || shape[1] != d.in)
                throw Error(ErrorKind::DimensionMismatch, "tensor " + name + " has unexpected shape");
            const auto weight = t.at("weight").get<std::vector<double>>();
            const auto bias = t.at("bias").get<std::vector<double>>();
            if (weight.size() != d.in * d.out || bias.size() != d.out)
                throw Error(ErrorKind::DimensionMismatch, "tensor " + name + " has wrong element count");
            std::copy(weight.begin(), weight.end(), w.params.begin() + static_cast<std::ptrdiff_t>(d.weight_offset()));
            std::copy(bias.begin(), bias.end(), w.params.begin() + static_cast<std::ptrdiff_t>(d.bias_offset()));
        }
        return w;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const ModelWeights& weights, const std::string& config_hash) {
    auto j = checkpoint_json(weights);
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << j.dump() << '\n';
}

ModelWeights load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    return weights_from_checkpoint(j);
}

void write_train_log(const std::filesystem::path& path, const TrainResult& result, const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    for (const auto& e : result.log) {
        ojson j;
        j["epoch"] = e.epoch;
        j["loss"] = e.loss;
        j["loss_path"] = result.loss_path;
        if (!config_hash.empty()) j["config_hash"] = config_hash;
        out << j.dump() << '\n';
    }
}

}  // namespace prefab

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefab/kernels.hpp"
#include "prefab/losses.hpp"
#include "prefab/pairing.hpp"
#include "prefab/session.hpp"
#include "prefab/trace.hpp"

namespace prefab {

enum class OptimizerKind { Sgd, Adam };

/// Architecture and training hyperparameters. The use_film / use_aux flags give
/// the four ablation cells (neither, FiLM only, aux only, both).
struct NetworkConfig {
    std::vector<std::size_t> encoder_layers{32};  // hidden widths before the latent layer
    std::size_t latent_dim = 16;
    std::size_t film_hidden = 16;  // 0: linear biography → (γ, β)
    std::size_t aux_classes = 4;
    bool use_film = true;
    bool use_aux = true;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t epochs = 100;
    double alpha = 0.001;
    loss::Cutpoints cuts;

    void validate() const;
};

nlohmann::ordered_json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j);

/// Offsets of one dense layer inside the flat parameter vector:
/// weights are out x in row-major at `offset`, the bias follows.
struct DenseShape {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t offset = 0;

    std::size_t weight_offset() const { return offset; }
    std::size_t bias_offset() const { return offset + in * out; }
    std::size_t size() const { return in * out + out; }
};

struct Architecture {
    std::size_t frame_dim = 0;
    std::size_t bio_dim = 0;
    std::size_t input_dim = 0;
    std::vector<DenseShape> encoder;  // tanh on every layer; last one emits z
    std::vector<DenseShape> film;     // empty when FiLM is off; last emits [Δγ | β]
    DenseShape main_head;             // z' → p
    DenseShape aux_head;              // z' → logits (always allocated)
    std::size_t param_count = 0;

    static Architecture build(const NetworkConfig& config, std::size_t frame_dim, std::size_t bio_dim);
};

/// Trained parameters plus the input standardization they were trained with.
struct ModelWeights {
    NetworkConfig config;
    Architecture arch;
    std::vector<double> input_mean;   // per frame feature
    std::vector<double> input_scale;  // per frame feature, > 0
    std::vector<double> params;
};

/// Seeded uniform(±1/sqrt(fan_in)) weights, zero biases, identity standardization.
ModelWeights init_weights(const NetworkConfig& config, std::size_t frame_dim, std::size_t bio_dim);
/// Per-feature mean / standard deviation over all frames of the given sessions.
void fit_standardization(ModelWeights& weights, std::span<const Session* const> sessions);

/// Intermediate values of one forward pass, kept for backprop.
struct Activations {
    std::vector<double> input;                // standardized window
    std::vector<std::vector<double>> hidden;  // post-tanh output of each encoder layer
    std::vector<double> film_hidden;
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> latent;  // z' (== z when FiLM is off)
    double p = 0.0;
    std::vector<double> logits;
    std::vector<double> q;
};

struct ForwardResult {
    double p = 0.0;
    std::vector<double> q;
};

ForwardResult forward(const FeatureSegment& segment, const ModelWeights& weights);
void forward(const FeatureSegment& segment, const ModelWeights& weights, Activations& act);
/// Accumulates dL/dparams into `grad` given dL/dp and dL/dlogits (may be empty).
void backward(const FeatureSegment& segment, const ModelWeights& weights, const Activations& act, double d_p,
              std::span<const double> d_logits, std::span<double> grad);

namespace film {
/// (γ, β) from the biography; γ = 1 + generator output so zero weights are the identity.
void generate(const ModelWeights& weights, std::span<const double> biography, Activations& act);
/// Backprop through z' = γ ⊙ z + β: adds generator gradients to `grad`, writes dL/dz.
void backward(const ModelWeights& weights, std::span<const double> biography, const Activations& act,
              std::span<const double> z, std::span<const double> d_latent, std::span<double> grad,
              std::span<double> d_z);
}  // namespace film

/// Siamese outputs for one pair; both branches run through the same weights object.
struct PairOutput {
    ForwardResult i;
    ForwardResult j;
    const ModelWeights* branch_i = nullptr;
    const ModelWeights* branch_j = nullptr;
    double p_ij() const { return j.p - i.p; }
};
PairOutput siamese_forward(const FeatureSegment& xi, const FeatureSegment& xj, const ModelWeights& weights);

/// Per-pair training objective OCE(y, p_j - p_i) + α (CE(c, q_i) + CE(c, q_j)).
/// The auxiliary term is dropped when the config disables it. If `grad` is
/// non-empty the parameter gradient is accumulated into it.
double pair_objective(const ModelWeights& weights, const FeatureSegment& xi, const FeatureSegment& xj, int cls,
                      int aux, std::span<double> grad);
/// Regression baseline objective (p - target)² + α CE(c, q).
double regression_objective(const ModelWeights& weights, const FeatureSegment& x, double target, int aux,
                            std::span<double> grad);

struct EpochLog {
    std::size_t epoch = 0;
    double loss = 0.0;
};

struct TrainResult {
    ModelWeights weights;
    std::vector<EpochLog> log;
    std::string loss_path;  // "ordinal" or "regression"
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains on ordinal pairs. `aux_labels[s]` is the trend cluster of sessions[s];
/// it must be present when use_aux is set and is ignored otherwise.
TrainResult train(std::span<const Session* const> sessions, std::span<const PairSample> pairs,
                  std::span<const int> aux_labels, const NetworkConfig& config,
                  kernels::Exec exec = kernels::Exec::Parallel, const EpochCallback& on_epoch = {});

/// Cardinal baseline: same network and optimizer, squared error on the GT values.
TrainResult train_regression(std::span<const Session* const> sessions, std::span<const int> aux_labels,
                             const NetworkConfig& config, kernels::Exec exec = kernels::Exec::Parallel,
                             const EpochCallback& on_epoch = {});

/// Per-segment utility p_i for every frame; the first 12 samples (no full
/// window yet) repeat the first available prediction.
AnnotationTrace reconstruct(const Session& session, const ModelWeights& weights,
                            kernels::Exec exec = kernels::Exec::Parallel);

// Checkpoint: versioned JSON with shapes, row-major f64 arrays, config and seed.
nlohmann::ordered_json checkpoint_json(const ModelWeights& weights);
ModelWeights weights_from_checkpoint(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const ModelWeights& weights,
                     const std::string& config_hash = {});
ModelWeights load_checkpoint(const std::filesystem::path& path);

/// One JSON object per epoch.
void write_train_log(const std::filesystem::path& path, const TrainResult& result, const std::string& config_hash = {});

}  // namespace prefab

#pragma once

#include <cstdint>
#include <filesystem>
#include <array>
#include <functional>
#include <unordered_map>
#include <string>
#include <vector>

#include <json.hpp>

#include "planet/manifest.hpp"
#include "planet/model.hpp"
#include "planet/objectives.hpp"
#include "planet/signature_cache.hpp"

namespace planet::train {

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 32;
    double lr = 1e-5;
    double min_lr = 0.0;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0;  // epochs between intermediate checkpoints; 0 = final only
    std::size_t warmup_steps = 0;
    double weight_decay = 0.0;
    double grad_clip = 0.0;            // global-norm clip; 0 disables
    obj::LossConfig loss;

    /// ConfigError unless epochs >= 1, batch_size >= 2 and rates are sane.
    void validate() const;
};

struct AdamState {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;

    static AdamState for_params(const model::ModelParams& params);
};

/// One bias-corrected Adam update. NumericError naming the parameter when a
/// gradient is non-finite; nothing is modified in that case.
void adam_step(model::ModelParams& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               double weight_decay = 0.0);

/// lr_min + (lr0 - lr_min) (1 + cos(pi step / total)) / 2.
double cosine_lr(std::size_t step, std::size_t total_steps, double lr0, double lr_min);

/// Tensors ready for the training loop: precomputed patch matrices, token
/// sequences and per-branch signatures, one entry per sample.
struct Dataset {
    std::vector<std::string> ids;
    std::vector<std::string> regions;
    std::vector<Tensor> patches;
    std::vector<data::TokenSequence> tokens;
    std::vector<std::array<std::vector<double>, 3>> signatures;

    std::size_t size() const noexcept { return ids.size(); }
};

/// Cuts a combined signature into its colour, structure and texture parts.
std::array<std::vector<double>, 3> split_signature(const std::vector<double>& combined, const sig::SignatureConfig& cfg);

/// Builds a dataset from loaded samples and their images. DataError naming
/// the id when a sample has no cached signature.
Dataset make_dataset(const std::vector<data::Sample>& samples, const std::vector<Image>& images,
                     const std::unordered_map<std::string, std::vector<double>>& signatures,
                     const sig::SignatureConfig& sig_cfg, const data::Vocabulary& vocab,
                     const model::ModelConfig& model_cfg);

struct LossBreakdown {
    double total = 0.0;
    double itc = 0.0;
    std::array<double, 3> phy{};  // unweighted branch terms
};

struct BatchResult {
    LossBreakdown loss;
    std::vector<Tensor> grads;  // registry order
};

/// Forward and backward pass of the total loss over `batch` (dataset indices).
BatchResult batch_loss(const model::ModelParams& params, const Dataset& data, const std::vector<std::size_t>& batch,
                       const obj::LossConfig& loss);

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based
    double lr = 0.0;        // rate at the first step of the epoch
    LossBreakdown loss;     // means over the epoch's batches

    nlohmann::json to_json() const;
};

struct TrainResult {
    model::ModelParams params;
    std::vector<EpochMetrics> metrics;
};

/// Called after each epoch; return value ignored.
using EpochCallback = std::function<void(const EpochMetrics&, const model::ModelParams&)>;

/// Deterministic single-threaded optimisation of the total loss.
TrainResult train(const Dataset& data, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Permutation of [0, n) for one epoch; depends only on (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

std::string format_metrics_line(const EpochMetrics& m);

}  // namespace planet::train

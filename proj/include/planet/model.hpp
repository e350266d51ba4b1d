#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "planet/autodiff.hpp"
#include "planet/image.hpp"
#include "planet/signatures.hpp"
#include "planet/tensor.hpp"
#include "planet/text.hpp"

namespace planet::model {

enum class Branch : std::size_t { Color = 0, Structure = 1, Texture = 2 };
inline constexpr std::array<Branch, 3> kBranches{Branch::Color, Branch::Structure, Branch::Texture};
const char* branch_name(Branch b);

struct ModelConfig {
    std::size_t dim = 32;          // D
    std::size_t max_len = data::kDefaultMaxLen;
    std::size_t grid = 8;          // image split into grid x grid patches
    std::size_t patch_cells = 4;   // each patch box-averaged to cells x cells RGB
    std::size_t vocab_size = 2;
    std::size_t color_dim = 48;
    std::size_t struct_dim = 18;
    std::size_t texture_dim = 16;
    double init_tau = 0.07;
    double init_tau_p = 0.07;

    std::size_t patch_dim() const { return 3 * patch_cells * patch_cells; }
    std::size_t branch_dim(Branch b) const;
    void validate() const;
    /// Signature widths taken from a mining configuration.
    void match_signatures(const sig::SignatureConfig& sc);

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Registry of every trainable tensor, in a fixed order.
class ModelParams {
public:
    ModelParams() = default;
    explicit ModelParams(ModelConfig cfg) : cfg_(std::move(cfg)) {}

    const ModelConfig& config() const noexcept { return cfg_; }

    /// Registers a tensor; a name may be registered only once.
    void add(const std::string& name, Tensor value);
    std::size_t index(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const Tensor& get(const std::string& name) const { return tensors_[index(name)]; }
    Tensor& get(const std::string& name) { return tensors_[index(name)]; }

    std::size_t size() const noexcept { return tensors_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const Tensor& tensor(std::size_t i) const { return tensors_.at(i); }
    Tensor& tensor(std::size_t i) { return tensors_.at(i); }
    std::size_t scalar_count() const;

    double tau() const;
    double tau_p() const;

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        return a.cfg_ == b.cfg_ && a.names_ == b.names_ && a.tensors_ == b.tensors_;
    }

private:
    ModelConfig cfg_;
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Glorot-uniform weights, zero biases, unit LayerNorm gains, and
/// log-temperatures set so that tau = init_tau and tau_p = init_tau_p.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Parameters placed on a tape, in registry order. Names listed in
/// `frozen` are bound as constants and receive no gradient.
class BoundParams {
public:
    BoundParams(ad::Tape& tape, const ModelParams& params, const std::vector<std::string>& frozen = {});
    const ad::Var& operator[](const std::string& name) const { return vars_[params_->index(name)]; }
    const ad::Var& at(std::size_t i) const { return vars_.at(i); }
    std::size_t size() const noexcept { return vars_.size(); }
    ad::Tape& tape() const noexcept { return *tape_; }
    const ModelConfig& config() const noexcept { return params_->config(); }

private:
    ad::Tape* tape_;
    const ModelParams* params_;
    std::vector<ad::Var> vars_;
};

/// Grid-of-patches input for the image encoder: [grid^2 x patch_dim], each
/// row a patch box-averaged to patch_cells^2 RGB cells scaled to [-0.5, 0.5].
Tensor image_patches(const Image& img, const ModelConfig& cfg);

// Batched graph builders. Text sequences contribute only their valid
// (non-padding) positions; `offsets` delimit each sequence's rows.

/// [N x D] unit image embeddings from per-image patch matrices.
ad::Var encode_images(const BoundParams& p, const std::vector<const Tensor*>& patches);

struct TextGraph {
    ad::Var tokens;    // E_txt rows of all sequences stacked [sum(valid_len) x D]
    ad::Var globals;   // [N x D] unit text embeddings
    ad::Offsets offsets;
};
/// Throws DegenerateInputError if any sequence has valid_len == 0.
TextGraph encode_texts(const BoundParams& p, const std::vector<const data::TokenSequence*>& seqs);

struct ProjectionGraph {
    std::array<ad::Var, 3> descriptors;  // [N x branch_dim]
    std::array<ad::Var, 3> attention;    // flat, one weight per stacked token row
};
ProjectionGraph project_physical(const BoundParams& p, const ad::Var& tokens, const ad::Offsets& offsets);

// Single-example conveniences (inference; no gradients).

Tensor encode_image(const Image& img, const ModelParams& params);

struct EmbeddingBundle {
    Tensor text_global;  // t, length D
    Tensor tokens;       // E_txt, max_len x D including padding rows
    std::size_t valid_len = 0;
};
EmbeddingBundle encode_text(const data::TokenSequence& seq, const ModelParams& params);

struct PhysicalDescriptors {
    std::array<Tensor, 3> descriptors;
    std::array<Tensor, 3> attention;  // length max_len; exactly zero on padding
};
PhysicalDescriptors project_physical(const Tensor& tokens, std::size_t valid_len, const ModelParams& params);

// Checkpoint file, little-endian:
//   "PLNT" | u32 version | u32 len | metadata JSON (model config, vocabulary,
//   signature config, run config) | u32 count | count x (u16 name_len | name |
//   u8 rank | u64 extents[rank] | f64 payload) | u64 FNV-1a of all prior bytes
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelParams params;
    data::Vocabulary vocab;
    sig::SignatureConfig signature;
    nlohmann::json run_config = nlohmann::json::object();
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// CorruptionError on hash mismatch, FormatError on a malformed file.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// As above, and ConfigError unless the stored model config equals `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);
/// Content hash stored in the trailer of an encoded checkpoint.
std::uint64_t checkpoint_hash(std::span<const std::uint8_t> encoded);

}  // namespace planet::model

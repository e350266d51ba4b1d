#include "planet/model.hpp"

#include <cmath>
#include <cstring>

#include "planet/binary_io.hpp"
#include "planet/errors.hpp"
#include "planet/hashing.hpp"
#include "planet/random.hpp"

namespace planet::model {

using nlohmann::json;

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::Color: return "color";
        case Branch::Structure: return "struc";
        case Branch::Texture: return "tex";
    }
    return "?";
}

std::size_t ModelConfig::branch_dim(Branch b) const {
    switch (b) {
        case Branch::Color: return color_dim;
        case Branch::Structure: return struct_dim;
        case Branch::Texture: return texture_dim;
    }
    return 0;
}

void ModelConfig::validate() const {
    if (dim < 8) throw ConfigError("model dim must be at least 8");
    if (max_len < 1) throw ConfigError("max_len must be positive");
    if (grid < 1 || patch_cells < 1) throw ConfigError("image grid and patch cells must be positive");
    if (vocab_size < 2) throw ConfigError("vocabulary must hold at least the reserved ids");
    if (color_dim < 6 || color_dim % 3 != 0 || struct_dim < 2 || texture_dim < 2)
        throw ConfigError("signature widths are inconsistent with a valid signature config");
    if (!(init_tau > 0.0) || !(init_tau_p > 0.0)) throw ConfigError("initial temperatures must be positive");
}

void ModelConfig::match_signatures(const sig::SignatureConfig& sc) {
    color_dim = sc.color_dim();
    struct_dim = sc.struct_bins;
    texture_dim = sc.texture_bins;
}

json ModelConfig::to_json() const {
    return json{{"dim", dim},
                {"max_len", max_len},
                {"grid", grid},
                {"patch_cells", patch_cells},
                {"vocab_size", vocab_size},
                {"color_dim", color_dim},
                {"struct_dim", struct_dim},
                {"texture_dim", texture_dim},
                {"init_tau", init_tau},
                {"init_tau_p", init_tau_p}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    try {
        c.dim = j.at("dim").get<std::size_t>();
        c.max_len = j.at("max_len").get<std::size_t>();
        c.grid = j.at("grid").get<std::size_t>();
        c.patch_cells = j.at("patch_cells").get<std::size_t>();
        c.vocab_size = j.at("vocab_size").get<std::size_t>();
        c.color_dim = j.at("color_dim").get<std::size_t>();
        c.struct_dim = j.at("struct_dim").get<std::size_t>();
        c.texture_dim = j.at("texture_dim").get<std::size_t>();
        c.init_tau = j.at("init_tau").get<double>();
        c.init_tau_p = j.at("init_tau_p").get<double>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

void ModelParams::add(const std::string& name, Tensor value) {
    if (index_.count(name) != 0) throw ContractError("parameter '" + name + "' registered twice");
    index_.emplace(name, tensors_.size());
    names_.push_back(name);
    tensors_.push_back(std::move(value));
}

std::size_t ModelParams::index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ModelParams::scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

double ModelParams::tau() const { return std::exp(get("log_tau").item()); }
double ModelParams::tau_p() const { return std::exp(get("log_tau_p").item()); }

namespace {

std::string branch_param(const char* prefix, Branch b) { return std::string(prefix) + "." + branch_name(b); }

Tensor glorot(Rng& rng, Shape shape, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(std::move(shape), 0.0);
    for (auto& v : t.data()) v = rng.uniform(-a, a);
    return t;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ModelParams p(cfg);
    Rng rng(seed);
    const std::size_t d = cfg.dim, pd = cfg.patch_dim();

    p.add("img.patch_w", glorot(rng, {pd, d}, pd, d));
    p.add("img.patch_b", Tensor(Shape{d}, 0.0));
    p.add("img.hidden_w", glorot(rng, {d, d}, d, d));
    p.add("img.hidden_b", Tensor(Shape{d}, 0.0));
    p.add("img.out_w", glorot(rng, {d, d}, d, d));
    p.add("img.out_b", Tensor(Shape{d}, 0.0));

    p.add("txt.token_emb", glorot(rng, {cfg.vocab_size, d}, cfg.vocab_size, d));
    p.add("txt.pos_emb", glorot(rng, {cfg.max_len, d}, cfg.max_len, d));
    p.add("txt.ffn_w", glorot(rng, {d, d}, d, d));
    p.add("txt.ffn_b", Tensor(Shape{d}, 0.0));

    p.add("phys.w_k", glorot(rng, {d, d}, d, d));
    for (Branch b : kBranches) p.add(branch_param("phys.query", b), glorot(rng, {d}, d, 1));
    for (Branch b : kBranches) {
        const std::size_t k = cfg.branch_dim(b);
        p.add(branch_param("phys.w_v", b), glorot(rng, {d, k}, d, k));
        p.add(branch_param("phys.ln_gamma", b), Tensor(Shape{k}, 1.0));
        p.add(branch_param("phys.ln_beta", b), Tensor(Shape{k}, 0.0));
    }

    p.add("log_tau", Tensor::scalar(std::log(cfg.init_tau)));
    p.add("log_tau_p", Tensor::scalar(std::log(cfg.init_tau_p)));
    return p;
}

BoundParams::BoundParams(ad::Tape& tape, const ModelParams& params, const std::vector<std::string>& frozen)
    : tape_(&tape), params_(&params) {
    std::vector<bool> is_frozen(params.size(), false);
    for (const auto& name : frozen) is_frozen[params.index(name)] = true;
    vars_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        vars_.push_back(is_frozen[i] ? tape.constant(params.tensor(i)) : tape.variable(params.tensor(i)));
}

Tensor image_patches(const Image& img, const ModelConfig& cfg) {
    const std::size_t cells = cfg.grid * cfg.patch_cells;
    const std::size_t w = img.width(), h = img.height();
    // box-average the image down to cells x cells
    std::vector<double> small(cells * cells * 3, 0.0);
    for (std::size_t cy = 0; cy < cells; ++cy) {
        const std::size_t y0 = cy * h / cells;
        const std::size_t y1 = std::max(y0 + 1, (cy + 1) * h / cells);
        for (std::size_t cx = 0; cx < cells; ++cx) {
            const std::size_t x0 = cx * w / cells;
            const std::size_t x1 = std::max(x0 + 1, (cx + 1) * w / cells);
            std::array<double, 3> acc{};
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = x0; x < x1; ++x)
                    for (std::size_t c = 0; c < 3; ++c) acc[c] += img.at(x, y, c);
            const double inv = 1.0 / (255.0 * static_cast<double>((y1 - y0) * (x1 - x0)));
            for (std::size_t c = 0; c < 3; ++c) small[(cy * cells + cx) * 3 + c] = acc[c] * inv - 0.5;
        }
    }
    const std::size_t s = cfg.patch_cells, pd = cfg.patch_dim();
    Tensor out(Shape{cfg.grid * cfg.grid, pd}, 0.0);
    for (std::size_t gy = 0; gy < cfg.grid; ++gy)
        for (std::size_t gx = 0; gx < cfg.grid; ++gx) {
            auto row = out.row(gy * cfg.grid + gx);
            for (std::size_t sy = 0; sy < s; ++sy)
                for (std::size_t sx = 0; sx < s; ++sx)
                    for (std::size_t c = 0; c < 3; ++c)
                        row[(sy * s + sx) * 3 + c] = small[((gy * s + sy) * cells + gx * s + sx) * 3 + c];
        }
    return out;
}

ad::Var encode_images(const BoundParams& p, const std::vector<const Tensor*>& patches) {
    if (patches.empty()) throw DimensionError("encode_images: empty batch");
    const std::size_t per = patches.front()->rows(), pd = patches.front()->cols();
    std::vector<double> stacked;
    stacked.reserve(patches.size() * per * pd);
    ad::Offsets offsets{0};
    for (const Tensor* t : patches) {
        if (t->rows() != per || t->cols() != pd) throw DimensionError("encode_images: inconsistent patch grids");
        stacked.insert(stacked.end(), t->data().begin(), t->data().end());
        offsets.push_back(offsets.back() + per);
    }
    ad::Tape& tape = p.tape();
    const ad::Var x = tape.constant(Tensor::matrix(patches.size() * per, pd, std::move(stacked)));
    const ad::Var z = ad::add_row(ad::matmul(x, p["img.patch_w"]), p["img.patch_b"]);
    const ad::Var h = ad::mul(z, z);
    const ad::Var pooled = ad::segment_mean(h, offsets);
    const ad::Var hidden = ad::tanh(ad::add_row(ad::matmul(pooled, p["img.hidden_w"]), p["img.hidden_b"]));
    const ad::Var out = ad::add_row(ad::matmul(hidden, p["img.out_w"]), p["img.out_b"]);
    return ad::l2_normalize(out);
}

TextGraph encode_texts(const BoundParams& p, const std::vector<const data::TokenSequence*>& seqs) {
    if (seqs.empty()) throw DimensionError("encode_texts: empty batch");
    const std::size_t max_len = p.config().max_len;
    std::vector<std::size_t> ids, positions;
    ad::Offsets offsets{0};
    for (const auto* s : seqs) {
        if (s->valid_len == 0) throw DegenerateInputError("encode_text: sequence holds only padding");
        if (s->valid_len > max_len || s->ids.size() < s->valid_len)
            throw DimensionError("encode_text: sequence longer than the positional table");
        for (std::size_t i = 0; i < s->valid_len; ++i) {
            const auto id = s->ids[i];
            if (id < 0 || static_cast<std::size_t>(id) >= p.config().vocab_size)
                throw DimensionError("encode_text: token id outside the vocabulary");
            ids.push_back(static_cast<std::size_t>(id));
            positions.push_back(i);
        }
        offsets.push_back(ids.size());
    }
    const ad::Var x = ad::add(ad::gather_rows(p["txt.token_emb"], ids), ad::gather_rows(p["txt.pos_emb"], positions));
    const ad::Var e = ad::tanh(ad::add_row(ad::matmul(x, p["txt.ffn_w"]), p["txt.ffn_b"]));
    return {e, ad::l2_normalize(ad::segment_mean(e, offsets)), offsets};
}

ProjectionGraph project_physical(const BoundParams& p, const ad::Var& tokens, const ad::Offsets& offsets) {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(p.config().dim));
    const ad::Var keys = ad::matmul(tokens, p["phys.w_k"]);
    ProjectionGraph g;
    for (Branch b : kBranches) {
        const auto k = static_cast<std::size_t>(b);
        const ad::Var logits = ad::scale(ad::matmul(keys, p[branch_param("phys.query", b)]), inv_sqrt_d);
        g.attention[k] = ad::segment_softmax(logits, offsets);
        const ad::Var values = ad::matmul(tokens, p[branch_param("phys.w_v", b)]);
        const ad::Var pooled = ad::segment_weighted_sum(g.attention[k], values, offsets);
        g.descriptors[k] =
            ad::layernorm(pooled, p[branch_param("phys.ln_gamma", b)], p[branch_param("phys.ln_beta", b)]);
    }
    return g;
}

Tensor encode_image(const Image& img, const ModelParams& params) {
    ad::Tape tape;
    const BoundParams p(tape, params);
    const Tensor patches = image_patches(img, params.config());
    const Tensor v = encode_images(p, {&patches}).value();
    return v.reshaped({v.size()});
}

EmbeddingBundle encode_text(const data::TokenSequence& seq, const ModelParams& params) {
    const ModelConfig& cfg = params.config();
    if (seq.valid_len == 0) throw DegenerateInputError("encode_text: sequence holds only padding");
    // every position, padding included, so E_txt has all max_len rows
    data::TokenSequence full;
    full.ids.assign(cfg.max_len, data::kPadId);
    std::copy_n(seq.ids.begin(), std::min(seq.ids.size(), cfg.max_len), full.ids.begin());
    full.valid_len = cfg.max_len;
    ad::Tape tape;
    const BoundParams p(tape, params);
    const TextGraph g = encode_texts(p, {&full});
    std::vector<std::size_t> valid(seq.valid_len);
    for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = i;
    const ad::Var t = ad::l2_normalize(ad::segment_mean(ad::gather_rows(g.tokens, valid), {0, valid.size()}));
    return {t.value().reshaped({cfg.dim}), g.tokens.value(), seq.valid_len};
}

PhysicalDescriptors project_physical(const Tensor& tokens, std::size_t valid_len, const ModelParams& params) {
    const ModelConfig& cfg = params.config();
    if (valid_len == 0) throw DegenerateInputError("project_physical: no valid positions");
    if (tokens.rank() != 2 || tokens.cols() != cfg.dim || tokens.rows() < valid_len)
        throw DimensionError("project_physical: token matrix must be [L x D] with L >= valid_len");
    ad::Tape tape;
    const BoundParams p(tape, params);
    std::vector<double> rows(tokens.data().begin(), tokens.data().begin() + static_cast<std::ptrdiff_t>(valid_len * cfg.dim));
    const ad::Var e = tape.constant(Tensor::matrix(valid_len, cfg.dim, std::move(rows)));
    const ProjectionGraph g = project_physical(p, e, {0, valid_len});
    PhysicalDescriptors out;
    for (std::size_t k = 0; k < 3; ++k) {
        const Tensor& d = g.descriptors[k].value();
        out.descriptors[k] = d.reshaped({d.size()});
        Tensor a(Shape{tokens.rows()}, 0.0);
        for (std::size_t i = 0; i < valid_len; ++i) a[i] = g.attention[k].value()[i];
        out.attention[k] = std::move(a);
    }
    return out;
}

namespace {

constexpr char kCheckpointMagic[4] = {'P', 'L', 'N', 'T'};

json metadata_json(const Checkpoint& c) {
    return json{{"model", c.params.config().to_json()},
                {"vocabulary", c.vocab.learned_tokens()},
                {"signature",
                 {{"color_bins", c.signature.color_bins},
                  {"struct_bins", c.signature.struct_bins},
                  {"texture_bins", c.signature.texture_bins},
                  {"tau_rel", c.signature.tau_rel}}},
                {"run", c.run_config}};
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    ByteWriter w;
    w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kCheckpointMagic), 4));
    w.u32(kCheckpointVersion);
    const std::string meta = metadata_json(ckpt).dump();
    w.u32(static_cast<std::uint32_t>(meta.size()));
    w.str(meta);
    const ModelParams& p = ckpt.params;
    w.u32(static_cast<std::uint32_t>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        w.u16(static_cast<std::uint16_t>(p.name(i).size()));
        w.str(p.name(i));
        const Tensor& t = p.tensor(i);
        w.u8(static_cast<std::uint8_t>(t.rank()));
        for (auto e : t.shape()) w.u64(e);
        for (double v : t.data()) w.f64(v);
    }
    const std::uint64_t h = fnv1a64(w.buffer());
    w.u64(h);
    return w.take();
}

std::uint64_t checkpoint_hash(std::span<const std::uint8_t> encoded) {
    if (encoded.size() < 8) throw FormatError("checkpoint: truncated");
    ByteReader r(encoded.subspan(encoded.size() - 8), "checkpoint");
    return r.u64();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 + 4 + 8 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic");
    const auto body = bytes.first(bytes.size() - 8);
    if (fnv1a64(body) != checkpoint_hash(bytes)) throw CorruptionError("checkpoint: content hash mismatch");

    ByteReader r(body, "checkpoint");
    r.bytes(4);
    if (const auto v = r.u32(); v != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(v));
    const auto meta_bytes = r.bytes(r.u32());
    json meta;
    try {
        meta = json::parse(meta_bytes.begin(), meta_bytes.end());
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint metadata: ") + e.what());
    }

    Checkpoint c;
    const ModelConfig cfg = ModelConfig::from_json(meta.at("model"));
    try {
        c.vocab = data::Vocabulary(meta.at("vocabulary").get<std::vector<std::string>>());
        const auto& s = meta.at("signature");
        c.signature.color_bins = s.at("color_bins").get<std::size_t>();
        c.signature.struct_bins = s.at("struct_bins").get<std::size_t>();
        c.signature.texture_bins = s.at("texture_bins").get<std::size_t>();
        c.signature.tau_rel = s.at("tau_rel").get<double>();
        c.run_config = meta.value("run", json::object());
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint metadata: ") + e.what());
    }
    if (c.vocab.size() != cfg.vocab_size) throw FormatError("checkpoint: vocabulary size disagrees with model config");

    c.params = ModelParams(cfg);
    const std::size_t count = r.u32();
    for (std::size_t i = 0; i < count; ++i) {
        const auto name_bytes = r.bytes(r.u16());
        std::string name(reinterpret_cast<const char*>(name_bytes.data()), name_bytes.size());
        Shape shape(r.u8());
        for (auto& e : shape) e = r.u64();
        std::vector<double> values(shape_size(shape));
        for (auto& v : values) v = r.f64();
        c.params.add(name, Tensor(std::move(shape), std::move(values)));
    }
    if (!r.done()) throw FormatError("checkpoint: trailing bytes before the hash");

    // the registry must match what this build would create for the config
    const ModelParams reference = init_params(cfg, 0);
    if (reference.size() != c.params.size()) throw ConfigError("checkpoint: parameter registry differs from model layout");
    for (std::size_t i = 0; i < reference.size(); ++i)
        if (reference.name(i) != c.params.name(i) || reference.tensor(i).shape() != c.params.tensor(i).shape())
            throw ConfigError("checkpoint: tensor '" + c.params.name(i) + "' does not match the model layout");
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
    Checkpoint c = load_checkpoint(path);
    if (!(c.params.config() == expected))
        throw ConfigError("checkpoint model config " + c.params.config().to_json().dump() + " differs from expected " +
                          expected.to_json().dump());
    return c;
}

}  // namespace planet::model

#include "planet/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "planet/errors.hpp"
#include "planet/random.hpp"

namespace planet::train {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 2) throw ConfigError("batch size must be at least 2 for a contrastive loss");
    if (!(lr > 0.0) || !(min_lr >= 0.0) || min_lr > lr) throw ConfigError("need lr > 0 and 0 <= min_lr <= lr");
    if (!(weight_decay >= 0.0) || !(grad_clip >= 0.0)) throw ConfigError("weight decay and clip must be non-negative");
    loss.validate();
}

AdamState AdamState::for_params(const model::ModelParams& params) {
    AdamState s;
    for (std::size_t i = 0; i < params.size(); ++i) {
        s.m.push_back(Tensor::zeros_like(params.tensor(i)));
        s.v.push_back(Tensor::zeros_like(params.tensor(i)));
    }
    return s;
}

void adam_step(model::ModelParams& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               double weight_decay) {
    if (grads.size() != params.size() || state.m.size() != params.size())
        throw DimensionError("adam_step: gradient or state count differs from the parameter registry");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].shape() != params.tensor(i).shape())
            throw DimensionError("adam_step: gradient shape mismatch for '" + params.name(i) + "'");
        if (!grads[i].all_finite()) throw NumericError("adam_step: non-finite gradient for '" + params.name(i) + "'");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
    const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto theta = params.tensor(i).data();
        auto m = state.m[i].data();
        auto v = state.v[i].data();
        const auto g = grads[i].data();
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = AdamState::kBeta1 * m[j] + (1.0 - AdamState::kBeta1) * g[j];
            v[j] = AdamState::kBeta2 * v[j] + (1.0 - AdamState::kBeta2) * g[j] * g[j];
            theta[j] -= lr * ((m[j] / c1) / (std::sqrt(v[j] / c2) + AdamState::kEps) + weight_decay * theta[j]);
        }
    }
}

double cosine_lr(std::size_t step, std::size_t total_steps, double lr0, double lr_min) {
    if (total_steps == 0) return lr0;
    if (step > total_steps) throw DomainError("cosine_lr: step beyond the schedule");
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

std::array<std::vector<double>, 3> split_signature(const std::vector<double>& combined, const sig::SignatureConfig& cfg) {
    if (combined.size() != cfg.dim()) throw DimensionError("signature length does not match the signature config");
    const auto c = static_cast<std::ptrdiff_t>(cfg.color_dim());
    const auto s = static_cast<std::ptrdiff_t>(cfg.struct_bins);
    return {std::vector<double>(combined.begin(), combined.begin() + c),
            std::vector<double>(combined.begin() + c, combined.begin() + c + s),
            std::vector<double>(combined.begin() + c + s, combined.end())};
}

Dataset make_dataset(const std::vector<data::Sample>& samples, const std::vector<Image>& images,
                     const std::unordered_map<std::string, std::vector<double>>& signatures,
                     const sig::SignatureConfig& sig_cfg, const data::Vocabulary& vocab,
                     const model::ModelConfig& model_cfg) {
    if (samples.size() != images.size()) throw DimensionError("make_dataset: one image per sample required");
    Dataset d;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        auto it = signatures.find(s.id);
        if (it == signatures.end()) throw DataError("no cached signature for id '" + s.id + "'");
        data::TokenSequence seq = data::tokenize(s.text, vocab, model_cfg.max_len);
        if (seq.valid_len == 0) throw DataError("description of '" + s.id + "' has no tokens");
        d.ids.push_back(s.id);
        d.regions.push_back(s.region);
        d.patches.push_back(model::image_patches(images[i], model_cfg));
        d.tokens.push_back(std::move(seq));
        d.signatures.push_back(split_signature(it->second, sig_cfg));
    }
    return d;
}

BatchResult batch_loss(const model::ModelParams& params, const Dataset& data, const std::vector<std::size_t>& batch,
                       const obj::LossConfig& loss) {
    std::vector<std::string> frozen;
    if (!loss.learn_tau_p) frozen.push_back("log_tau_p");
    ad::Tape tape;
    const model::BoundParams p(tape, params, frozen);

    std::vector<const Tensor*> patches;
    std::vector<const data::TokenSequence*> seqs;
    std::array<Tensor, 3> targets;
    for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t width = data.signatures.at(batch.front())[k].size();
        std::vector<double> rows;
        rows.reserve(batch.size() * width);
        for (std::size_t i : batch) {
            const auto& f = data.signatures.at(i)[k];
            rows.insert(rows.end(), f.begin(), f.end());
        }
        targets[k] = Tensor::matrix(batch.size(), width, std::move(rows));
    }
    for (std::size_t i : batch) {
        patches.push_back(&data.patches.at(i));
        seqs.push_back(&data.tokens.at(i));
    }

    const ad::Var V = model::encode_images(p, patches);
    const model::TextGraph text = model::encode_texts(p, seqs);
    const model::ProjectionGraph proj = model::project_physical(p, text.tokens, text.offsets);
    const ad::Var itc = obj::itc_loss(V, text.globals, p["log_tau"], loss.symmetric_itc);
    const obj::PhyGraph phy = obj::phy_loss(proj.descriptors, targets, p["log_tau_p"], loss.branch_weights);
    const ad::Var total = obj::total_loss(itc, phy.total, loss.lambda);
    tape.backward(total);

    BatchResult r;
    r.loss.total = total.value().item();
    r.loss.itc = itc.value().item();
    for (std::size_t k = 0; k < 3; ++k) r.loss.phy[k] = phy.branch[k].value().item();
    r.grads.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r.grads.push_back(tape.grad(p.at(i)));
    return r;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed ^ static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    return order;
}

nlohmann::json EpochMetrics::to_json() const {
    return nlohmann::json{{"epoch", epoch},          {"lr", lr},
                          {"loss_total", loss.total}, {"loss_itc", loss.itc},
                          {"loss_color", loss.phy[0]}, {"loss_struc", loss.phy[1]},
                          {"loss_tex", loss.phy[2]}};
}

std::string format_metrics_line(const EpochMetrics& m) { return m.to_json().dump(); }

namespace {

std::string batch_dump(const Dataset& data, const std::vector<std::size_t>& batch) {
    std::ostringstream os;
    os << "batch [";
    for (std::size_t i = 0; i < batch.size(); ++i) os << (i ? ", " : "") << data.ids[batch[i]];
    os << "]";
    return os.str();
}

void clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads)
        for (double x : g.data()) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    const double s = max_norm / norm;
    for (auto& g : grads)
        for (double& x : g.data()) x *= s;
}

}  // namespace

TrainResult train(const Dataset& data, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    model_cfg.validate();
    if (data.size() < 2)
        throw ValidationError("training set of " + std::to_string(data.size()) + " samples cannot form a contrastive batch");

    TrainResult result{model::init_params(model_cfg, cfg.seed), {}};
    AdamState state = AdamState::for_params(result.params);
    // a ragged final batch is kept unless it would hold a single pair
    const std::size_t remainder = data.size() % cfg.batch_size;
    const std::size_t per_epoch = data.size() / cfg.batch_size + (remainder >= 2 ? 1 : 0);
    const std::size_t total_steps = per_epoch * cfg.epochs;
    std::size_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto order = epoch_order(data.size(), cfg.seed, epoch);
        EpochMetrics em;
        em.epoch = epoch;
        for (std::size_t b = 0; b < per_epoch; ++b) {
            const std::size_t end = std::min(data.size(), (b + 1) * cfg.batch_size);
            std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(b * cfg.batch_size),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
            double lr = cosine_lr(step, total_steps, cfg.lr, cfg.min_lr);
            if (step < cfg.warmup_steps)
                lr *= static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_steps);
            if (b == 0) em.lr = lr;

            BatchResult r;
            try {
                r = batch_loss(result.params, data, batch, cfg.loss);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what() + "; " + batch_dump(data, batch));
            }
            if (!std::isfinite(r.loss.total))
                throw NumericError("epoch " + std::to_string(epoch) + ": non-finite loss; " + batch_dump(data, batch));
            if (cfg.grad_clip > 0.0) clip_global_norm(r.grads, cfg.grad_clip);
            adam_step(result.params, r.grads, state, lr, cfg.weight_decay);
            ++step;

            em.loss.total += r.loss.total;
            em.loss.itc += r.loss.itc;
            for (std::size_t k = 0; k < 3; ++k) em.loss.phy[k] += r.loss.phy[k];
        }
        const double inv = 1.0 / static_cast<double>(per_epoch);
        em.loss.total *= inv;
        em.loss.itc *= inv;
        for (double& x : em.loss.phy) x *= inv;
        result.metrics.push_back(em);
        if (on_epoch) on_epoch(em, result.params);
    }
    return result;
}

}  // namespace planet::train

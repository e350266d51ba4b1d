// One pass/fail line per acceptance criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "planet/binary_io.hpp"
#include "planet/cli.hpp"
#include "planet/objectives.hpp"
#include "planet/random.hpp"
#include "planet/retrieval.hpp"
#include "planet/signatures.hpp"
#include "planet/synthetic.hpp"
#include "planet/training.hpp"

using namespace planet;
namespace fs = std::filesystem;

namespace {

// desk-scale ablation protocol
constexpr std::size_t kCorpusSize = 2000;
constexpr std::uint64_t kCorpusSeed = 2024;
constexpr std::size_t kEpochs = 40;
constexpr std::size_t kBatch = 32;
constexpr double kLr = 1e-3;
constexpr std::size_t kDim = 32;
constexpr std::size_t kSeeds = 3;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << what << " [" << detail << "]" << std::endl;
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << std::fixed << v;
    return os.str();
}

Image random_image(Rng& rng, std::size_t w, std::size_t h) {
    std::vector<std::uint8_t> px(w * h * 3);
    for (auto& b : px) b = static_cast<std::uint8_t>(rng.below(256));
    return Image(w, h, std::move(px));
}

Image filled(std::size_t w, std::size_t h, const std::function<std::array<std::uint8_t, 3>(std::size_t, std::size_t)>& f) {
    Image img(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const auto c = f(x, y);
            img.set(x, y, c[0], c[1], c[2]);
        }
    return img;
}

Image gray_stripes(std::size_t w, std::size_t h, std::size_t period) {
    return filled(w, h, [&](std::size_t x, std::size_t) {
        const std::uint8_t v = (x % period) < period / 2 ? 255 : 0;
        return std::array<std::uint8_t, 3>{v, v, v};
    });
}

Image gray_checker(std::size_t w, std::size_t h, std::size_t cell) {
    return filled(w, h, [&](std::size_t x, std::size_t y) {
        const std::uint8_t v = ((x / cell + y / cell) % 2 == 0) ? 255 : 0;
        return std::array<std::uint8_t, 3>{v, v, v};
    });
}

std::string sci(double v) {
    std::ostringstream os;
    os.precision(2);
    os << std::scientific << v;
    return os.str();
}

double sum_of(const std::vector<double>& v, std::size_t from, std::size_t count) {
    double s = 0.0;
    for (std::size_t i = from; i < from + count; ++i) s += v[i];
    return s;
}

void criterion_signature_properties() {
    const auto t0 = std::chrono::steady_clock::now();
    const sig::SignatureConfig cfg;
    Rng rng(101);
    std::vector<Image> images;
    for (int i = 0; i < 200; ++i) images.push_back(random_image(rng, 8 + rng.below(41), 8 + rng.below(41)));
    for (int i = 0; i < 5; ++i) {
        const auto c = static_cast<std::uint8_t>(rng.below(256));
        images.push_back(filled(16 + 4 * i, 16, [&](std::size_t, std::size_t) { return std::array<std::uint8_t, 3>{c, 255, 0}; }));
        images.push_back(gray_checker(16 + 4 * i, 20, 1 + i));
        images.push_back(gray_stripes(24, 12 + 4 * i, 2 + 2 * i).rotated90());
        Image delta(12 + i, 12 + i);
        delta.set(rng.below(12), rng.below(12), 255, 255, 255);
        images.push_back(delta);
    }

    std::size_t sum_bad = 0, shift_bad = 0;
    for (const auto& img : images) {
        const auto s = sig::mine_signature(img, cfg);
        const std::size_t b = cfg.color_bins;
        for (double total : {sum_of(s.color, 0, b), sum_of(s.color, b, b), sum_of(s.color, 2 * b, b),
                             sum_of(s.structure, 0, cfg.struct_bins), sum_of(s.texture, 0, cfg.texture_bins)})
            if (std::abs(total - 1.0) > 1e-9) ++sum_bad;
        const auto shifted = sig::mine_signature(img.shifted(rng.below(img.width()), rng.below(img.height())), cfg);
        if (shifted.combined != s.combined) ++shift_bad;
    }

    // solid image: nothing in the structure set and no Laplacian energy
    const Image solid = filled(20, 20, [](std::size_t, std::size_t) { return std::array<std::uint8_t, 3>{90, 30, 200}; });
    const auto flat = sig::mine_signature(solid, cfg);
    bool fallback = true;
    for (double v : flat.structure) fallback &= v == 1.0 / static_cast<double>(cfg.struct_bins);
    fallback &= flat.texture[0] == 1.0;
    const double secs = seconds_since(t0);
    report(1, sum_bad == 0 && shift_bad == 0 && fallback && secs < 30.0,
           "signature histograms are distributions, shift-equivariant, with specified fallbacks",
           std::to_string(images.size()) + " images, " + std::to_string(sum_bad) + " bad sums, " +
               std::to_string(shift_bad) + " shift mismatches, fallbacks " + (fallback ? "ok" : "wrong") + ", " +
               fmt(secs, 2) + " s");
}

void criterion_hand_cases() {
    const sig::SignatureConfig cfg;
    const Image red = filled(16, 16, [](std::size_t, std::size_t) { return std::array<std::uint8_t, 3>{255, 0, 0}; });
    const auto c = sig::color_signature(red, cfg.color_bins);
    const bool red_ok = c[15] == 1.0 && c[16] == 1.0 && c[32] == 1.0;

    const Image stripes = gray_stripes(32, 32, 8);
    const bool vert_ok = sig::structure_signature(stripes, cfg).histogram[0] == 1.0;
    const bool rot_ok = sig::structure_signature(stripes.rotated90(), cfg).histogram[cfg.struct_bins / 2] == 1.0;
    const bool checker_ok = sig::texture_signature(gray_checker(16, 16, 1), cfg).histogram[cfg.texture_bins - 1] == 1.0;
    report(2, red_ok && vert_ok && rot_ok && checker_ok, "hand-computable signature cases match exactly",
           std::string("red ") + (red_ok ? "ok" : "wrong") + ", stripes " + (vert_ok ? "ok" : "wrong") +
               ", rotated stripes " + (rot_ok ? "ok" : "wrong") + ", checkerboard " + (checker_ok ? "ok" : "wrong"));
}

void criterion_gradient() {
    const auto t0 = std::chrono::steady_clock::now();
    auto corpus = data::make_synthetic(4, 3);
    std::vector<std::string> texts;
    std::unordered_map<std::string, std::vector<double>> sigs;
    const sig::SignatureConfig sc;
    for (std::size_t i = 0; i < 4; ++i) {
        texts.push_back(corpus.samples[i].text);
        sigs[corpus.samples[i].id] = sig::mine_signature(corpus.images[i], sc).combined;
    }
    const auto vocab = data::build_vocab(texts);
    model::ModelConfig mc;
    mc.dim = 16;
    mc.vocab_size = vocab.size();
    const auto ds = train::make_dataset(corpus.samples, corpus.images, sigs, sc, vocab, mc);
    const auto params = model::init_params(mc, 5);
    const std::vector<std::size_t> batch{0, 1, 2, 3};
    const obj::LossConfig loss;
    const auto analytic = train::batch_loss(params, ds, batch, loss);
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto f = [&](const Tensor& theta) {
            model::ModelParams q = params;
            q.tensor(i) = theta;
            return train::batch_loss(q, ds, batch, loss).loss.total;
        };
        worst = std::max(worst, finite_diff_check(f, params.tensor(i), analytic.grads[i], 1e-5));
    }
    const double secs = seconds_since(t0);
    report(3, worst < 1e-4 && secs < 60.0, "full-model gradient agrees with central differences",
           std::to_string(params.size()) + " tensors, max relative error " + sci(worst) + ", " +
               fmt(secs, 2) + " s");
}

void criterion_losses() {
    double worst = 0.0;
    for (std::size_t n : {2u, 4u, 8u})
        worst = std::max(worst, std::abs(obj::info_nce(Tensor(Shape{n, n}, 0.5), 0.07) - std::log(static_cast<double>(n))));
    const double two = obj::info_nce(Tensor::matrix(2, 2, {1, 0, 0, 1}), 1.0);
    const double two_err = std::abs(two - std::log(1.0 + std::exp(-1.0)));
    Rng rng(7);
    bool identity = true;
    for (int i = 0; i < 100; ++i) {
        const double itc = rng.uniform(0.0, 6.0), phy = rng.uniform(0.0, 6.0);
        identity &= obj::total_loss(itc, phy, 0.0) == itc;
    }
    report(4, worst < 1e-9 && two_err < 1e-9 && identity, "loss closed forms and the lambda = 0 identity",
           "ln N error " + sci(worst) + ", two-pair error " + sci(two_err) + ", identity " +
               (identity ? "bit-exact" : "broken"));
}

std::vector<std::size_t> full_sort(std::span<const double> row) {
    std::vector<std::size_t> idx(row.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    return idx;
}

void criterion_retrieval() {
    Rng rng(55);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t q = 1 + rng.below(64), g = 1 + rng.below(128);
        eval::SimilarityMatrix sim;
        sim.scores = Tensor(Shape{q, g}, 0.0);
        for (double& v : sim.scores.data()) v = trial % 2 ? std::floor(rng.uniform(0.0, 5.0)) : rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < q; ++i) sim.ground_truth.push_back(rng.below(g));
        std::vector<eval::GeoPoint> coords(g);
        for (auto& c : coords) c = {35.0 + rng.uniform(-0.002, 0.002), 139.0 + rng.uniform(-0.002, 0.002)};

        std::array<std::size_t, 3> hits{};
        std::size_t near = 0;
        for (std::size_t i = 0; i < q; ++i) {
            const auto order = full_sort(sim.scores.row(i));
            const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), sim.ground_truth[i]) - order.begin());
            hits[0] += pos < 1;
            hits[1] += pos < 5;
            hits[2] += pos < 10;
            const auto& a = coords[order.front()];
            const auto& b = coords[sim.ground_truth[i]];
            const double r = std::numbers::pi / 180.0;
            const double h = std::pow(std::sin((b.lat - a.lat) * r / 2), 2) +
                             std::cos(a.lat * r) * std::cos(b.lat * r) * std::pow(std::sin((b.lon - a.lon) * r / 2), 2);
            near += 2.0 * 6371000.0 * std::asin(std::min(1.0, std::sqrt(h))) < 150.0;
        }
        const double qd = static_cast<double>(q);
        mismatches += eval::recall_at_k(sim, 1) != hits[0] / qd;
        mismatches += eval::recall_at_k(sim, 5) != hits[1] / qd;
        mismatches += eval::recall_at_k(sim, 10) != hits[2] / qd;
        mismatches += eval::localization_at(sim, coords, 150.0) != near / qd;
    }
    const double arc = eval::haversine(0, 0, 0, 1);
    bool exact = eval::haversine(10, 20, 10, 20) == 0.0;
    for (int i = 0; i < 100; ++i) {
        const double a = rng.uniform(-90, 90), b = rng.uniform(-180, 180), c = rng.uniform(-90, 90), d = rng.uniform(-180, 180);
        exact &= eval::haversine(a, b, c, d) == eval::haversine(c, d, a, b);
        exact &= eval::haversine(a, b, a, b) == 0.0;
    }
    report(5, mismatches == 0 && std::abs(arc - 111194.93) <= 1.0 && exact,
           "retrieval metrics equal brute-force oracles; haversine cases",
           std::to_string(mismatches) + " metric mismatches over 100 matrices, equator degree " + fmt(arc, 2) +
               " m, symmetry and zero distance " + (exact ? "exact" : "inexact"));
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "planet");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

void criterion_determinism() {
    const fs::path root = fs::temp_directory_path() / "planet_acceptance_determinism";
    fs::remove_all(root);
    bool ok = cli({"synth", "--n", "120", "--seed", "9", "--out", (root / "data").string()}) == 0;
    ok = ok && cli({"extract", "--manifest", (root / "data" / "manifest.jsonl").string(), "--out",
                    (root / "sig.bin").string()}) == 0;
    for (const char* run : {"a", "b"})
        ok = ok && cli({"train", "--manifest", (root / "data" / "manifest.jsonl").string(), "--cache",
                        (root / "sig.bin").string(), "--out", (root / run).string(), "--epochs", "3", "--seed", "7",
                        "--lr", "1e-3", "--batch-size", "16", "--set", "dim=16"}) == 0;
    bool same = false;
    if (ok)
        same = read_file(root / "a" / "checkpoint.plnt") == read_file(root / "b" / "checkpoint.plnt") &&
               read_file(root / "a" / "metrics.jsonl") == read_file(root / "b" / "metrics.jsonl");
    fs::remove_all(root);
    report(6, ok && same, "identical train runs give byte-identical checkpoints and metrics logs",
           !ok ? "pipeline failed" : (same ? "checkpoints and logs identical" : "artifacts differ"));
}

struct Variant {
    std::string name;
    double lambda;
    std::array<double, 3> weights;
};

struct Outcome {
    double r1 = 0.0;
    std::array<double, 3> align{};
};

void criteria_ablation() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto corpus = data::make_synthetic(kCorpusSize, kCorpusSeed);
    const sig::SignatureConfig sc;
    std::unordered_map<std::string, std::vector<double>> sigs;
    std::vector<data::Sample> train_s, test_s;
    std::vector<Image> train_i, test_i;
    for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
        sigs[corpus.samples[i].id] = sig::mine_signature(corpus.images[i], sc).combined;
        const bool is_train = corpus.samples[i].split == data::Split::Train;
        (is_train ? train_s : test_s).push_back(corpus.samples[i]);
        (is_train ? train_i : test_i).push_back(corpus.images[i]);
    }
    std::vector<std::string> texts;
    for (const auto& s : train_s) texts.push_back(s.text);
    const auto vocab = data::build_vocab(texts);
    model::ModelConfig mc;
    mc.dim = kDim;
    mc.vocab_size = vocab.size();
    mc.match_signatures(sc);
    const auto train_ds = train::make_dataset(train_s, train_i, sigs, sc, vocab, mc);
    const auto test_ds = train::make_dataset(test_s, test_i, sigs, sc, vocab, mc);

    const double third = 1.0 / 3.0;
    const std::vector<Variant> variants{{"baseline (lambda 0)", 0.0, {third, third, third}},
                                        {"colour only", 1.0, {third, 0.0, 0.0}},
                                        {"structure only", 1.0, {0.0, third, 0.0}},
                                        {"texture only", 1.0, {0.0, 0.0, third}},
                                        {"full", 1.0, {third, third, third}}};
    std::vector<Outcome> mean(variants.size());
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        for (std::size_t v = 0; v < variants.size(); ++v) {
            train::TrainConfig tc;
            tc.epochs = kEpochs;
            tc.batch_size = kBatch;
            tc.lr = kLr;
            tc.seed = seed;
            tc.loss.lambda = variants[v].lambda;
            tc.loss.branch_weights = variants[v].weights;
            const auto result = train::train(train_ds, mc, tc);
            const auto sim = eval::score_pairs(result.params, vocab, test_s, test_i);
            mean[v].r1 += eval::recall_at_k(sim, 1) / kSeeds;
            for (std::size_t i = 0; i < test_ds.size(); ++i) {
                const auto text = model::encode_text(test_ds.tokens[i], result.params);
                const auto desc = model::project_physical(text.tokens, text.valid_len, result.params);
                for (std::size_t k = 0; k < 3; ++k) {
                    const auto d = desc.descriptors[k].data();
                    const auto& f = test_ds.signatures[i][k];
                    const bool hit = std::max_element(d.begin(), d.end()) - d.begin() ==
                                     std::max_element(f.begin(), f.end()) - f.begin();
                    mean[v].align[k] += hit ? 1.0 / static_cast<double>(test_ds.size() * kSeeds) : 0.0;
                }
            }
            std::cout << "  ablation seed " << seed << " " << variants[v].name << ": R@1 "
                      << fmt(eval::recall_at_k(sim, 1)) << std::endl;
        }
    }
    const double secs = seconds_since(t0);

    std::size_t best_single = 1;
    for (std::size_t v = 2; v <= 3; ++v)
        if (mean[v].r1 > mean[best_single].r1) best_single = v;
    const double base = mean[0].r1, single = mean[best_single].r1, full = mean[4].r1;
    std::ostringstream d7;
    d7 << "mean held-out R@1 over " << kSeeds << " seeds: full " << fmt(full) << ", best single (" << variants[best_single].name
       << ") " << fmt(single) << ", baseline " << fmt(base);
    for (std::size_t v = 1; v <= 3; ++v) d7 << ", " << variants[v].name << " " << fmt(mean[v].r1);
    d7 << "; " << test_s.size() << " queries, " << fmt(secs / 60.0, 1) << " min";
    report(7, full > single && single > base && secs < 1800.0,
           "ablation ordering full > best single branch > lambda 0 on held-out R@1", d7.str());

    const double color_chance = 2.0 / static_cast<double>(sc.color_dim());
    const double struct_chance = 2.0 / static_cast<double>(sc.struct_bins);
    const auto& fa = mean[4].align;
    const auto& ba = mean[0].align;
    std::ostringstream d8;
    d8 << "argmax agreement colour " << fmt(fa[0], 3) << " vs baseline " << fmt(ba[0], 3) << " (chance 2/B "
       << fmt(color_chance, 3) << "), structure " << fmt(fa[1], 3) << " vs baseline " << fmt(ba[1], 3) << " (chance 2/B "
       << fmt(struct_chance, 3) << "); 70% target " << (fa[0] >= 0.7 && fa[1] >= 0.7 ? "met" : "not met")
       << "; baseline below chance bound " << (ba[0] < color_chance && ba[1] < struct_chance ? "yes" : "no");
    report(8, fa[0] > ba[0] && fa[1] > ba[1], "physical descriptors align with mined signatures beyond the baseline",
           d8.str());
}

}  // namespace

int main() {
    criterion_signature_properties();
    criterion_hand_cases();
    criterion_gradient();
    criterion_losses();
    criterion_retrieval();
    criterion_determinism();
    criteria_ablation();
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}

#include "planet/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include "planet/errors.hpp"
#include "planet/ppm.hpp"

namespace planet::eval {

void SimilarityMatrix::validate() const {
    if (scores.rank() != 2) throw ValidationError("similarity matrix must be two-dimensional");
    if (queries() == 0 || gallery() == 0) throw ValidationError("empty query or gallery set");
    if (ground_truth.size() != queries()) throw ValidationError("every query needs exactly one ground-truth entry");
    for (std::size_t g : ground_truth)
        if (g >= gallery()) throw ValidationError("ground-truth index outside the gallery");
}

Tensor similarity_matrix(const Tensor& text, const Tensor& images) {
    if (text.cols() != images.cols()) throw DimensionError("similarity_matrix: embedding widths differ");
    return matmul_nt(text, images);
}

std::size_t rank_of(std::span<const double> row, std::size_t target) {
    const double s = row[target];
    std::size_t rank = 0;
    for (std::size_t j = 0; j < row.size(); ++j)
        if (row[j] > s || (row[j] == s && j < target)) ++rank;
    return rank;
}

std::size_t top1(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

double recall_at_k(const SimilarityMatrix& sim, std::size_t k) {
    if (k == 0) throw DomainError("recall_at_k: k must be at least 1");
    sim.validate();
    k = std::min(k, sim.gallery());
    std::size_t hits = 0;
    for (std::size_t q = 0; q < sim.queries(); ++q)
        if (rank_of(sim.scores.row(q), sim.ground_truth[q]) < k) ++hits;
    return static_cast<double>(hits) / static_cast<double>(sim.queries());
}

double haversine(double lat1, double lon1, double lat2, double lon2) {
    for (double lat : {lat1, lat2})
        if (!(lat >= -90.0 && lat <= 90.0)) throw ValidationError("latitude outside [-90, 90]");
    for (double lon : {lon1, lon2})
        if (!(lon >= -180.0 && lon <= 180.0)) throw ValidationError("longitude outside [-180, 180]");
    constexpr double rad = std::numbers::pi / 180.0;
    const double dphi = (lat2 - lat1) * rad;
    const double dlambda = (lon2 - lon1) * rad;
    const double a = std::pow(std::sin(dphi / 2.0), 2) +
                     std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::pow(std::sin(dlambda / 2.0), 2);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::clamp(a, 0.0, 1.0)));
}

double localization_at(const SimilarityMatrix& sim, const std::vector<GeoPoint>& gallery_coords, double meters) {
    sim.validate();
    if (gallery_coords.size() != sim.gallery()) throw DataError("every gallery entry needs coordinates");
    std::size_t hits = 0;
    for (std::size_t q = 0; q < sim.queries(); ++q) {
        const std::size_t best = top1(sim.scores.row(q));
        if (haversine(gallery_coords[best], gallery_coords[sim.ground_truth[q]]) < meters) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(sim.queries());
}

namespace {

Metrics compute_metrics(const SimilarityMatrix& sim, const std::vector<GeoPoint>& coords,
                        const std::vector<double>& distances) {
    Metrics m;
    m.queries = sim.queries();
    m.r1 = recall_at_k(sim, 1);
    m.r5 = recall_at_k(sim, 5);
    m.r10 = recall_at_k(sim, 10);
    for (double d : distances) m.localization[d] = localization_at(sim, coords, d);
    return m;
}

SimilarityMatrix rows_subset(const SimilarityMatrix& sim, const std::vector<std::size_t>& rows) {
    SimilarityMatrix out;
    std::vector<double> values;
    for (std::size_t r : rows) {
        const auto row = sim.scores.row(r);
        values.insert(values.end(), row.begin(), row.end());
        out.query_ids.push_back(sim.query_ids.empty() ? std::string() : sim.query_ids[r]);
        out.ground_truth.push_back(sim.ground_truth[r]);
    }
    out.scores = Tensor::matrix(rows.size(), sim.gallery(), std::move(values));
    out.gallery_ids = sim.gallery_ids;
    return out;
}

std::string distance_label(double d) {
    std::ostringstream os;
    os << "L@" << d;
    return os.str();
}

nlohmann::json metrics_json(const Metrics& m) {
    nlohmann::json j{{"queries", m.queries}, {"R@1", m.r1}, {"R@5", m.r5}, {"R@10", m.r10}};
    for (const auto& [d, v] : m.localization) j[distance_label(d)] = v;
    return j;
}

}  // namespace

EvalReport summarize(const SimilarityMatrix& sim, const std::vector<GeoPoint>& gallery_coords,
                     const std::vector<std::string>& query_regions, const std::vector<double>& distances) {
    EvalReport report;
    report.gallery = sim.gallery();
    report.overall = compute_metrics(sim, gallery_coords, distances);
    if (!query_regions.empty()) {
        if (query_regions.size() != sim.queries()) throw DimensionError("one region label per query required");
        const std::set<std::string> names(query_regions.begin(), query_regions.end());
        for (const auto& name : names) {
            std::vector<std::size_t> rows;
            for (std::size_t q = 0; q < query_regions.size(); ++q)
                if (query_regions[q] == name) rows.push_back(q);
            report.regions.push_back({name, compute_metrics(rows_subset(sim, rows), gallery_coords, distances)});
        }
    }
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j = metrics_json(overall);
    j["mode"] = mode;
    j["holdout"] = holdout ? nlohmann::json(*holdout) : nlohmann::json(nullptr);
    j["gallery"] = gallery;
    nlohmann::json regs = nlohmann::json::object();
    for (const auto& r : regions) regs[r.region] = metrics_json(r.metrics);
    j["regions"] = regs;
    return j;
}

std::string EvalReport::to_table() const {
    std::vector<std::string> header{"scope", "queries", "R@1", "R@5", "R@10"};
    for (const auto& [d, v] : overall.localization) header.push_back(distance_label(d));
    std::vector<std::vector<std::string>> rows;
    auto add_row = [&](const std::string& scope, const Metrics& m) {
        std::vector<std::string> row{scope, std::to_string(m.queries)};
        auto pct = [](double x) {
            std::ostringstream os;
            os << std::fixed << std::setprecision(2) << 100.0 * x;
            return os.str();
        };
        row.push_back(pct(m.r1));
        row.push_back(pct(m.r5));
        row.push_back(pct(m.r10));
        for (const auto& [d, v] : m.localization) row.push_back(pct(v));
        rows.push_back(std::move(row));
    };
    add_row("all", overall);
    for (const auto& r : regions) add_row(r.region, r.metrics);

    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    os << "mode: " << mode;
    if (holdout) os << "  holdout: " << *holdout;
    os << "  gallery: " << gallery << "\n";
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0)
                os << std::left << std::setw(static_cast<int>(width[c])) << row[c];
            else
                os << "  " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
        }
        os << "\n";
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    return os.str();
}

std::string mode_name(EvalMode m) {
    switch (m) {
        case EvalMode::InDomain: return "in-domain";
        case EvalMode::CrossDomain: return "cross-domain";
        case EvalMode::Train: return "train";
    }
    return "?";
}

std::vector<std::size_t> select_samples(const std::vector<data::Sample>& samples, const EvalSpec& spec) {
    if (spec.mode == EvalMode::CrossDomain && !spec.holdout)
        throw UsageError("cross-domain evaluation needs a held-out region");
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!s.split) throw ValidationError("sample '" + s.id + "' has no split label");
        const bool held = spec.holdout && s.region == *spec.holdout;
        bool take = false;
        switch (spec.mode) {
            case EvalMode::InDomain: take = *s.split == data::Split::Test && !held; break;
            case EvalMode::CrossDomain: take = *s.split == data::Split::Test && held; break;
            case EvalMode::Train: take = *s.split == data::Split::Train && !held; break;
        }
        if (take) picked.push_back(i);
    }
    if (spec.max_queries > 0 && picked.size() > spec.max_queries) picked.resize(spec.max_queries);
    if (picked.empty()) throw ValidationError("no samples match the " + mode_name(spec.mode) + " selection");
    return picked;
}

SimilarityMatrix score_pairs(const model::ModelParams& params, const data::Vocabulary& vocab,
                             const std::vector<data::Sample>& samples, const std::vector<Image>& images) {
    if (samples.empty()) throw ValidationError("empty query or gallery set");
    if (samples.size() != images.size()) throw DimensionError("score_pairs: one image per sample required");
    const model::ModelConfig& cfg = params.config();
    ad::Tape tape;
    const model::BoundParams p(tape, params);

    std::vector<Tensor> patches;
    std::vector<data::TokenSequence> seqs;
    patches.reserve(images.size());
    for (const auto& img : images) patches.push_back(model::image_patches(img, cfg));
    for (const auto& s : samples) {
        seqs.push_back(data::tokenize(s.text, vocab, cfg.max_len));
        if (seqs.back().valid_len == 0) throw DataError("description of '" + s.id + "' has no tokens");
    }
    std::vector<const Tensor*> pp;
    std::vector<const data::TokenSequence*> sp;
    for (const auto& t : patches) pp.push_back(&t);
    for (const auto& t : seqs) sp.push_back(&t);
    const Tensor v = model::encode_images(p, pp).value();
    const Tensor t = model::encode_texts(p, sp).globals.value();

    SimilarityMatrix sim;
    sim.scores = similarity_matrix(t, v);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        sim.query_ids.push_back(samples[i].id);
        sim.gallery_ids.push_back(samples[i].id);
        sim.ground_truth.push_back(i);
    }
    return sim;
}

EvalReport evaluate(const model::Checkpoint& ckpt, const data::Manifest& manifest, const EvalSpec& spec) {
    const auto picked = select_samples(manifest.samples, spec);
    std::vector<data::Sample> samples;
    std::vector<Image> images;
    std::vector<GeoPoint> coords;
    std::vector<std::string> regions;
    for (std::size_t i : picked) {
        const auto& s = manifest.samples[i];
        try {
            images.push_back(data::read_ppm(manifest.image_path(s)));
        } catch (const Error& e) {
            throw DataError("image for '" + s.id + "': " + e.what());
        }
        samples.push_back(s);
        coords.push_back({s.lat, s.lon});
        regions.push_back(s.region);
    }
    const SimilarityMatrix sim = score_pairs(ckpt.params, ckpt.vocab, samples, images);
    EvalReport report = summarize(sim, coords, regions, spec.distances);
    report.mode = mode_name(spec.mode);
    report.holdout = spec.holdout;
    return report;
}

}  // namespace planet::eval

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fixture.hpp"
#include "planet/errors.hpp"
#include "planet/retrieval.hpp"
#include "support.hpp"

using namespace planet;
using namespace planet::testing;

namespace {

eval::SimilarityMatrix make_sim(Tensor scores, std::vector<std::size_t> gt) {
    eval::SimilarityMatrix s;
    for (std::size_t i = 0; i < scores.rows(); ++i) s.query_ids.push_back("q" + std::to_string(i));
    for (std::size_t j = 0; j < scores.cols(); ++j) s.gallery_ids.push_back("g" + std::to_string(j));
    s.scores = std::move(scores);
    s.ground_truth = std::move(gt);
    return s;
}

// full sort: descending score, lower index first on ties
std::vector<std::size_t> sorted_gallery(std::span<const double> row) {
    std::vector<std::size_t> idx(row.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    return idx;
}

double oracle_recall(const eval::SimilarityMatrix& s, std::size_t k) {
    std::size_t hits = 0;
    for (std::size_t q = 0; q < s.queries(); ++q) {
        const auto order = sorted_gallery(s.scores.row(q));
        const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), s.ground_truth[q]) - order.begin());
        if (pos < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(s.queries());
}

double oracle_haversine(double lat1, double lon1, double lat2, double lon2) {
    const double r = std::numbers::pi / 180.0;
    const double a = std::pow(std::sin((lat2 - lat1) * r / 2), 2) +
                     std::cos(lat1 * r) * std::cos(lat2 * r) * std::pow(std::sin((lon2 - lon1) * r / 2), 2);
    return 2.0 * 6371000.0 * std::asin(std::min(1.0, std::sqrt(a)));
}

double oracle_localization(const eval::SimilarityMatrix& s, const std::vector<eval::GeoPoint>& coords, double d) {
    std::size_t hits = 0;
    for (std::size_t q = 0; q < s.queries(); ++q) {
        const std::size_t best = sorted_gallery(s.scores.row(q)).front();
        const auto& a = coords[best];
        const auto& b = coords[s.ground_truth[q]];
        if (oracle_haversine(a.lat, a.lon, b.lat, b.lon) < d) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(s.queries());
}

}  // namespace

TEST_CASE("rank and recall examples") {
    const std::vector<double> row{0.1, 0.9, 0.9, 0.3};
    CHECK(eval::top1(row) == 1);
    CHECK(eval::rank_of(row, 1) == 0);
    CHECK(eval::rank_of(row, 2) == 1);
    CHECK(eval::rank_of(row, 0) == 3);

    const auto eye = make_sim(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}), {0, 1, 2});
    CHECK(eval::recall_at_k(eye, 1) == 1.0);
    const auto rev = make_sim(Tensor::matrix(2, 3, {0, 0, 1, 1, 0, 0}), {0, 1});
    CHECK(eval::recall_at_k(rev, 1) == 0.0);
    CHECK(eval::recall_at_k(rev, 2) == 1.0);
    CHECK(eval::recall_at_k(rev, 100) == 1.0);
    CHECK_THROWS_AS(eval::recall_at_k(rev, 0), DomainError);

    const auto half = make_sim(Tensor::matrix(2, 3, {0, 0, 1, 0, 0, 1}), {0, 1});
    CHECK(eval::recall_at_k(half, 2) == 0.5);
    CHECK(eval::recall_at_k(half, 3) == 1.0);

    const auto one = make_sim(Tensor::matrix(2, 1, {0.2, -0.4}), {0, 0});
    CHECK(eval::recall_at_k(one, 1) == 1.0);

    auto bad = make_sim(Tensor::matrix(1, 2, {0, 1}), {5});
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("recall and localization equal brute-force oracles") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t q = 1 + rng.below(64), g = 1 + rng.below(128);
        Tensor scores(Shape{q, g}, 0.0);
        // coarse levels on odd trials force many ties
        for (double& v : scores.data()) v = trial % 2 ? std::floor(rng.uniform(0.0, 4.0)) : rng.uniform(-1.0, 1.0);
        std::vector<std::size_t> gt(q);
        for (auto& t : gt) t = rng.below(g);
        const auto sim = make_sim(scores, gt);
        for (std::size_t k : {1u, 5u, 10u}) CHECK(eval::recall_at_k(sim, k) == oracle_recall(sim, k));

        std::vector<eval::GeoPoint> coords(g);
        for (auto& c : coords) c = {48.85 + rng.uniform(-0.003, 0.003), 2.35 + rng.uniform(-0.004, 0.004)};
        CHECK(eval::localization_at(sim, coords, 150.0) == oracle_localization(sim, coords, 150.0));
    }
}

TEST_CASE("recall is invariant to strictly increasing score transforms") {
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t q = 2 + rng.below(20), g = 2 + rng.below(30);
        Tensor scores = random_tensor(rng, {q, g});
        std::vector<std::size_t> gt(q);
        for (auto& t : gt) t = rng.below(g);
        Tensor warped = scores;
        for (double& v : warped.data()) v = std::exp(3.0 * v) + 2.0;
        const auto a = make_sim(scores, gt), b = make_sim(warped, gt);
        double prev = 0.0;
        for (std::size_t k = 1; k <= g; ++k) {
            CHECK(eval::recall_at_k(a, k) == eval::recall_at_k(b, k));
            CHECK(eval::recall_at_k(a, k) >= prev);
            prev = eval::recall_at_k(a, k);
        }
        CHECK(prev == 1.0);
    }
}

TEST_CASE("haversine") {
    CHECK(std::abs(eval::haversine(0, 0, 0, 1) - 111194.93) < 1.0);
    CHECK(std::abs(eval::haversine(0, 0, 0, 1) - 6371000.0 * std::numbers::pi / 180.0) < 1e-6);
    CHECK(eval::haversine(12.5, -7.25, 12.5, -7.25) == 0.0);
    CHECK(std::abs(eval::haversine(90, 0, -90, 0) - 6371000.0 * std::numbers::pi) < 1e-6);
    CHECK(std::abs(eval::haversine(90, 0, 90, 135)) < 1e-6);
    CHECK_THROWS_AS(eval::haversine(91, 0, 0, 0), ValidationError);
    CHECK_THROWS_AS(eval::haversine(0, 181, 0, 0), ValidationError);

    Rng rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        const double la1 = rng.uniform(-90, 90), lo1 = rng.uniform(-180, 180);
        const double la2 = rng.uniform(-90, 90), lo2 = rng.uniform(-180, 180);
        const double la3 = rng.uniform(-90, 90), lo3 = rng.uniform(-180, 180);
        const double ab = eval::haversine(la1, lo1, la2, lo2);
        CHECK(ab == eval::haversine(la2, lo2, la1, lo1));
        CHECK(ab >= 0.0);
        CHECK(std::abs(ab - oracle_haversine(la1, lo1, la2, lo2)) < 1e-6);
        CHECK(ab <= eval::haversine(la1, lo1, la3, lo3) + eval::haversine(la3, lo3, la2, lo2) + 1e-6);
    }
}

TEST_CASE("localization on a crafted case") {
    // gallery 0..3 along the equator, 100 m apart; gallery 4 far away
    const double step = 100.0 / (6371000.0 * std::numbers::pi / 180.0);
    std::vector<eval::GeoPoint> coords{{0, 0}, {0, step}, {0, 2 * step}, {0, 3 * step}, {10, 10}};
    Tensor s(Shape{5, 5}, 0.0);
    s.at(0, 0) = 1;  // exact hit
    s.at(1, 0) = 1;  // 100 m off
    s.at(2, 0) = 1;  // 200 m off
    s.at(3, 4) = 1;  // far off
    s.at(4, 4) = 1;  // exact hit
    const auto sim = make_sim(s, {0, 1, 2, 3, 4});
    CHECK(eval::localization_at(sim, coords, 150.0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(eval::localization_at(sim, coords, 250.0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(eval::localization_at(sim, coords, 100.0 - 1e-6) == doctest::Approx(0.4).epsilon(1e-15));
    double prev = 0.0;
    for (double d : {1.0, 50.0, 150.0, 250.0, 1e7}) {
        const double l = eval::localization_at(sim, coords, d);
        CHECK(l >= prev);
        prev = l;
    }
    CHECK_THROWS_AS(eval::localization_at(sim, {coords.begin(), coords.begin() + 3}, 150.0), DataError);
}

TEST_CASE("report formats carry the same numbers") {
    const auto sim = make_sim(Tensor::matrix(2, 2, {1, 0, 1, 0}), {0, 1});
    const auto report = eval::summarize(sim, {{0, 0}, {0, 0.5}}, {"a", "b"}, {150.0});
    CHECK(report.overall.r1 == 0.5);
    CHECK(report.overall.localization.at(150.0) == 0.5);
    CHECK(report.regions.size() == 2);
    const auto j = report.to_json();
    CHECK(j.dump().find("R@1") != std::string::npos);
    CHECK(j.dump().find("L@150") != std::string::npos);
    CHECK(report.to_table().find("50.00") != std::string::npos);
}

TEST_CASE("sample selection by mode") {
    std::vector<data::Sample> samples(6);
    for (std::size_t i = 0; i < 6; ++i) {
        samples[i].id = "s" + std::to_string(i);
        samples[i].region = i < 3 ? "north" : "south";
        samples[i].split = i % 2 ? data::Split::Test : data::Split::Train;
    }
    eval::EvalSpec spec;
    CHECK(eval::select_samples(samples, spec) == std::vector<std::size_t>{1, 3, 5});
    spec.holdout = "south";
    CHECK(eval::select_samples(samples, spec) == std::vector<std::size_t>{1});
    spec.mode = eval::EvalMode::CrossDomain;
    CHECK(eval::select_samples(samples, spec) == std::vector<std::size_t>{3, 5});
    spec.mode = eval::EvalMode::Train;
    CHECK(eval::select_samples(samples, spec) == std::vector<std::size_t>{0, 2});
    spec.holdout = "nowhere";
    spec.mode = eval::EvalMode::CrossDomain;
    CHECK_THROWS_AS(eval::select_samples(samples, spec), ValidationError);
}

TEST_CASE("scored pairs agree with single-example encoders") {
    const auto setup = synthetic_setup(6, 5, 16);
    const auto params = model::init_params(setup.model, 3);
    const auto sim = eval::score_pairs(params, setup.vocab, setup.corpus.samples, setup.corpus.images);
    REQUIRE(sim.queries() == 6);
    for (std::size_t q = 0; q < 6; ++q) {
        CHECK(sim.ground_truth[q] == q);
        const auto t = model::encode_text(data::tokenize(setup.corpus.samples[q].text, setup.vocab, setup.model.max_len),
                                          params);
        for (std::size_t g = 0; g < 6; ++g) {
            const Tensor v = model::encode_image(setup.corpus.images[g], params);
            CHECK(std::abs(sim.scores.at(q, g) - cosine_sim(t.text_global, v)) < 1e-9);
        }
    }
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ciprec/deepcip.hpp"
#include "oracles.hpp"

using namespace ciprec;
using namespace ciprec::deepcip;

namespace {

using PairList = std::vector<std::pair<ItemId, ItemId>>;

// Pair loss evaluated from scratch, used as the finite-difference target.
double reference_loss(const EmbeddingModel& m, std::size_t t, std::size_t c, const std::vector<std::size_t>& negs) {
    auto dotp = [&](std::size_t a, std::size_t b) {
        double s = 0;
        for (std::size_t k = 0; k < m.dim(); ++k) s += m.input(a)[k] * m.output(b)[k];
        return s;
    };
    double loss = std::log1p(std::exp(-dotp(t, c)));
    for (auto n : negs) loss += std::log1p(std::exp(dotp(t, n)));
    return loss;
}

EmbeddingModel random_model(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    EmbeddingModel m(d);
    for (std::size_t i = 0; i < n; ++i) m.add_item(static_cast<ItemId>(i), rng);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (std::size_t r = 0; r < n; ++r) {
        for (auto& x : m.input(r)) x = u(rng);
        for (auto& x : m.output(r)) x = u(rng);
        m.add_count(r, 1 + rng() % 5);
    }
    return m;
}

TrainConfig small_config(std::size_t workers = 1) {
    TrainConfig c;
    c.dim = 32;
    c.window = 3;
    c.epochs = 5;
    c.workers = workers;
    c.seed = 7;
    return c;
}

}  // namespace

TEST_CASE("gen_pairs") {
    const std::vector<ItemId> abc = {1, 2, 3};
    CHECK(gen_pairs(abc, 1) == PairList{{1, 2}, {2, 1}, {2, 3}, {3, 2}});
    CHECK(gen_pairs(std::vector<ItemId>{1}, 4).empty());
    auto w2 = gen_pairs(abc, 2);
    CHECK(w2.size() == 6);
    CHECK(std::count(w2.begin(), w2.end(), std::pair<ItemId, ItemId>{1, 3}) == 1);
    CHECK(std::count(w2.begin(), w2.end(), std::pair<ItemId, ItemId>{3, 1}) == 1);

    for (std::size_t len = 0; len < 15; ++len) {
        std::vector<ItemId> cip(len);
        std::iota(cip.begin(), cip.end(), 0);
        for (std::size_t w = 1; w < 6; ++w) {
            std::size_t expected = 0;
            for (std::size_t t = 0; t < len; ++t) {
                for (std::size_t c = 0; c < len; ++c) {
                    if (c != t && (c > t ? c - t : t - c) <= w) ++expected;
                }
            }
            CHECK(gen_pairs(cip, w).size() == expected);
        }
    }
    CHECK_THROWS_AS(gen_pairs(abc, 0), Error);
}

TEST_CASE("loss at zero output vectors is (1 + k) ln 2") {
    Rng rng(1);
    EmbeddingModel m(8);
    for (ItemId i = 0; i < 4; ++i) m.add_count(m.add_item(i, rng), 1);
    NegativeSampler sampler(m);
    const double loss = sgns_step(m, 0, 1, 5, 0.025, rng, sampler);
    CHECK(loss == doctest::Approx(6.0 * std::numbers::ln2).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(99);
    const double h = 1e-5;
    for (int draw = 0; draw < 100; ++draw) {
        auto m = random_model(rng, 6, 5);
        const std::size_t t = rng() % 6, c = rng() % 6;
        std::vector<std::size_t> negs;
        for (int k = 0; k < 3; ++k) negs.push_back(rng() % 6);
        const auto g = sgns_gradient(m, t, c, negs);
        CHECK(g.loss == doctest::Approx(reference_loss(m, t, c, negs)).epsilon(1e-12));

        double diff2 = 0, norm2 = 0;
        auto probe = [&](double& x, double analytic) {
            const double saved = x;
            x = saved + h;
            const double up = reference_loss(m, t, c, negs);
            x = saved - h;
            const double down = reference_loss(m, t, c, negs);
            x = saved;
            const double numeric = (up - down) / (2 * h);
            diff2 += (numeric - analytic) * (numeric - analytic);
            norm2 += std::max(numeric * numeric, analytic * analytic);
        };
        for (std::size_t k = 0; k < m.dim(); ++k) probe(m.input(t)[k], g.input[k]);
        std::vector<bool> seen(6, false);
        for (const auto& [row, grad] : g.output) {
            seen[row] = true;
            for (std::size_t k = 0; k < m.dim(); ++k) probe(m.output(row)[k], grad[k]);
        }
        // Rows outside the pair have zero gradient.
        for (std::size_t r = 0; r < 6; ++r) {
            if (!seen[r]) probe(m.output(r)[0], 0.0);
        }
        CHECK(std::sqrt(diff2 / norm2) < 1e-4);
    }
}

TEST_CASE("repeated steps on a two-item corpus decrease the loss") {
    Rng rng(4);
    EmbeddingModel m(10);
    m.add_count(m.add_item(1, rng), 3);
    m.add_count(m.add_item(2, rng), 3);
    NegativeSampler sampler(m);
    double prev = sgns_step(m, 1, 2, 5, 0.05, rng, sampler);
    for (int step = 1; step < 100; ++step) {
        const double loss = sgns_step(m, 1, 2, 5, 0.05, rng, sampler);
        REQUIRE(loss < prev);
        prev = loss;
    }
}

TEST_CASE("single-worker training is reproducible") {
    std::vector<std::vector<ItemId>> corpus(20, std::vector<ItemId>{3, 1, 4, 5, 9});
    auto a = train(std::span<const std::vector<ItemId>>(corpus), small_config());
    auto b = train(std::span<const std::vector<ItemId>>(corpus), small_config());
    CHECK(a == b);
    CHECK(a.all_finite());
    CHECK(a.size() == 5);
    CHECK_THROWS_AS(train(std::span<const std::vector<ItemId>>{}, small_config()), Error);
}

TEST_CASE("planted clusters separate for one and four workers") {
    std::mt19937_64 rng(12);
    auto corpus = oracle::planted_clusters(rng, 500);
    for (std::size_t workers : {1u, 4u}) {
        TrainStats stats;
        auto m = train(std::span<const std::vector<ItemId>>(corpus), small_config(workers), nullptr, &stats);
        auto sep = oracle::cluster_separation(
            [&](ItemId i, ItemId j) { return cosine(m.input(*m.row_of(i)), m.input(*m.row_of(j))); });
        CHECK(sep.intra - sep.inter >= 0.2);
        if (workers == 1) {
            REQUIRE(stats.epoch_loss.size() == 5);
            for (std::size_t e = 1; e < 5; ++e) CHECK(stats.epoch_loss[e] <= stats.epoch_loss[e - 1]);
        }

        std::vector<ItemId> query = {0, 1, 2};
        auto sims = most_similar(m, query, 5, query);
        REQUIRE(sims.size() == 5);
        for (ItemId item : sims) CHECK(item < 10);
    }
}

TEST_CASE("cip_vector and most_similar") {
    Rng rng(3);
    EmbeddingModel m(2);
    for (ItemId i = 1; i <= 4; ++i) m.add_item(i, rng);
    auto set_in = [&](ItemId item, double x, double y) {
        auto v = m.input(*m.row_of(item));
        v[0] = x;
        v[1] = y;
    };
    set_in(1, 1.0, 0.0);
    set_in(2, -1.0, 0.0);
    set_in(3, 0.9, 0.1);
    set_in(4, 0.0, 3.0);

    CHECK(cip_vector(m, std::vector<ItemId>{1}) == std::vector<double>{1.0, 0.0});
    CHECK(cip_vector(m, std::vector<ItemId>{1, 2}) == std::vector<double>{0.0, 0.0});
    auto mean = cip_vector(m, std::vector<ItemId>{1, 3, 4, 77});
    CHECK(mean[0] == doctest::Approx((1.0 + 0.9 + 0.0) / 3));
    CHECK(mean[1] == doctest::Approx((0.0 + 0.1 + 3.0) / 3));
    CHECK_THROWS_AS(cip_vector(m, std::vector<ItemId>{77}), Error);

    const std::vector<ItemId> q = {1};
    CHECK(most_similar(m, q, 1, q) == std::vector<ItemId>{3});
    CHECK(most_similar(m, q, 4) == std::vector<ItemId>{1, 3, 4, 2});
    CHECK(most_similar(m, q, 4, std::vector<ItemId>{1, 2, 3, 4}).empty());
    CHECK_THROWS_AS(most_similar(m, std::vector<ItemId>{1, 2}, 3), Error);
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            const double c = cosine(m.input(a), m.input(b));
            CHECK(c >= -1.0);
            CHECK(c <= 1.0);
        }
    }
}

TEST_CASE("warm start keeps the vocabulary and untouched input rows") {
    std::mt19937_64 rng(5);
    auto corpus = oracle::planted_clusters(rng, 60);
    auto base = train(std::span<const std::vector<ItemId>>(corpus), small_config());
    std::vector<std::vector<ItemId>> fresh = {{0, 1, 100, 101}, {100, 2}};
    auto warm = train(std::span<const std::vector<ItemId>>(fresh), small_config(), &base);
    CHECK(warm.size() == base.size() + 2);
    for (std::size_t r = 0; r < base.size(); ++r) {
        const ItemId item = base.item_at(r);
        CHECK(warm.row_of(item) == r);
        const bool retrained = item == 0 || item == 1 || item == 2;
        const bool same = std::equal(base.input(r).begin(), base.input(r).end(), warm.input(r).begin());
        CHECK(same != retrained);
    }
    CHECK(warm.row_of(100));
    CHECK(warm.all_finite());
}

TEST_CASE("binary persistence round trip") {
    std::mt19937_64 rng(6);
    auto corpus = oracle::planted_clusters(rng, 40);
    auto m = train(std::span<const std::vector<ItemId>>(corpus), small_config());
    std::stringstream buf;
    m.save(buf);
    buf << "trailing\n";
    auto loaded = EmbeddingModel::load(buf);
    CHECK(loaded == m);
    std::string rest;
    std::getline(buf, rest);
    CHECK(rest == "trailing");

    std::istringstream bad("CIPREC2 deepcip\n");
    CHECK_THROWS_AS(EmbeddingModel::load(bad), Error);
}

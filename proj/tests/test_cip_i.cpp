#include <doctest.h>

#include <random>
#include <sstream>

#include "ciprec/cip_i.hpp"
#include "oracles.hpp"

using namespace ciprec;
using namespace ciprec::cip_i;

namespace {

constexpr ItemId a = 1, b = 2, c = 3;

ItemScoreStore store_of(const std::vector<std::vector<ItemId>>& cips) {
    ItemScoreStore store;
    for (const auto& cip : cips) store.update_scores(cip);
    return store;
}

}  // namespace

TEST_CASE("update_scores on a single CIP") {
    auto s = store_of({{a, b, c}});
    CHECK(s.score(a, b) == 2.0);
    CHECK(s.score(b, c) == 2.0);
    CHECK(s.score(a, c) == 1.5);
    CHECK(s.score(b, a) == 0.0);
    CHECK(s.card(a) == 1);
    CHECK(s.card(b) == 1);
    CHECK(s.card(c) == 1);

    auto single = store_of({{a}});
    CHECK(single.card(a) == 1);
    CHECK(single.entry_count() == 0);

    auto both = store_of({{a, b}, {b, a}});
    CHECK(both.score(a, b) == 2.0);
    CHECK(both.score(b, a) == 2.0);
    CHECK(both.card(a) == 2);
    CHECK(both.card(b) == 2);

    ItemScoreStore bad;
    CHECK_THROWS_AS(bad.update_scores(std::vector<ItemId>{a, b, a}), Error);
}

TEST_CASE("item similarity") {
    CHECK(store_of({{a, b}, {a, b}}).similarity(a, b) == 1.0);
    CHECK(store_of({{a, b}, {c}}).similarity(a, c) == 0.0);
    CHECK(store_of({{a, b}, {a, c, b}}).similarity(a, b) == 0.875);
    CHECK(ItemScoreStore{}.similarity(a, b) == 0.0);
}

TEST_CASE("store matches the summed definition and stays in [0,1]") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<ItemId>> cips;
        const int count = 1 + static_cast<int>(rng() % 30);
        for (int k = 0; k < count; ++k) cips.push_back(oracle::random_cip(rng, 8, 12));
        auto store = store_of(cips);
        auto ref = oracle::item_scores(cips);
        for (ItemId i = 0; i < 12; ++i) {
            CHECK(store.card(i) == (ref.card.count(i) ? ref.card.at(i) : 0));
            for (ItemId j = 0; j < 12; ++j) {
                const double expected = ref.score.count({i, j}) ? ref.score.at({i, j}) : 0.0;
                CHECK(store.score(i, j) == doctest::Approx(expected).epsilon(1e-12));
                const double sim = store.similarity(i, j);
                CHECK(sim >= 0.0);
                CHECK(sim <= 1.0);
            }
        }
    }
}

TEST_CASE("top_k_items") {
    auto s = store_of({{a, b, c}});
    auto top = s.top_k_items(a, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0] == Neighbor{b, 1.0});
    CHECK(top[1] == Neighbor{c, 0.75});
    CHECK(ItemScoreStore{}.top_k_items(a, 2).empty());
    CHECK(s.top_k_items(c, 2).empty());

    std::mt19937_64 rng(9);
    std::vector<std::vector<ItemId>> cips;
    for (int k = 0; k < 100; ++k) cips.push_back(oracle::random_cip(rng, 6, 25));
    auto store = store_of(cips);
    auto ref = oracle::item_scores(cips);
    for (ItemId i = 0; i < 25; ++i) {
        std::vector<std::pair<double, ItemId>> row;
        for (ItemId j = 0; j < 25; ++j) {
            const double sim = oracle::item_similarity(ref, i, j);
            if (sim > 0) row.emplace_back(-sim, j);
        }
        std::sort(row.begin(), row.end());
        auto got = store.top_k_items(i, 7);
        REQUIRE(got.size() == std::min<std::size_t>(7, row.size()));
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k].similarity == doctest::Approx(-row[k].first).epsilon(1e-12));
        }
    }
}

TEST_CASE("recommend tallies neighbor lists") {
    ItemModel model(60, 2);
    model.ingest(std::vector<Event>{{1, a, 0, {}}, {1, b, 10, {}}, {2, a, 0, {}}, {2, c, 10, {}}});
    model.refresh_neighbors();
    REQUIRE(model.neighbors(a).size() == 2);
    CHECK(model.recommend(std::vector<ItemId>{a}, 5) == std::vector<ItemId>{b, c});
    CHECK(model.recommend(std::vector<ItemId>{a, b, c}, 5).empty());
    CHECK(model.recommend({}, 1) == std::vector<ItemId>{a});
}

TEST_CASE("recommend equals a direct tally on a synthetic instance") {
    std::mt19937_64 rng(13);
    auto events = oracle::random_stream(rng, 300, 15, 20);
    ItemModel model(2, 4);
    model.ingest(events);
    model.refresh_neighbors();
    auto profiles = oracle::profiles_of(events);
    for (const auto& [u, p] : profiles) {
        std::map<ItemId, int> tally;
        for (ItemId r : p) {
            for (const auto& nb : model.store().top_k_items(r, 4)) {
                if (oracle::position_of(p, nb.item) < 0) ++tally[nb.item];
            }
        }
        std::vector<std::pair<int, ItemId>> order;
        for (auto [i, n] : tally) order.emplace_back(-n, i);
        std::sort(order.begin(), order.end());
        std::vector<ItemId> expected;
        for (std::size_t k = 0; k < std::min<std::size_t>(6, order.size()); ++k) expected.push_back(order[k].second);
        CHECK(model.recommend(p, 6) == expected);
    }
}

TEST_CASE("streamed events equal one-shot accumulation over the final CIPs") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        auto events = oracle::random_stream(rng, 400, 12, 40);
        const Timestamp delta = 1 + static_cast<Timestamp>(rng() % 4);
        ItemModel streamed(delta, 5);
        for (const auto& e : events) streamed.ingest(e);

        auto profiles = build_profiles(EventLog(events));
        ItemScoreStore oneshot;
        for (const auto& cip : collect_cips(profiles, delta)) oneshot.update_scores(cip);

        REQUIRE(streamed.store().entry_count() == oneshot.entry_count());
        for (const auto& [i, row] : oneshot.scores()) {
            for (const auto& [j, s] : row) CHECK(streamed.store().score(i, j) == doctest::Approx(s).epsilon(1e-12));
        }
        CHECK(streamed.store().cards() == oneshot.cards());
    }
}

TEST_CASE("save and load round trip") {
    std::mt19937_64 rng(8);
    auto events = oracle::random_stream(rng, 500, 20, 30);
    ItemModel model(3, 5);
    model.ingest(std::span(events).first(250));
    model.refresh_neighbors();
    std::stringstream buf;
    model.save(buf);
    auto loaded = ItemModel::load(buf);
    std::ostringstream again;
    loaded.save(again);
    CHECK(again.str() == buf.str());

    // Both continue identically.
    model.ingest(std::span(events).subspan(250));
    loaded.ingest(std::span(events).subspan(250));
    model.refresh_neighbors();
    loaded.refresh_neighbors();
    for (UserId u = 1; u <= 20; ++u) CHECK(loaded.recommend(loaded.profile(u), 10) == model.recommend(model.profile(u), 10));
}

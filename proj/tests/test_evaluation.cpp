#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <tuple>
#include <sstream>

#include "ciprec/evaluation.hpp"
#include "ciprec/recommenders.hpp"
#include "oracles.hpp"

using namespace ciprec;
using namespace ciprec::analysis;

namespace {

// Looks one event ahead and always puts the upcoming item first.
class Clairvoyant : public Recommender {
public:
    explicit Clairvoyant(std::span<const Event> test) : test_(test) {}
    std::string name() const override { return "oracle"; }
    std::vector<ItemId> recommend(UserId, std::size_t n) override {
        std::vector<ItemId> list{test_[next_++].item};
        for (ItemId filler = -1; list.size() < n; --filler) list.push_back(filler);
        return list;
    }
    void observe(const Event&) override {}

private:
    std::span<const Event> test_;
    std::size_t next_ = 0;
};

class Never : public Recommender {
public:
    std::string name() const override { return "never"; }
    std::vector<ItemId> recommend(UserId, std::size_t n) override { return std::vector<ItemId>(n, -1); }
    void observe(const Event&) override {}
};

class Uniform : public Recommender {
public:
    Uniform(std::size_t items, std::uint64_t seed) : items_(items), rng_(seed) {}
    std::string name() const override { return "uniform"; }
    std::vector<ItemId> recommend(UserId, std::size_t n) override {
        std::vector<ItemId> all(items_);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng_);
        all.resize(n);
        return all;
    }
    void observe(const Event&) override {}

private:
    std::size_t items_;
    std::mt19937_64 rng_;
};

class Counting : public Recommender {
public:
    std::string name() const override { return "counting"; }
    std::vector<ItemId> recommend(UserId, std::size_t) override { return {}; }
    void observe(const Event&) override { ++observed; }
    void commit() override { ++commits; }
    int observed = 0;
    int commits = 0;
};

std::vector<Event> stream(std::uint64_t seed, std::size_t events, std::size_t users, std::size_t items) {
    std::mt19937_64 rng(seed);
    EventLog log(oracle::random_stream(rng, events, users, items));
    return {log.events().begin(), log.events().end()};
}

}  // namespace

TEST_CASE("precision examples") {
    auto test = stream(1, 500, 20, 30);
    Clairvoyant oracle(test);
    auto best = precision_at_n(oracle, test, {.n = 10, .replay = Replay::frozen});
    CHECK(best.precision == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(best.hits == 500);
    CHECK(best.events == 500);

    Never never;
    CHECK(precision_at_n(never, test, {.n = 5}).precision == 0.0);
    CHECK_THROWS_AS(precision_at_n(never, std::span<const Event>{}, {}), Error);
}

TEST_CASE("uniform random recommender scores about 1/n") {
    const std::size_t items = 50, n = 5, events = 10000;
    std::mt19937_64 rng(3);
    std::vector<Event> test;
    for (std::size_t e = 0; e < events; ++e) test.push_back({1, static_cast<ItemId>(rng() % items), 0, {}});
    Uniform rec(items, 4);
    auto r = precision_at_n(rec, test, {.n = n, .replay = Replay::frozen});
    const double p = double(n) / double(items);
    const double sigma = std::sqrt(double(events) * p * (1 - p)) / (double(events) * double(n));
    CHECK(std::abs(r.precision - 1.0 / double(items)) <= 3 * sigma);
}

TEST_CASE("replay modes") {
    auto events = stream(2, 2500, 10, 10);
    for (auto [mode, observed, commits] : {std::tuple{Replay::frozen, 0, 0}, std::tuple{Replay::history, 2500, 0},
                                           std::tuple{Replay::incremental, 2500, 3}}) {
        Counting rec;
        precision_at_n(rec, events, {.n = 3, .replay = mode, .batch = 1000});
        CHECK(rec.observed == observed);
        CHECK(rec.commits == commits);
    }
    CHECK(parse_replay("history") == Replay::history);
    CHECK(to_string(Replay::incremental) == "incremental");
    CHECK_THROWS_AS(parse_replay("live"), Error);
}

TEST_CASE("grid expansion, sweep and CSV") {
    auto grid_points = expand_grid({{"dh", {5, 10}}, {"k", {10, 50}}});
    REQUIRE(grid_points.size() == 4);
    CHECK(format_params(grid_points[0]) == "dh=5;k=10");
    CHECK(format_params(grid_points[1]) == "dh=5;k=50");
    CHECK(format_params(grid_points[3]) == "dh=10;k=50");
    CHECK_THROWS_AS(expand_grid({{"dh", {}}}), Error);

    auto train = stream(5, 600, 15, 25);
    auto valid = stream(6, 200, 15, 25);
    auto factory = [&](const ParamPoint& p) -> std::unique_ptr<Recommender> {
        auto model = recommenders::train_cip_u(train, static_cast<std::size_t>(p.at("dh")),
                                               static_cast<std::size_t>(p.at("k")));
        return std::make_unique<recommenders::CipU>(std::move(model), train);
    };
    CHECK(sweep({{"dh", {10}}, {"k", {50}}}, factory, valid, {}).size() == 1);
    auto reports = sweep({{"dh", {10}}, {"k", {10, 50}}}, factory, valid, {.n = 10});
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].params == "dh=10;k=10");
    CHECK(reports[1].params == "dh=10;k=50");
    for (const auto& r : reports) {
        CHECK(r.model == "cip-u");
        CHECK(r.precision >= 0.0);
        CHECK(r.precision <= 0.1);
        CHECK(r.precision == double(r.hits) / double(r.events * r.n));
    }
    CHECK_THROWS_AS(sweep({}, factory, valid, {}), Error);

    std::ostringstream csv;
    write_reports_csv(csv, reports);
    std::istringstream lines(csv.str());
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header == "model,N,params,precision,hits,events,runtime_s");
    CHECK(first.rfind("cip-u,10,dh=10;k=10,", 0) == 0);
}

TEST_CASE("replays are deterministic") {
    auto train = stream(7, 800, 20, 30);
    auto test = stream(8, 300, 25, 30);
    deepcip::TrainConfig config;
    config.dim = 16;
    config.epochs = 2;
    auto once = [&] {
        recommenders::DeepCip rec(recommenders::train_deepcip(train, 3, config), 3, train);
        auto r = precision_at_n(rec, test, {.n = 5, .replay = Replay::incremental, .batch = 100});
        r.runtime_s = 0;
        return r;
    };
    CHECK(once() == once());
}

TEST_CASE("popularity fallback and exclusions") {
    std::vector<Event> train = {{1, 10, 0, {}}, {2, 10, 1, {}}, {3, 10, 2, {}}, {1, 11, 3, {}}, {2, 11, 4, {}},
                                {1, 12, 5, {}}, {1, 12, 6, {}}};
    recommenders::Popularity pop(train);
    CHECK(pop.recommend(99, 3) == std::vector<ItemId>{10, 11, 12});
    CHECK(pop.recommend(2, 3) == std::vector<ItemId>{12});

    // Observed items are excluded at once; counts change only on commit.
    pop.observe({99, 12, 10, {}});
    pop.observe({98, 12, 11, {}});
    CHECK(pop.recommend(99, 3) == std::vector<ItemId>{10, 11});
    CHECK(pop.recommend(97, 1) == std::vector<ItemId>{10});
    pop.commit();
    pop.observe({96, 12, 12, {}});
    pop.commit();
    CHECK(pop.recommend(97, 1) == std::vector<ItemId>{12});

    recommenders::CipU cu(recommenders::train_cip_u(train, 10, 5), train);
    CHECK(cu.recommend(99, 2) == std::vector<ItemId>{10, 11});
    recommenders::CipI ci(recommenders::train_cip_i(train, 60, 5), train);
    CHECK(ci.recommend(99, 2) == std::vector<ItemId>{10, 11});
    deepcip::TrainConfig config;
    config.dim = 4;
    recommenders::DeepCip dc(recommenders::train_deepcip(train, 60, config), 60, train);
    CHECK(dc.recommend(99, 2) == std::vector<ItemId>{10, 11});
    dc.observe({50, 777, 20, {}});
    CHECK(dc.recommend(50, 2) == std::vector<ItemId>{10, 11});
    recommenders::Fism fi(recommenders::train_fism(train, 2, 0.5, 1), 60, train);
    CHECK(fi.recommend(99, 2) == std::vector<ItemId>{10, 11});
    CHECK(fi.recommend(2, 5) == std::vector<ItemId>{12});
}

TEST_CASE("incremental commits match training on the longer stream") {
    auto all = stream(9, 900, 15, 40);
    const std::span<const Event> events(all);
    auto head = events.first(600), tail = events.subspan(600);

    recommenders::CipU cu(recommenders::train_cip_u(head, 4, 6), head);
    recommenders::CipI ci(recommenders::train_cip_i(head, 2, 6), head);
    for (const auto& e : tail) {
        cu.observe(e);
        ci.observe(e);
    }
    cu.commit();
    ci.commit();
    auto full_u = recommenders::train_cip_u(events, 4, 6);
    auto full_i = recommenders::train_cip_i(events, 2, 6);
    for (UserId u = 1; u <= 15; ++u) {
        CHECK(cu.model().recommend(u, 10) == full_u.recommend(u, 10));
        CHECK(cu.model().profile(u).size() == full_u.profile(u).size());
        CHECK(ci.recommend(u, 10) == full_i.recommend(full_i.profile(u), 10));
    }
}

TEST_CASE("deepcip commits retrain warm on the CIPs that grew") {
    auto all = stream(10, 600, 10, 30);
    const std::span<const Event> events(all);
    deepcip::TrainConfig config;
    config.dim = 8;
    config.epochs = 1;
    recommenders::DeepCip dc(recommenders::train_deepcip(events.first(400), 2, config), 2, events.first(400));
    const auto before = dc.model();
    for (const auto& e : events.subspan(400)) dc.observe(e);
    dc.commit();
    CHECK(dc.model().size() >= before.size());
    for (std::size_t r = 0; r < before.size(); ++r) CHECK(dc.model().item_at(r) == before.item_at(r));
    CHECK_FALSE(dc.model() == before);
}

#include <doctest.h>

#include <random>
#include <sstream>

#include "ciprec/ingest.hpp"
#include "oracles.hpp"

using namespace ciprec;

namespace {

EventLog parse(const std::string& text, LogFormat format) {
    std::istringstream in(text);
    return parse_events(in, format);
}

UserProfile profile_with_times(std::vector<Timestamp> times) {
    UserProfile p;
    p.user = 1;
    for (std::size_t k = 0; k < times.size(); ++k) p.items.push_back({static_cast<ItemId>(k + 1), times[k]});
    return p;
}

}  // namespace

TEST_CASE("parse_events reads a single MovieLens tab line") {
    auto log = parse("1\t5\t3\t100\n", LogFormat::ml_tab);
    REQUIRE(log.size() == 1);
    CHECK(log.user_count() == 1);
    CHECK(log.item_count() == 1);
    CHECK(log.events()[0] == Event{1, 5, 100, 3.0});
}

TEST_CASE("parse_events sorts by timestamp, ties keep file order") {
    auto log = parse("1\t5\t3\t200\n2\t6\t4\t100\n3\t7\t1\t100\n", LogFormat::ml_tab);
    REQUIRE(log.size() == 3);
    CHECK(log.events()[0].user == 2);
    CHECK(log.events()[1].user == 3);
    CHECK(log.events()[2].timestamp == 200);
}

TEST_CASE("parse_events accepts the other formats") {
    auto dcolon = parse("1::5::3::100\n1::6::2::50\n", LogFormat::ml_dcolon);
    CHECK(dcolon.size() == 2);
    CHECK(dcolon.events()[0].item == 6);

    auto csv = parse("user,item,rating,timestamp\n4,9,,10\n", LogFormat::csv);
    CHECK(csv.events()[0] == Event{4, 9, 10, std::nullopt});

    auto canon = parse("CIPREC1 events\n4,9,10\n", LogFormat::canonical);
    CHECK(canon.events()[0] == Event{4, 9, 10, std::nullopt});
}

TEST_CASE("parse_events reports the failing line") {
    try {
        parse("1\t5\t3\t100\n1\tx\t3\t100\n", LogFormat::ml_tab);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse("1\t5\t3\n", LogFormat::ml_tab), ParseError);
    CHECK_THROWS_AS(parse("1\t5\t3\t-4\n", LogFormat::ml_tab), ParseError);
    CHECK_THROWS_AS(parse("u,i,r,t\n1,2,3,4\n", LogFormat::csv), ParseError);
    CHECK_THROWS_AS(parse("", LogFormat::ml_tab), Error);
    CHECK_THROWS_AS(parse("user,item,rating,timestamp\n", LogFormat::csv), Error);
}

TEST_CASE("csv round trip preserves the sorted log") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto raw = oracle::random_stream(rng, 1 + rng() % 10000, 40, 200);
        for (auto& e : raw) {
            if (rng() % 3) e.rating = static_cast<double>(rng() % 9) * 0.5;
        }
        std::shuffle(raw.begin(), raw.end(), rng);
        EventLog log(raw);
        std::ostringstream out;
        write_csv(out, log);
        auto back = parse(out.str(), LogFormat::csv);
        REQUIRE(back.size() == log.size());
        CHECK(std::equal(back.events().begin(), back.events().end(), log.events().begin()));
    }
}

TEST_CASE("canonical dump round trip") {
    auto log = parse("1\t5\t3\t200\n2\t6\t4\t100\n", LogFormat::ml_tab);
    std::ostringstream out;
    write_canonical(out, log);
    CHECK(out.str() == "CIPREC1 events\n2,6,100\n1,5,200\n");
    auto back = parse(out.str(), LogFormat::canonical);
    CHECK(back.size() == 2);
    CHECK(back.events()[1].item == 5);
}

TEST_CASE("id dictionaries are bijective") {
    std::mt19937_64 rng(11);
    EventLog log(oracle::random_stream(rng, 3000, 97, 313));
    for (std::uint32_t k = 0; k < log.items().size(); ++k) {
        CHECK(log.items().index_of(log.items().raw_of(k)) == k);
    }
    for (const auto& e : log.events()) {
        auto idx = log.users().index_of(e.user);
        REQUIRE(idx);
        CHECK(log.users().raw_of(*idx) == e.user);
    }
    CHECK_FALSE(log.users().index_of(-1));
}

TEST_CASE("build_profiles keeps the first occurrence") {
    EventLog log({{1, 10, 1, {}}, {1, 11, 2, {}}, {1, 10, 3, {}}, {2, 10, 2, {}}});
    auto profiles = build_profiles(log);
    REQUIRE(profiles.size() == 2);
    CHECK(profiles.find(1)->items == std::vector<Consumption>{{10, 1}, {11, 2}});
    CHECK(profiles.find(2)->items.size() == 1);
    CHECK(profiles.find(3) == nullptr);
    CHECK_THROWS_AS(build_profiles(EventLog{}), Error);
}

TEST_CASE("partition_cips splits on gaps larger than delta") {
    auto p = profile_with_times({0, 30, 100});
    auto cips = partition_cips(p, 60);
    REQUIRE(cips.size() == 2);
    CHECK(cips[0].items == std::vector<ItemId>{1, 2});
    CHECK(cips[1].items == std::vector<ItemId>{3});
    CHECK(cips[0].start_ts == 0);
    CHECK(cips[0].end_ts == 30);

    CHECK(partition_cips(p, 1000).size() == 1);
    CHECK(partition_cips(profile_with_times({0, 60}), 60).size() == 1);
    CHECK_THROWS_AS(partition_cips(p, 0), Error);
}

TEST_CASE("partition_cips is a partition with the gap predicate at every index") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Timestamp> times;
        Timestamp t = 0;
        for (int k = 0; k < 50; ++k) {
            t += static_cast<Timestamp>(rng() % 120);
            times.push_back(t);
        }
        const Timestamp delta = 1 + static_cast<Timestamp>(rng() % 90);
        auto p = profile_with_times(times);
        auto cips = partition_cips(p, delta);

        std::vector<ItemId> concat;
        std::vector<std::size_t> starts;
        for (const auto& c : cips) {
            starts.push_back(concat.size());
            concat.insert(concat.end(), c.items.begin(), c.items.end());
        }
        CHECK(concat == p.item_ids());
        for (std::size_t k = 1; k < times.size(); ++k) {
            const bool boundary = std::find(starts.begin(), starts.end(), k) != starts.end();
            CHECK(boundary == (times[k] - times[k - 1] > delta));
        }
    }
}

TEST_CASE("build_profiles with delta fills the CIP boundaries") {
    EventLog log({{1, 10, 0, {}}, {1, 11, 30, {}}, {1, 12, 100, {}}});
    auto profiles = build_profiles(log, 60);
    CHECK(profiles.find(1)->cip_boundaries == std::vector<std::size_t>{0, 2});
}

TEST_CASE("temporal_split slices contiguously") {
    std::mt19937_64 rng(5);
    EventLog log(oracle::random_stream(rng, 100, 10, 10));
    auto all = temporal_split(log, 100, 0, 0);
    CHECK(all.train.size() == 100);
    CHECK(all.valid.empty());
    CHECK(all.test.empty());

    auto parts = temporal_split(log, 70, 10, 20);
    CHECK(parts.train.size() == 70);
    CHECK(parts.valid.size() == 10);
    CHECK(parts.test.size() == 20);
    CHECK(parts.train.events().back().timestamp <= parts.valid.events().front().timestamp);
    CHECK(parts.valid.events().back().timestamp <= parts.test.events().front().timestamp);
    CHECK(parts.test.events().back() == log.events().back());

    CHECK_THROWS_AS(temporal_split(log, 70, 20, 20), Error);
}

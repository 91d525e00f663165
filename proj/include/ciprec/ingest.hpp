#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ciprec/types.hpp"

namespace ciprec {

enum class LogFormat {
    ml_tab,     // user<TAB>item<TAB>rating<TAB>timestamp (MovieLens 100K)
    ml_dcolon,  // user::item::rating::timestamp (MovieLens 1M)
    csv,        // header "user,item,rating,timestamp"
    canonical,  // "CIPREC1 events" header, then user,item,timestamp
};

LogFormat parse_log_format(std::string_view name);
std::string_view to_string(LogFormat format);

struct Event {
    UserId user = 0;
    ItemId item = 0;
    Timestamp timestamp = 0;
    // Kept for provenance; no implicit model reads it.
    std::optional<double> rating;

    friend bool operator==(const Event&, const Event&) = default;
};

// Bijection between raw ids and dense indices [0, size). Dense indices
// follow ascending raw id, so they are stable for a given id set.
class IdDictionary {
public:
    IdDictionary() = default;
    explicit IdDictionary(std::vector<std::int64_t> raw_ids);

    std::size_t size() const noexcept { return raw_.size(); }
    std::optional<std::uint32_t> index_of(std::int64_t raw) const;
    std::int64_t raw_of(std::uint32_t index) const { return raw_.at(index); }
    std::span<const std::int64_t> raw_ids() const noexcept { return raw_; }

private:
    std::vector<std::int64_t> raw_;
    std::unordered_map<std::int64_t, std::uint32_t> index_;
};

// Time-ordered event sequence. Ties keep their original input order.
class EventLog {
public:
    EventLog() = default;
    // Stable-sorts by timestamp and builds the id dictionaries.
    explicit EventLog(std::vector<Event> events);

    std::span<const Event> events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }
    bool empty() const noexcept { return events_.empty(); }
    std::size_t user_count() const noexcept { return users_.size(); }
    std::size_t item_count() const noexcept { return items_.size(); }
    const IdDictionary& users() const noexcept { return users_; }
    const IdDictionary& items() const noexcept { return items_; }

    // Sub-log over events [first, first + count), already in order.
    EventLog slice(std::size_t first, std::size_t count) const;

private:
    std::vector<Event> events_;
    IdDictionary users_;
    IdDictionary items_;
};

EventLog parse_events(std::istream& source, LogFormat format);
EventLog load_events(const std::string& path, LogFormat format);

// user,item,rating,timestamp with header; rating left empty when absent.
void write_csv(std::ostream& out, const EventLog& log);
// "CIPREC1 events" followed by user,item,timestamp lines.
void write_canonical(std::ostream& out, const EventLog& log);

struct Consumption {
    ItemId item = 0;
    Timestamp timestamp = 0;

    friend bool operator==(const Consumption&, const Consumption&) = default;
};

struct UserProfile {
    UserId user = 0;
    // Unique items, first occurrence kept, in consumption order.
    std::vector<Consumption> items;
    // Start index of every CIP; filled when profiles are built with a delta.
    std::vector<std::size_t> cip_boundaries;

    std::vector<ItemId> item_ids() const;
    bool contains(ItemId item) const;
};

struct Cip {
    std::vector<ItemId> items;
    Timestamp start_ts = 0;
    Timestamp end_ts = 0;

    friend bool operator==(const Cip&, const Cip&) = default;
};

class ProfileStore {
public:
    using Map = std::map<UserId, UserProfile>;

    ProfileStore() = default;
    explicit ProfileStore(Map profiles) : profiles_(std::move(profiles)) {}

    const UserProfile* find(UserId user) const;
    std::size_t size() const noexcept { return profiles_.size(); }
    Map::const_iterator begin() const { return profiles_.begin(); }
    Map::const_iterator end() const { return profiles_.end(); }

    // Appends a consumption unless the user already consumed the item.
    // Returns false for a re-consumption.
    bool append(UserId user, Consumption c);

private:
    Map profiles_;
};

ProfileStore build_profiles(const EventLog& log, std::optional<Timestamp> delta = std::nullopt);

// Indices where a new delta-distant CIP starts; always begins with 0 for a
// nonempty sequence.
std::vector<std::size_t> cip_boundaries(std::span<const Consumption> items, Timestamp delta);

std::vector<Cip> partition_cips(const UserProfile& profile, Timestamp delta);

// Every user's CIPs, users in ascending id order.
std::vector<Cip> collect_cips(const ProfileStore& profiles, Timestamp delta);

struct TemporalSplit {
    EventLog train;
    EventLog valid;
    EventLog test;
};

// Contiguous slices in timestamp order: train is the first n_train events,
// valid the next n_valid, test the next n_test. A remaining tail is unused.
TemporalSplit temporal_split(const EventLog& log, std::size_t n_train, std::size_t n_valid,
                             std::size_t n_test);

}  // namespace ciprec

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ciprec/ingest.hpp"
#include "ciprec/types.hpp"

namespace ciprec::cip_u {

// Number of hops between two items of a profile.
std::size_t hammock_distance(std::span<const ItemId> profile, ItemId i, ItemId j);

// Unordered item pair stored as (smaller id, larger id).
using ItemPair = std::pair<ItemId, ItemId>;

// Pairs of distinct items present in both profiles, at most delta_h hops
// apart in each of them.
std::set<ItemPair> hammock_pairs(std::span<const ItemId> pu, std::span<const ItemId> pv, std::size_t delta_h);

// 1 - (1 - [Pu = Pv]) * exp(-|HP|)
double similarity(std::uint64_t hp_count, bool profiles_equal);

struct PairState {
    std::uint32_t common = 0;  // |C_uv|
    std::uint64_t hp_count = 0;
    bool profiles_equal = false;

    double similarity() const { return cip_u::similarity(hp_count, profiles_equal); }
};

struct Neighbor {
    UserId user = 0;
    double similarity = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// New items per user for one update round, in consumption order.
using Batch = std::map<UserId, std::vector<ItemId>>;

// User-user network maintained incrementally from batches of consumed
// items. Only pairs sharing at least one item carry state.
class UserModel {
public:
    UserModel(std::size_t delta_h, std::size_t k);

    std::size_t delta_h() const noexcept { return delta_h_; }
    std::size_t k() const noexcept { return k_; }
    std::size_t user_count() const noexcept { return users_.size(); }
    std::size_t pair_count() const;

    // Appends each user's new items (re-consumptions dropped), updates the
    // common-item and hammock-pair counts of every touched pair, then
    // refreshes the cached neighborhoods that may have changed.
    void apply_batch(const Batch& batch);

    // Groups events into batches of at most batch_size events (log order)
    // and applies them one by one.
    void apply_events(std::span<const Event> events, std::size_t batch_size);

    bool has_user(UserId user) const { return index_.contains(user); }
    std::span<const ItemId> profile(UserId user) const;

    // Zero-initialized state when the users share no item.
    PairState pair(UserId u, UserId v) const;
    double similarity(UserId u, UserId v) const { return pair(u, v).similarity(); }
    // Items common to both profiles, ascending.
    std::vector<ItemId> common_items(UserId u, UserId v) const;

    // K most similar users, similarity descending then id ascending; users
    // with similarity 0 are left out. Unknown user -> empty.
    std::vector<Neighbor> top_k_users(UserId u, std::size_t k) const;
    // Neighborhood of size k() cached at the last batch.
    std::span<const Neighbor> neighbors(UserId u) const;

    // Tally of items in the neighbors' profiles, skipping the user's own
    // items and also_exclude. Unknown users and users without neighbors get
    // the globally most consumed items.
    std::vector<ItemId> recommend(UserId u, std::size_t n, std::span<const ItemId> also_exclude = {}) const;

    // Most consumed items (number of users), count descending then id.
    std::vector<ItemId> popular(std::size_t n, std::span<const ItemId> exclude = {}) const;

    void save(std::ostream& out) const;
    static UserModel load(std::istream& in);

private:
    struct UserState {
        UserId id = 0;
        std::vector<ItemId> items;
        std::unordered_map<ItemId, std::uint32_t> position;
        std::vector<Neighbor> neighbors;
    };

    std::uint32_t intern(UserId user);
    std::uint64_t count_new_pairs(std::uint32_t u, std::uint32_t v, std::span<const ItemId> delta_common,
                                  const std::vector<std::size_t>& old_len) const;
    bool profiles_equal(std::uint32_t u, std::uint32_t v, const PairState& state) const;
    std::vector<Neighbor> rank_neighbors(std::uint32_t u, std::size_t k) const;

    std::size_t delta_h_;
    std::size_t k_;
    std::vector<UserState> users_;
    std::unordered_map<UserId, std::uint32_t> index_;
    // Symmetric: adjacency_[u][v] and adjacency_[v][u] hold the same state.
    std::vector<std::unordered_map<std::uint32_t, PairState>> adjacency_;
    std::unordered_map<ItemId, std::vector<std::uint32_t>> item_users_;
};

}  // namespace ciprec::cip_u

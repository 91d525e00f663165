#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ciprec/ingest.hpp"
#include "ciprec/types.hpp"

namespace ciprec::cip_i {

struct Neighbor {
    ItemId item = 0;
    double similarity = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Directed co-occurrence scores: score(i, j) accumulates 1 + 1/H(i, j) for
// every CIP holding i before j; card(i) counts the CIPs holding i.
class ItemScoreStore {
public:
    // Adds one complete CIP. Throws on repeated items.
    void update_scores(std::span<const ItemId> cip);
    void update_scores(const Cip& cip) { update_scores(cip.items); }

    // Adds item as the next element of a CIP whose earlier items are
    // `prefix`. Applying this item by item is the same as update_scores on
    // the full CIP.
    void extend(std::span<const ItemId> prefix, ItemId item);

    double score(ItemId i, ItemId j) const;
    std::uint64_t card(ItemId i) const;
    // score(i, j) / (2 * max(card(i), card(j))); 0 without co-occurrence.
    double similarity(ItemId i, ItemId j) const;

    // K most similar successors of i, similarity descending then id
    // ascending, zero similarities left out.
    std::vector<Neighbor> top_k_items(ItemId i, std::size_t k) const;

    std::size_t item_count() const noexcept { return card_.size(); }
    std::size_t entry_count() const;
    const std::unordered_map<ItemId, std::unordered_map<ItemId, double>>& scores() const noexcept { return score_; }
    const std::unordered_map<ItemId, std::uint64_t>& cards() const noexcept { return card_; }

    void save(std::ostream& out) const;
    static ItemScoreStore load(std::istream& in);

private:
    std::unordered_map<ItemId, std::unordered_map<ItemId, double>> score_;
    std::unordered_map<ItemId, std::uint64_t> card_;
};

// Item-based recommender fed by consumption events. Each user's latest CIP
// stays open until a gap larger than delta closes it, so events may arrive
// in any batching.
class ItemModel {
public:
    ItemModel(Timestamp delta, std::size_t k);

    Timestamp delta() const noexcept { return delta_; }
    std::size_t k() const noexcept { return k_; }
    const ItemScoreStore& store() const noexcept { return store_; }

    // Events must come in timestamp order per user. Re-consumptions are
    // dropped. Neighborhoods are not refreshed here.
    void ingest(std::span<const Event> events);
    void ingest(const Event& event);

    // Recomputes every item's top-K list.
    void refresh_neighbors();
    std::span<const Neighbor> neighbors(ItemId item) const;

    std::span<const ItemId> profile(UserId user) const;

    // Tally of the items found in the neighborhoods of the profile items,
    // skipping the profile itself. Empty profile -> most popular items.
    std::vector<ItemId> recommend(std::span<const ItemId> profile, std::size_t n) const;
    std::vector<ItemId> popular(std::size_t n, std::span<const ItemId> exclude = {}) const;

    void save(std::ostream& out) const;
    static ItemModel load(std::istream& in);

private:
    struct UserState {
        std::vector<ItemId> items;
        std::unordered_set<ItemId> seen;
        std::size_t open_start = 0;  // first profile index of the open CIP
        Timestamp last_ts = 0;
    };

    Timestamp delta_;
    std::size_t k_;
    ItemScoreStore store_;
    std::unordered_map<UserId, UserState> users_;
    std::unordered_map<ItemId, std::uint64_t> consumers_;
    std::unordered_map<ItemId, std::vector<Neighbor>> neighbors_;
};

}  // namespace ciprec::cip_i

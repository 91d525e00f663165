#include "ciprec/cip_i.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>

#include "ciprec/persist.hpp"
#include "ciprec/ranking.hpp"

namespace ciprec::cip_i {

void ItemScoreStore::update_scores(std::span<const ItemId> cip) {
    std::unordered_set<ItemId> seen;
    for (ItemId item : cip) {
        if (!seen.insert(item).second) throw Error("CIP repeats item " + std::to_string(item));
    }
    for (std::size_t k = 0; k < cip.size(); ++k) extend(cip.first(k), cip[k]);
}

void ItemScoreStore::extend(std::span<const ItemId> prefix, ItemId item) {
    ++card_[item];
    const std::size_t pos = prefix.size();
    for (std::size_t q = 0; q < pos; ++q) {
        const double penalty = 1.0 / static_cast<double>(pos - q);
        score_[prefix[q]][item] += 1.0 + penalty;
    }
}

double ItemScoreStore::score(ItemId i, ItemId j) const {
    auto row = score_.find(i);
    if (row == score_.end()) return 0.0;
    auto cell = row->second.find(j);
    return cell == row->second.end() ? 0.0 : cell->second;
}

std::uint64_t ItemScoreStore::card(ItemId i) const {
    auto it = card_.find(i);
    return it == card_.end() ? 0 : it->second;
}

double ItemScoreStore::similarity(ItemId i, ItemId j) const {
    const double s = score(i, j);
    if (s == 0.0) return 0.0;
    return s / (2.0 * static_cast<double>(std::max(card(i), card(j))));
}

std::vector<Neighbor> ItemScoreStore::top_k_items(ItemId i, std::size_t k) const {
    auto row = score_.find(i);
    if (row == score_.end()) return {};
    const auto ci = card(i);
    std::vector<std::pair<ItemId, double>> scored;
    scored.reserve(row->second.size());
    for (const auto& [j, s] : row->second) {
        const double sim = s / (2.0 * static_cast<double>(std::max(ci, card(j))));
        if (sim > 0.0) scored.emplace_back(j, sim);
    }
    std::vector<Neighbor> out;
    for (auto& [j, sim] : top_n(std::move(scored), k)) out.push_back({j, sim});
    return out;
}

std::size_t ItemScoreStore::entry_count() const {
    std::size_t n = 0;
    for (const auto& [i, row] : score_) n += row.size();
    return n;
}

void ItemScoreStore::save(std::ostream& out) const {
    std::map<ItemId, std::uint64_t> cards(card_.begin(), card_.end());
    out << "cards " << cards.size() << '\n';
    for (const auto& [i, c] : cards) out << i << ' ' << c << '\n';
    std::vector<std::tuple<ItemId, ItemId, double>> triples;
    for (const auto& [i, row] : score_) {
        for (const auto& [j, s] : row) triples.emplace_back(i, j, s);
    }
    std::sort(triples.begin(), triples.end());
    out << "scores " << triples.size() << '\n';
    for (const auto& [i, j, s] : triples) out << i << ' ' << j << ' ' << persist::format_double(s) << '\n';
}

ItemScoreStore ItemScoreStore::load(std::istream& in) {
    ItemScoreStore store;
    std::size_t n = 0;
    persist::expect_word(in, "cards");
    in >> n;
    for (std::size_t r = 0; r < n; ++r) {
        ItemId i = 0;
        std::uint64_t c = 0;
        if (!(in >> i >> c)) throw Error("cip-i model: truncated card list");
        store.card_[i] = c;
    }
    persist::expect_word(in, "scores");
    in >> n;
    for (std::size_t r = 0; r < n; ++r) {
        ItemId i = 0, j = 0;
        double s = 0;
        if (!(in >> i >> j >> s)) throw Error("cip-i model: truncated score list");
        store.score_[i][j] = s;
    }
    return store;
}

ItemModel::ItemModel(Timestamp delta, std::size_t k) : delta_(delta), k_(k) {
    if (delta <= 0) throw Error("CIP distance delta must be positive");
    if (k == 0) throw Error("model size K must be positive");
}

void ItemModel::ingest(std::span<const Event> events) {
    for (const auto& e : events) ingest(e);
}

void ItemModel::ingest(const Event& event) {
    auto& user = users_[event.user];
    if (!user.seen.insert(event.item).second) return;
    if (!user.items.empty() && event.timestamp > user.last_ts + delta_) user.open_start = user.items.size();
    const std::span<const ItemId> open(user.items.data() + user.open_start, user.items.size() - user.open_start);
    store_.extend(open, event.item);
    user.items.push_back(event.item);
    user.last_ts = event.timestamp;
    ++consumers_[event.item];
}

void ItemModel::refresh_neighbors() {
    neighbors_.clear();
    for (const auto& [item, card] : store_.cards()) {
        auto top = store_.top_k_items(item, k_);
        if (!top.empty()) neighbors_.emplace(item, std::move(top));
    }
}

std::span<const Neighbor> ItemModel::neighbors(ItemId item) const {
    auto it = neighbors_.find(item);
    if (it == neighbors_.end()) return {};
    return it->second;
}

std::span<const ItemId> ItemModel::profile(UserId user) const {
    auto it = users_.find(user);
    if (it == users_.end()) return {};
    return it->second.items;
}

std::vector<ItemId> ItemModel::popular(std::size_t n, std::span<const ItemId> exclude) const {
    std::unordered_set<ItemId> skip(exclude.begin(), exclude.end());
    std::vector<std::pair<ItemId, std::uint64_t>> scored;
    for (const auto& [item, count] : consumers_) {
        if (!skip.contains(item)) scored.emplace_back(item, count);
    }
    return top_n_ids(std::move(scored), n);
}

std::vector<ItemId> ItemModel::recommend(std::span<const ItemId> profile, std::size_t n) const {
    if (profile.empty()) return popular(n);
    std::unordered_set<ItemId> own(profile.begin(), profile.end());
    std::unordered_map<ItemId, std::size_t> tally;
    for (ItemId rid : profile) {
        for (const auto& nb : neighbors(rid)) {
            if (!own.contains(nb.item)) ++tally[nb.item];
        }
    }
    return top_n_ids(std::vector<std::pair<ItemId, std::size_t>>(tally.begin(), tally.end()), n);
}

void ItemModel::save(std::ostream& out) const {
    persist::write_header(out, "cip-i");
    out << "delta " << delta_ << " k " << k_ << '\n';
    store_.save(out);
    std::map<UserId, const UserState*> ordered;
    for (const auto& [u, state] : users_) ordered.emplace(u, &state);
    out << "users " << ordered.size() << '\n';
    for (const auto& [u, state] : ordered) {
        out << u << ' ' << state->last_ts << ' ' << state->open_start << ' ' << state->items.size();
        for (ItemId item : state->items) out << ' ' << item;
        out << '\n';
    }
}

ItemModel ItemModel::load(std::istream& in) {
    persist::expect_header(in, "cip-i");
    Timestamp delta = 0;
    std::size_t k = 0;
    persist::expect_word(in, "delta");
    in >> delta;
    persist::expect_word(in, "k");
    in >> k;
    ItemModel model(delta, k);
    model.store_ = ItemScoreStore::load(in);
    std::size_t n_users = 0;
    persist::expect_word(in, "users");
    in >> n_users;
    for (std::size_t r = 0; r < n_users; ++r) {
        UserId u = 0;
        std::size_t len = 0;
        UserState state;
        if (!(in >> u >> state.last_ts >> state.open_start >> len)) throw Error("cip-i model: truncated user list");
        for (std::size_t j = 0; j < len; ++j) {
            ItemId item = 0;
            if (!(in >> item)) throw Error("cip-i model: truncated profile");
            state.items.push_back(item);
            state.seen.insert(item);
            ++model.consumers_[item];
        }
        model.users_.emplace(u, std::move(state));
    }
    model.refresh_neighbors();
    return model;
}

}  // namespace ciprec::cip_i

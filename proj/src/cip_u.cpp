#include "ciprec/cip_u.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <tuple>
#include <unordered_set>

#include "ciprec/persist.hpp"
#include "ciprec/ranking.hpp"

namespace ciprec::cip_u {

namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::size_t hops(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

}  // namespace

std::size_t hammock_distance(std::span<const ItemId> profile, ItemId i, ItemId j) {
    auto pi = std::find(profile.begin(), profile.end(), i);
    auto pj = std::find(profile.begin(), profile.end(), j);
    if (pi == profile.end() || pj == profile.end()) throw Error("hammock_distance: item not in profile");
    return hops(static_cast<std::size_t>(pi - profile.begin()), static_cast<std::size_t>(pj - profile.begin()));
}

std::set<ItemPair> hammock_pairs(std::span<const ItemId> pu, std::span<const ItemId> pv, std::size_t delta_h) {
    std::unordered_map<ItemId, std::size_t> pos_v;
    for (std::size_t k = 0; k < pv.size(); ++k) pos_v.emplace(pv[k], k);

    std::set<ItemPair> pairs;
    for (std::size_t a = 0; a < pu.size(); ++a) {
        auto va = pos_v.find(pu[a]);
        if (va == pos_v.end()) continue;
        for (std::size_t b = a + 1; b < pu.size() && b - a <= delta_h; ++b) {
            auto vb = pos_v.find(pu[b]);
            if (vb == pos_v.end() || hops(va->second, vb->second) > delta_h) continue;
            pairs.emplace(std::min(pu[a], pu[b]), std::max(pu[a], pu[b]));
        }
    }
    return pairs;
}

double similarity(std::uint64_t hp_count, bool profiles_equal) {
    if (profiles_equal) return 1.0;
    return 1.0 - std::exp(-static_cast<double>(hp_count));
}

UserModel::UserModel(std::size_t delta_h, std::size_t k) : delta_h_(delta_h), k_(k) {
    if (delta_h == 0) throw Error("hammock threshold must be at least 1");
    if (k == 0) throw Error("model size K must be positive");
}

std::size_t UserModel::pair_count() const {
    std::size_t total = 0;
    for (const auto& adj : adjacency_) total += adj.size();
    return total / 2;
}

std::uint32_t UserModel::intern(UserId user) {
    auto [it, inserted] = index_.try_emplace(user, static_cast<std::uint32_t>(users_.size()));
    if (inserted) {
        users_.push_back(UserState{user, {}, {}, {}});
        adjacency_.emplace_back();
    }
    return it->second;
}

std::span<const ItemId> UserModel::profile(UserId user) const {
    auto it = index_.find(user);
    if (it == index_.end()) return {};
    return users_[it->second].items;
}

void UserModel::apply_batch(const Batch& batch) {
    std::vector<std::size_t> old_len(users_.size());
    for (std::size_t u = 0; u < users_.size(); ++u) old_len[u] = users_[u].items.size();

    // Append new items; collect (user, new items) for the users that changed.
    std::vector<std::pair<std::uint32_t, std::vector<ItemId>>> touched;
    for (const auto& [user, items] : batch) {
        std::vector<ItemId> fresh;
        for (ItemId item : items) {
            const bool known_user = index_.contains(user);
            if (known_user && users_[index_.at(user)].position.contains(item)) continue;
            if (std::find(fresh.begin(), fresh.end(), item) != fresh.end()) continue;
            fresh.push_back(item);
        }
        if (fresh.empty()) continue;
        const std::uint32_t u = intern(user);
        if (u >= old_len.size()) old_len.push_back(0);
        auto& state = users_[u];
        for (ItemId item : fresh) {
            state.position.emplace(item, static_cast<std::uint32_t>(state.items.size()));
            state.items.push_back(item);
            item_users_[item].push_back(u);
        }
        touched.emplace_back(u, std::move(fresh));
    }
    if (touched.empty()) return;

    // Delta common set per pair: an item new for u joins C_uv when v has it
    // now (old profile or v's own batch), and symmetrically.
    std::unordered_map<std::uint64_t, std::vector<ItemId>> delta_common;
    for (const auto& [u, fresh] : touched) {
        for (ItemId item : fresh) {
            for (std::uint32_t v : item_users_[item]) {
                if (v != u) delta_common[pair_key(u, v)].push_back(item);
            }
        }
    }

    for (auto& [key, items] : delta_common) {
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        const auto u = static_cast<std::uint32_t>(key >> 32);
        const auto v = static_cast<std::uint32_t>(key & 0xffffffffu);
        auto& state = adjacency_[u][v];
        state.common += static_cast<std::uint32_t>(items.size());
        state.hp_count += count_new_pairs(u, v, items, old_len);
        adjacency_[v][u] = state;
    }

    // [Pu = Pv] can only change for pairs involving a touched user.
    std::unordered_set<std::uint32_t> dirty;
    for (const auto& [u, fresh] : touched) {
        dirty.insert(u);
        for (auto& [v, state] : adjacency_[u]) {
            state.profiles_equal = profiles_equal(u, v, state);
            adjacency_[v][u].profiles_equal = state.profiles_equal;
            dirty.insert(v);
        }
    }
    for (std::uint32_t u : dirty) users_[u].neighbors = rank_neighbors(u, k_);
}

std::uint64_t UserModel::count_new_pairs(std::uint32_t u, std::uint32_t v, std::span<const ItemId> delta_common,
                                         const std::vector<std::size_t>& old_len) const {
    const auto& pu = users_[u];
    const auto& pv = users_[v];
    const std::size_t old_u = old_len[u];
    const std::size_t old_v = old_len[v];
    auto in_delta = [&](std::size_t pos_u, std::size_t pos_v) { return pos_u >= old_u || pos_v >= old_v; };

    std::uint64_t count = 0;
    for (ItemId j : delta_common) {
        const std::size_t ju = pu.position.at(j);
        const std::size_t jv = pv.position.at(j);
        const std::size_t lo = ju >= delta_h_ ? ju - delta_h_ : 0;
        const std::size_t hi = std::min(pu.items.size() - 1, ju + delta_h_);
        for (std::size_t p = lo; p <= hi; ++p) {
            if (p == ju) continue;
            const ItemId i = pu.items[p];
            auto iv = pv.position.find(i);
            if (iv == pv.position.end() || hops(iv->second, jv) > delta_h_) continue;
            // Pairs with both ends new are reached from both ends; keep one.
            if (in_delta(p, iv->second) && i > j) continue;
            ++count;
        }
    }
    return count;
}

bool UserModel::profiles_equal(std::uint32_t u, std::uint32_t v, const PairState& state) const {
    const auto& a = users_[u].items;
    const auto& b = users_[v].items;
    return a.size() == b.size() && state.common == a.size() && a == b;
}

PairState UserModel::pair(UserId u, UserId v) const {
    auto iu = index_.find(u);
    auto iv = index_.find(v);
    if (iu == index_.end() || iv == index_.end()) return {};
    if (iu->second == iv->second) {
        const auto& items = users_[iu->second].items;
        return {static_cast<std::uint32_t>(items.size()), hammock_pairs(items, items, delta_h_).size(), true};
    }
    const auto& adj = adjacency_[iu->second];
    auto it = adj.find(iv->second);
    return it == adj.end() ? PairState{} : it->second;
}

std::vector<ItemId> UserModel::common_items(UserId u, UserId v) const {
    std::vector<ItemId> common;
    auto iu = index_.find(u);
    auto iv = index_.find(v);
    if (iu == index_.end() || iv == index_.end()) return common;
    const auto& other = users_[iv->second].position;
    for (ItemId item : users_[iu->second].items) {
        if (other.contains(item)) common.push_back(item);
    }
    std::sort(common.begin(), common.end());
    return common;
}

std::vector<Neighbor> UserModel::rank_neighbors(std::uint32_t u, std::size_t k) const {
    std::vector<std::pair<UserId, double>> scored;
    for (const auto& [v, state] : adjacency_[u]) {
        const double sim = state.similarity();
        if (sim > 0.0) scored.emplace_back(users_[v].id, sim);
    }
    std::vector<Neighbor> out;
    for (auto& [id, sim] : top_n(std::move(scored), k)) out.push_back({id, sim});
    return out;
}

std::vector<Neighbor> UserModel::top_k_users(UserId u, std::size_t k) const {
    auto it = index_.find(u);
    if (it == index_.end()) return {};
    return rank_neighbors(it->second, k);
}

std::span<const Neighbor> UserModel::neighbors(UserId u) const {
    auto it = index_.find(u);
    if (it == index_.end()) return {};
    return users_[it->second].neighbors;
}

std::vector<ItemId> UserModel::popular(std::size_t n, std::span<const ItemId> exclude) const {
    std::unordered_set<ItemId> skip(exclude.begin(), exclude.end());
    std::vector<std::pair<ItemId, std::size_t>> scored;
    scored.reserve(item_users_.size());
    for (const auto& [item, holders] : item_users_) {
        if (!skip.contains(item)) scored.emplace_back(item, holders.size());
    }
    return top_n_ids(std::move(scored), n);
}

std::vector<ItemId> UserModel::recommend(UserId u, std::size_t n, std::span<const ItemId> also_exclude) const {
    std::unordered_set<ItemId> skip(also_exclude.begin(), also_exclude.end());
    auto it = index_.find(u);
    if (it != index_.end()) {
        const auto& own = users_[it->second].items;
        skip.insert(own.begin(), own.end());
    }
    const auto hood = neighbors(u);
    if (hood.empty()) {
        std::vector<ItemId> exclude(skip.begin(), skip.end());
        return popular(n, exclude);
    }
    std::unordered_map<ItemId, std::size_t> tally;
    for (const auto& neighbor : hood) {
        for (ItemId item : users_[index_.at(neighbor.user)].items) {
            if (!skip.contains(item)) ++tally[item];
        }
    }
    return top_n_ids(std::vector<std::pair<ItemId, std::size_t>>(tally.begin(), tally.end()), n);
}

void UserModel::save(std::ostream& out) const {
    persist::write_header(out, "cip-u");
    out << "k " << k_ << " dh " << delta_h_ << '\n';
    std::vector<std::uint32_t> order(users_.size());
    for (std::uint32_t u = 0; u < order.size(); ++u) order[u] = u;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return users_[a].id < users_[b].id; });

    out << "users " << users_.size() << '\n';
    for (std::uint32_t u : order) {
        out << users_[u].id << ' ' << users_[u].items.size();
        for (ItemId item : users_[u].items) out << ' ' << item;
        out << '\n';
    }
    std::vector<std::tuple<UserId, UserId, std::uint32_t, std::uint64_t>> rows;
    for (std::uint32_t u = 0; u < users_.size(); ++u) {
        for (const auto& [v, state] : adjacency_[u]) {
            if (users_[u].id < users_[v].id) rows.emplace_back(users_[u].id, users_[v].id, state.common, state.hp_count);
        }
    }
    std::sort(rows.begin(), rows.end());
    out << "pairs " << rows.size() << '\n';
    for (const auto& [u, v, common, hp] : rows) out << u << ' ' << v << ' ' << common << ' ' << hp << '\n';
}

UserModel UserModel::load(std::istream& in) {
    persist::expect_header(in, "cip-u");
    std::size_t k = 0, dh = 0, user_count = 0, pair_rows = 0;
    persist::expect_word(in, "k");
    in >> k;
    persist::expect_word(in, "dh");
    in >> dh;
    UserModel model(dh, k);
    persist::expect_word(in, "users");
    in >> user_count;
    for (std::size_t r = 0; r < user_count; ++r) {
        UserId id = 0;
        std::size_t n = 0;
        if (!(in >> id >> n)) throw Error("cip-u model: truncated profile list");
        const std::uint32_t u = model.intern(id);
        auto& state = model.users_[u];
        for (std::size_t j = 0; j < n; ++j) {
            ItemId item = 0;
            if (!(in >> item)) throw Error("cip-u model: truncated profile");
            state.position.emplace(item, static_cast<std::uint32_t>(state.items.size()));
            state.items.push_back(item);
            model.item_users_[item].push_back(u);
        }
    }
    persist::expect_word(in, "pairs");
    in >> pair_rows;
    for (std::size_t r = 0; r < pair_rows; ++r) {
        UserId a = 0, b = 0;
        PairState state;
        if (!(in >> a >> b >> state.common >> state.hp_count)) throw Error("cip-u model: truncated pair list");
        const auto u = model.index_.at(a);
        const auto v = model.index_.at(b);
        state.profiles_equal = model.profiles_equal(u, v, state);
        model.adjacency_[u][v] = state;
        model.adjacency_[v][u] = state;
    }
    for (std::uint32_t u = 0; u < model.users_.size(); ++u) model.users_[u].neighbors = model.rank_neighbors(u, k);
    return model;
}

void UserModel::apply_events(std::span<const Event> events, std::size_t batch_size) {
    if (batch_size == 0) throw Error("batch size must be positive");
    for (std::size_t start = 0; start < events.size(); start += batch_size) {
        Batch batch;
        const std::size_t end = std::min(events.size(), start + batch_size);
        for (std::size_t e = start; e < end; ++e) batch[events[e].user].push_back(events[e].item);
        apply_batch(batch);
    }
}

}  // namespace ciprec::cip_u

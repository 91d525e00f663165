#include "ciprec/recommenders.hpp"

#include <algorithm>

#include "ciprec/ranking.hpp"

namespace ciprec::recommenders {

namespace {

std::vector<std::vector<ItemId>> cips_of(std::span<const Consumption> profile, Timestamp delta) {
    std::vector<std::vector<ItemId>> cips;
    if (profile.empty()) return cips;
    auto bounds = cip_boundaries(profile, delta);
    bounds.push_back(profile.size());
    for (std::size_t c = 0; c + 1 < bounds.size(); ++c) {
        std::vector<ItemId> cip;
        for (std::size_t k = bounds[c]; k < bounds[c + 1]; ++k) cip.push_back(profile[k].item);
        cips.push_back(std::move(cip));
    }
    return cips;
}

}  // namespace

bool History::add(const Event& e) {
    if (!seen_[e.user].insert(e.item).second) return false;
    users_[e.user].push_back({e.item, e.timestamp});
    return true;
}

std::span<const Consumption> History::of(UserId u) const {
    auto it = users_.find(u);
    if (it == users_.end()) return {};
    return it->second;
}

std::vector<ItemId> History::items(UserId u) const {
    std::vector<ItemId> out;
    for (const auto& c : of(u)) out.push_back(c.item);
    return out;
}

bool History::contains(UserId u, ItemId item) const {
    auto it = seen_.find(u);
    return it != seen_.end() && it->second.contains(item);
}

std::vector<ItemId> PopularityIndex::top(std::size_t n, const std::unordered_set<ItemId>& exclude) const {
    if (dirty_) {
        std::vector<std::pair<ItemId, std::uint64_t>> all(count_.begin(), count_.end());
        order_ = top_n_ids(std::move(all), count_.size());
        dirty_ = false;
    }
    std::vector<ItemId> out;
    for (ItemId item : order_) {
        if (out.size() >= n) break;
        if (!exclude.contains(item)) out.push_back(item);
    }
    return out;
}

Base::Base(std::span<const Event> history) {
    for (const auto& e : history) {
        if (history_.add(e)) popularity_.add(e.item);
    }
}

void Base::observe(const Event& e) {
    if (history_.add(e)) pending_.push_back(e);
}

void Base::commit() {
    for (const auto& e : pending_) popularity_.add(e.item);
    update(pending_);
    pending_.clear();
}

std::vector<ItemId> Base::popular_for(UserId u, std::size_t n) const {
    const auto own = history_.items(u);
    return popularity_.top(n, std::unordered_set<ItemId>(own.begin(), own.end()));
}

CipU::CipU(cip_u::UserModel model, std::span<const Event> history) : Base(history), model_(std::move(model)) {}

std::vector<ItemId> CipU::recommend(UserId u, std::size_t n) {
    if (!model_.has_user(u) || model_.neighbors(u).empty()) return popular_for(u, n);
    return model_.recommend(u, n, history_.items(u));
}

void CipU::update(std::span<const Event> fresh) {
    cip_u::Batch batch;
    for (const auto& e : fresh) batch[e.user].push_back(e.item);
    model_.apply_batch(batch);
}

CipI::CipI(cip_i::ItemModel model, std::span<const Event> history) : Base(history), model_(std::move(model)) {}

std::vector<ItemId> CipI::recommend(UserId u, std::size_t n) {
    const auto profile = history_.items(u);
    if (profile.empty()) return popular_for(u, n);
    return model_.recommend(profile, n);
}

void CipI::update(std::span<const Event> fresh) {
    model_.ingest(fresh);
    model_.refresh_neighbors();
}

DeepCip::DeepCip(deepcip::EmbeddingModel model, Timestamp delta, std::span<const Event> history)
    : Base(history), model_(std::move(model)), delta_(delta) {}

std::vector<ItemId> DeepCip::recommend(UserId u, std::size_t n) {
    const auto profile = history_.items(u);
    const auto cips = cips_of(history_.of(u), delta_);
    for (auto it = cips.rbegin(); it != cips.rend(); ++it) {
        try {
            return deepcip::most_similar(model_, *it, n, profile);
        } catch (const Error&) {
            // No known item, or a zero query vector: try the previous CIP.
        }
    }
    return popular_for(u, n);
}

void DeepCip::update(std::span<const Event> fresh) {
    std::map<UserId, std::unordered_set<ItemId>> gained;
    for (const auto& e : fresh) gained[e.user].insert(e.item);
    std::vector<std::vector<ItemId>> corpus;
    for (const auto& [u, items] : gained) {
        for (auto& cip : cips_of(history_.of(u), delta_)) {
            if (std::any_of(cip.begin(), cip.end(), [&](ItemId i) { return items.contains(i); })) {
                corpus.push_back(std::move(cip));
            }
        }
    }
    if (corpus.empty()) return;
    model_ = deepcip::train(std::span<const std::vector<ItemId>>(corpus), model_.config(), &model_);
}

Fism::Fism(fism::FismModel model, Timestamp delta, std::span<const Event> history)
    : Base(history), model_(std::move(model)), delta_(delta) {}

std::vector<ItemId> Fism::recommend(UserId u, std::size_t n) {
    if (history_.of(u).empty()) return popular_for(u, n);
    auto cips = cips_of(history_.of(u), delta_);
    for (auto& cip : cips) std::erase_if(cip, [&](ItemId i) { return !model_.row_of(i); });
    return fism::recommend_fism(model_, cips, u, n);
}

cip_u::UserModel train_cip_u(std::span<const Event> events, std::size_t delta_h, std::size_t k) {
    cip_u::UserModel model(delta_h, k);
    model.apply_events(events, std::max<std::size_t>(1, events.size()));
    return model;
}

cip_i::ItemModel train_cip_i(std::span<const Event> events, Timestamp delta, std::size_t k) {
    cip_i::ItemModel model(delta, k);
    model.ingest(events);
    model.refresh_neighbors();
    return model;
}

std::vector<std::vector<ItemId>> cip_corpus(std::span<const Event> events, Timestamp delta) {
    History history;
    for (const auto& e : events) history.add(e);
    std::vector<std::vector<ItemId>> corpus;
    for (const auto& [u, profile] : history.users()) {
        for (auto& cip : cips_of(profile, delta)) corpus.push_back(std::move(cip));
    }
    return corpus;
}

deepcip::EmbeddingModel train_deepcip(std::span<const Event> events, Timestamp delta,
                                      const deepcip::TrainConfig& config, deepcip::TrainStats* stats) {
    const auto corpus = cip_corpus(events, delta);
    return deepcip::train(std::span<const std::vector<ItemId>>(corpus), config, nullptr, stats);
}

fism::FismModel train_fism(std::span<const Event> events, std::size_t rank, double alpha, std::uint64_t seed,
                           const fism::FitConfig* fit) {
    History history;
    std::set<ItemId> items;
    for (const auto& e : events) {
        history.add(e);
        items.insert(e.item);
    }
    auto model = fism::FismModel::random({items.begin(), items.end()}, rank, seed, alpha);
    if (fit) {
        std::map<UserId, std::vector<ItemId>> profiles;
        for (const auto& [u, p] : history.users()) profiles[u] = history.items(u);
        fism::fit_experimental(model, profiles, *fit);
    }
    return model;
}

}  // namespace ciprec::recommenders

#pragma once

// Adapters that put each model behind the evaluation interface. Every
// adapter keeps the users' consumption histories (training events plus
// whatever it has observed since) and falls back to the most consumed
// items when a user is unknown or the model has nothing to say.

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ciprec/cip_i.hpp"
#include "ciprec/cip_u.hpp"
#include "ciprec/deepcip.hpp"
#include "ciprec/evaluation.hpp"
#include "ciprec/fism.hpp"
#include "ciprec/ingest.hpp"

namespace ciprec::recommenders {

// Per-user first consumptions in arrival order.
class History {
public:
    // False for a re-consumption.
    bool add(const Event& e);
    std::span<const Consumption> of(UserId u) const;
    std::vector<ItemId> items(UserId u) const;
    bool contains(UserId u, ItemId item) const;
    const std::map<UserId, std::vector<Consumption>>& users() const noexcept { return users_; }

private:
    std::map<UserId, std::vector<Consumption>> users_;
    std::unordered_map<UserId, std::unordered_set<ItemId>> seen_;
};

// Items ranked by number of distinct consumers, ties by id.
class PopularityIndex {
public:
    void add(ItemId item) {
        ++count_[item];
        dirty_ = true;
    }
    std::vector<ItemId> top(std::size_t n, const std::unordered_set<ItemId>& exclude = {}) const;

private:
    std::unordered_map<ItemId, std::uint64_t> count_;
    mutable std::vector<ItemId> order_;
    mutable bool dirty_ = true;
};

// Shared bookkeeping: history, popularity and the events awaiting commit.
class Base : public analysis::Recommender {
public:
    explicit Base(std::span<const Event> history);
    void observe(const Event& e) override;
    void commit() override;

    const History& history() const noexcept { return history_; }

protected:
    std::vector<ItemId> popular_for(UserId u, std::size_t n) const;
    // Called by commit() with the first consumptions observed since the
    // last commit, in arrival order.
    virtual void update(std::span<const Event> fresh) { (void)fresh; }

    History history_;
    PopularityIndex popularity_;
    std::vector<Event> pending_;
};

class Popularity : public Base {
public:
    using Base::Base;
    std::string name() const override { return "popularity"; }
    std::vector<ItemId> recommend(UserId u, std::size_t n) override { return popular_for(u, n); }
};

class CipU : public Base {
public:
    CipU(cip_u::UserModel model, std::span<const Event> history);
    std::string name() const override { return "cip-u"; }
    std::vector<ItemId> recommend(UserId u, std::size_t n) override;
    const cip_u::UserModel& model() const noexcept { return model_; }

private:
    void update(std::span<const Event> fresh) override;
    cip_u::UserModel model_;
};

class CipI : public Base {
public:
    CipI(cip_i::ItemModel model, std::span<const Event> history);
    std::string name() const override { return "cip-i"; }
    std::vector<ItemId> recommend(UserId u, std::size_t n) override;
    const cip_i::ItemModel& model() const noexcept { return model_; }

private:
    void update(std::span<const Event> fresh) override;
    cip_i::ItemModel model_;
};

// Queries with the user's latest CIP, stepping back to earlier CIPs when
// none of its items is in the vocabulary. Commits retrain the model, warm,
// on the CIPs that received new items.
class DeepCip : public Base {
public:
    DeepCip(deepcip::EmbeddingModel model, Timestamp delta, std::span<const Event> history);
    std::string name() const override { return "deepcip"; }
    std::vector<ItemId> recommend(UserId u, std::size_t n) override;
    const deepcip::EmbeddingModel& model() const noexcept { return model_; }

private:
    void update(std::span<const Event> fresh) override;
    deepcip::EmbeddingModel model_;
    Timestamp delta_;
};

// Scores with the user's CIPs, leaving out items outside the catalog.
class Fism : public Base {
public:
    Fism(fism::FismModel model, Timestamp delta, std::span<const Event> history);
    std::string name() const override { return "fism"; }
    std::vector<ItemId> recommend(UserId u, std::size_t n) override;
    const fism::FismModel& model() const noexcept { return model_; }

private:
    fism::FismModel model_;
    Timestamp delta_;
};

// Training from a time-ordered event stream.
cip_u::UserModel train_cip_u(std::span<const Event> events, std::size_t delta_h, std::size_t k);
cip_i::ItemModel train_cip_i(std::span<const Event> events, Timestamp delta, std::size_t k);
// Sequences of the δ-partitioned profiles, users in ascending id.
std::vector<std::vector<ItemId>> cip_corpus(std::span<const Event> events, Timestamp delta);
deepcip::EmbeddingModel train_deepcip(std::span<const Event> events, Timestamp delta,
                                      const deepcip::TrainConfig& config, deepcip::TrainStats* stats = nullptr);
// Random factors over the items of the stream, optionally fitted.
fism::FismModel train_fism(std::span<const Event> events, std::size_t rank, double alpha, std::uint64_t seed,
                           const fism::FitConfig* fit = nullptr);

}  // namespace ciprec::recommenders

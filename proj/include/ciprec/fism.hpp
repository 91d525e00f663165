#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "ciprec/ingest.hpp"
#include "ciprec/types.hpp"

namespace ciprec::fism {

// Factored item similarity sim(i, j) = p_j . q_i with user and item
// biases. Factors are supplied, loaded, or drawn at random; fitting them is
// not this module's job (see fit_experimental).
class FismModel {
public:
    // Zero factors and biases over the given catalog (sorted, deduplicated).
    FismModel(std::vector<ItemId> items, std::size_t rank, double alpha = 0.5);

    // Factors drawn from N(0, 0.01^2), biases zero.
    static FismModel random(std::vector<ItemId> items, std::size_t rank, std::uint64_t seed, double alpha = 0.5);

    std::size_t size() const noexcept { return items_.size(); }
    std::size_t rank() const noexcept { return rank_; }
    double alpha() const noexcept { return alpha_; }
    std::span<const ItemId> items() const noexcept { return items_; }
    std::optional<std::size_t> row_of(ItemId item) const;

    std::span<double> p(std::size_t row) { return {p_.data() + row * rank_, rank_}; }
    std::span<const double> p(std::size_t row) const { return {p_.data() + row * rank_, rank_}; }
    std::span<double> q(std::size_t row) { return {q_.data() + row * rank_, rank_}; }
    std::span<const double> q(std::size_t row) const { return {q_.data() + row * rank_, rank_}; }

    double& item_bias(std::size_t row) { return item_bias_.at(row); }
    double item_bias(std::size_t row) const { return item_bias_.at(row); }
    // Unknown users have bias 0.
    double user_bias(UserId user) const;
    void set_user_bias(UserId user, double bias) { user_bias_[user] = bias; }
    const std::map<UserId, double>& user_biases() const noexcept { return user_bias_; }

    void save(std::ostream& out) const;
    static FismModel load(std::istream& in);

    friend bool operator==(const FismModel&, const FismModel&) = default;

private:
    std::size_t rank_;
    double alpha_;
    std::vector<ItemId> items_;
    std::unordered_map<ItemId, std::size_t> index_;
    std::vector<double> p_;
    std::vector<double> q_;
    std::vector<double> item_bias_;
    std::map<UserId, double> user_bias_;
};

// b_u + b_i + |R|^-alpha * sum over the CIPs of sum_j p_j . q_i, where R is
// the union of the CIPs. An empty profile scores the biases alone. Throws
// on unknown items and when i is already in the profile.
double fism_score(const FismModel& model, std::span<const std::vector<ItemId>> user_cips, UserId u, ItemId i);
double fism_score(const FismModel& model, std::span<const Cip> user_cips, UserId u, ItemId i);

// Every catalog item outside the profile scored, top n, ties by id.
std::vector<ItemId> recommend_fism(const FismModel& model, std::span<const std::vector<ItemId>> user_cips, UserId u,
                                   std::size_t n);
std::vector<ItemId> recommend_fism(const FismModel& model, std::span<const Cip> user_cips, UserId u, std::size_t n);

struct FitConfig {
    std::size_t epochs = 10;
    std::size_t negatives = 3;  // unconsumed items sampled per positive, target 0
    double learning_rate = 0.01;
    double regularization = 1e-4;
    std::uint64_t seed = 1;
};

// Experimental plumbing: pointwise squared-error SGD on consumed (1) versus
// sampled unconsumed (0) items, each positive scored against the rest of
// its profile. Not tuned and not meant to reproduce published accuracy.
void fit_experimental(FismModel& model, const std::map<UserId, std::vector<ItemId>>& profiles,
                      const FitConfig& config);

}  // namespace ciprec::fism

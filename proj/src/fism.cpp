#include "ciprec/fism.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include "ciprec/persist.hpp"
#include "ciprec/ranking.hpp"

namespace ciprec::fism {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

std::size_t require_row(const FismModel& model, ItemId item) {
    auto row = model.row_of(item);
    if (!row) throw Error("fism: unknown item " + std::to_string(item));
    return *row;
}

std::vector<std::vector<ItemId>> items_of(std::span<const Cip> cips) {
    std::vector<std::vector<ItemId>> out;
    out.reserve(cips.size());
    for (const auto& c : cips) out.push_back(c.items);
    return out;
}

// Sum over the profile of p_j, kept CIP by CIP, plus the profile size.
struct Aggregate {
    std::vector<double> p_sum;
    std::size_t profile_size = 0;
    std::unordered_set<ItemId> consumed;
};

Aggregate aggregate(const FismModel& model, std::span<const std::vector<ItemId>> user_cips) {
    Aggregate agg;
    agg.p_sum.assign(model.rank(), 0.0);
    for (const auto& cip : user_cips) {
        std::vector<double> cip_sum(model.rank(), 0.0);
        for (ItemId j : cip) {
            const auto p = model.p(require_row(model, j));
            for (std::size_t k = 0; k < p.size(); ++k) cip_sum[k] += p[k];
            agg.consumed.insert(j);
        }
        for (std::size_t k = 0; k < cip_sum.size(); ++k) agg.p_sum[k] += cip_sum[k];
    }
    agg.profile_size = agg.consumed.size();
    return agg;
}

double score_with(const FismModel& model, const Aggregate& agg, UserId u, std::size_t row) {
    double s = model.user_bias(u) + model.item_bias(row);
    if (agg.profile_size > 0) {
        s += std::pow(static_cast<double>(agg.profile_size), -model.alpha()) * dot(agg.p_sum, model.q(row));
    }
    return s;
}

}  // namespace

FismModel::FismModel(std::vector<ItemId> items, std::size_t rank, double alpha)
    : rank_(rank), alpha_(alpha), items_(std::move(items)) {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw Error("fism: alpha must lie in [0, 1]");
    if (rank_ == 0 || rank_ >= std::max<std::size_t>(items_.size(), 1)) {
        throw Error("fism: rank must satisfy 0 < k < number of items");
    }
    for (std::size_t r = 0; r < items_.size(); ++r) index_.emplace(items_[r], r);
    p_.assign(items_.size() * rank_, 0.0);
    q_.assign(items_.size() * rank_, 0.0);
    item_bias_.assign(items_.size(), 0.0);
}

FismModel FismModel::random(std::vector<ItemId> items, std::size_t rank, std::uint64_t seed, double alpha) {
    FismModel model(std::move(items), rank, alpha);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.01);
    for (auto& x : model.p_) x = normal(rng);
    for (auto& x : model.q_) x = normal(rng);
    return model;
}

std::optional<std::size_t> FismModel::row_of(ItemId item) const {
    auto it = index_.find(item);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double FismModel::user_bias(UserId user) const {
    auto it = user_bias_.find(user);
    return it == user_bias_.end() ? 0.0 : it->second;
}

void FismModel::save(std::ostream& out) const {
    persist::write_header(out, "fism");
    out << "n " << size() << " k " << rank_ << " alpha " << persist::format_double(alpha_) << '\n';
    out << "items " << size() << '\n';
    for (std::size_t r = 0; r < size(); ++r) out << items_[r] << ' ' << persist::format_double(item_bias_[r]) << '\n';
    out << "users " << user_bias_.size() << '\n';
    for (const auto& [u, b] : user_bias_) out << u << ' ' << persist::format_double(b) << '\n';
    for (double x : p_) persist::write_f64(out, x);
    for (double x : q_) persist::write_f64(out, x);
    out << '\n';
}

FismModel FismModel::load(std::istream& in) {
    persist::expect_header(in, "fism");
    std::size_t n = 0, k = 0, n_users = 0;
    double alpha = 0.0;
    persist::expect_word(in, "n");
    in >> n;
    persist::expect_word(in, "k");
    in >> k;
    persist::expect_word(in, "alpha");
    in >> alpha;
    persist::expect_word(in, "items");
    std::size_t n_items = 0;
    in >> n_items;
    if (!in || n_items != n) throw Error("fism model: malformed header");
    std::vector<ItemId> items(n);
    std::vector<double> bias(n);
    for (std::size_t r = 0; r < n; ++r) in >> items[r] >> bias[r];
    persist::expect_word(in, "users");
    in >> n_users;
    std::map<UserId, double> users;
    for (std::size_t u = 0; u < n_users; ++u) {
        UserId id = 0;
        double b = 0.0;
        in >> id >> b;
        users[id] = b;
    }
    if (!in || in.get() != '\n') throw Error("fism model: malformed bias section");
    if (!std::is_sorted(items.begin(), items.end())) throw Error("fism model: items out of order");

    FismModel model(items, k, alpha);
    model.item_bias_ = std::move(bias);
    model.user_bias_ = std::move(users);
    for (auto& x : model.p_) x = persist::read_f64(in);
    for (auto& x : model.q_) x = persist::read_f64(in);
    if (in.peek() == '\n') in.get();
    return model;
}

double fism_score(const FismModel& model, std::span<const std::vector<ItemId>> user_cips, UserId u, ItemId i) {
    const auto row = require_row(model, i);
    const auto agg = aggregate(model, user_cips);
    if (agg.consumed.contains(i)) throw Error("fism: item " + std::to_string(i) + " is already in the profile");
    return score_with(model, agg, u, row);
}

double fism_score(const FismModel& model, std::span<const Cip> user_cips, UserId u, ItemId i) {
    const auto cips = items_of(user_cips);
    return fism_score(model, cips, u, i);
}

std::vector<ItemId> recommend_fism(const FismModel& model, std::span<const std::vector<ItemId>> user_cips, UserId u,
                                   std::size_t n) {
    const auto agg = aggregate(model, user_cips);
    std::vector<std::pair<ItemId, double>> scored;
    scored.reserve(model.size());
    for (std::size_t r = 0; r < model.size(); ++r) {
        const ItemId item = model.items()[r];
        if (!agg.consumed.contains(item)) scored.emplace_back(item, score_with(model, agg, u, r));
    }
    return top_n_ids(std::move(scored), n);
}

std::vector<ItemId> recommend_fism(const FismModel& model, std::span<const Cip> user_cips, UserId u, std::size_t n) {
    const auto cips = items_of(user_cips);
    return recommend_fism(model, cips, u, n);
}

void fit_experimental(FismModel& model, const std::map<UserId, std::vector<ItemId>>& profiles,
                      const FitConfig& config) {
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> any_row(0, model.size() - 1);
    const std::size_t k = model.rank();
    const double lr = config.learning_rate, reg = config.regularization;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (const auto& [u, items] : profiles) {
            if (items.size() < 2) continue;
            std::vector<std::size_t> rows;
            std::unordered_set<std::size_t> own;
            for (ItemId j : items) {
                rows.push_back(require_row(model, j));
                own.insert(rows.back());
            }
            std::vector<double> p_sum(k, 0.0);
            for (auto r : rows) {
                for (std::size_t d = 0; d < k; ++d) p_sum[d] += model.p(r)[d];
            }
            // Positives are scored against the profile without themselves.
            auto step = [&](std::size_t target, double label, bool leave_out) {
                const auto context_size = rows.size() - (leave_out ? 1 : 0);
                const double norm = std::pow(static_cast<double>(context_size), -model.alpha());
                std::vector<double> context = p_sum;
                if (leave_out) {
                    for (std::size_t d = 0; d < k; ++d) context[d] -= model.p(target)[d];
                }
                auto q = model.q(target);
                const double pred = model.user_bias(u) + model.item_bias(target) + norm * dot(context, q);
                const double err = pred - label;
                model.set_user_bias(u, model.user_bias(u) - lr * (err + reg * model.user_bias(u)));
                model.item_bias(target) -= lr * (err + reg * model.item_bias(target));
                std::vector<double> q_old(q.begin(), q.end());
                for (std::size_t d = 0; d < k; ++d) q[d] -= lr * (err * norm * context[d] + reg * q[d]);
                for (auto r : rows) {
                    if (leave_out && r == target) continue;
                    auto p = model.p(r);
                    for (std::size_t d = 0; d < k; ++d) {
                        const double delta = lr * (err * norm * q_old[d] + reg * p[d]);
                        p[d] -= delta;
                        p_sum[d] -= delta;
                    }
                }
            };

            for (auto target : rows) {
                step(target, 1.0, true);
                for (std::size_t s = 0; s < config.negatives; ++s) {
                    const auto neg = any_row(rng);
                    if (!own.contains(neg)) step(neg, 0.0, false);
                }
            }
        }
    }
}

}  // namespace ciprec::fism

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ciprec/ingest.hpp"
#include "ciprec/types.hpp"

namespace ciprec::deepcip {

struct TrainConfig {
    std::size_t window = 5;     // maximum hop between paired items
    std::size_t negatives = 5;  // negative samples per pair
    std::size_t dim = 100;
    std::size_t epochs = 5;
    std::size_t workers = 1;
    // Items first seen in a corpus fewer times than this get no row and are
    // removed from its sequences. Existing rows are always kept.
    std::size_t min_count = 1;
    double learning_rate = 0.025;  // decays linearly to 1e-4 of this
    std::uint64_t seed = 1;

    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

using Rng = std::mt19937_64;

// (target, context) for every ordered pair at most `window` hops apart.
std::vector<std::pair<ItemId, ItemId>> gen_pairs(std::span<const ItemId> cip, std::size_t window);

// Item vocabulary with input (projection) and output vectors, row-major.
class EmbeddingModel {
public:
    explicit EmbeddingModel(std::size_t dim = 100);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return items_.size(); }
    std::optional<std::size_t> row_of(ItemId item) const;
    ItemId item_at(std::size_t row) const { return items_.at(row); }
    std::span<const ItemId> items() const noexcept { return items_; }

    std::span<double> input(std::size_t row) { return {input_.data() + row * dim_, dim_}; }
    std::span<const double> input(std::size_t row) const { return {input_.data() + row * dim_, dim_}; }
    std::span<double> output(std::size_t row) { return {output_.data() + row * dim_, dim_}; }
    std::span<const double> output(std::size_t row) const { return {output_.data() + row * dim_, dim_}; }

    std::uint64_t count(std::size_t row) const { return counts_.at(row); }
    void add_count(std::size_t row, std::uint64_t n) { counts_.at(row) += n; }

    // New row: input uniform in [-0.5/d, 0.5/d], output zero.
    std::size_t add_item(ItemId item, Rng& rng);

    const TrainConfig& config() const noexcept { return config_; }
    void set_config(const TrainConfig& config) { config_ = config; }

    bool all_finite() const;

    void save(std::ostream& out) const;
    static EmbeddingModel load(std::istream& in);

    friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;

private:
    std::size_t dim_;
    std::vector<ItemId> items_;
    std::unordered_map<ItemId, std::size_t> index_;
    std::vector<double> input_;
    std::vector<double> output_;
    std::vector<std::uint64_t> counts_;
    TrainConfig config_;
};

// Draws rows with probability proportional to count^0.75.
class NegativeSampler {
public:
    explicit NegativeSampler(const EmbeddingModel& model);
    std::size_t draw(Rng& rng) const;
    std::size_t size() const noexcept { return cumulative_.size(); }

private:
    std::vector<double> cumulative_;
};

// Loss and gradient of one (target, context) pair against fixed negatives:
// -log s(in_t . out_c) - sum_n log s(-in_t . out_n).
struct SgnsGradient {
    double loss = 0.0;
    std::vector<double> input;  // d loss / d input(target)
    // d loss / d output(row); repeated rows are merged.
    std::vector<std::pair<std::size_t, std::vector<double>>> output;
};

SgnsGradient sgns_gradient(const EmbeddingModel& model, std::size_t target_row, std::size_t context_row,
                           std::span<const std::size_t> negative_rows);

// Draws k_neg negatives (never the context row when another row exists),
// applies one SGD step to the rows involved and returns the pair's loss
// before the step.
double sgns_step(EmbeddingModel& model, ItemId target, ItemId context, std::size_t k_neg, double lr, Rng& rng,
                 const NegativeSampler& sampler);

struct TrainStats {
    std::vector<double> epoch_loss;  // mean pair loss per epoch
    std::size_t pairs = 0;           // pairs processed over all epochs
    double seconds = 0.0;

    double pairs_per_second() const { return seconds > 0 ? static_cast<double>(pairs) / seconds : 0.0; }
};

// Skip-gram training over the CIP corpus. With workers > 1 the CIPs are
// sharded across threads that pull rows from a shared store and push
// their updates without any lock spanning more than one row. Passing a
// warm model continues training it: existing rows are kept and unseen
// items get fresh rows.
EmbeddingModel train(std::span<const Cip> corpus, const TrainConfig& config, const EmbeddingModel* warm = nullptr,
                     TrainStats* stats = nullptr);
EmbeddingModel train(std::span<const std::vector<ItemId>> corpus, const TrainConfig& config,
                     const EmbeddingModel* warm = nullptr, TrainStats* stats = nullptr);

double cosine(std::span<const double> a, std::span<const double> b);

// Mean of the input vectors of the known items. Throws if none is known.
std::vector<double> cip_vector(const EmbeddingModel& model, std::span<const ItemId> cip);

// Items ranked by cosine between their input vector and the CIP vector,
// excluded items left out, ties by ascending id.
std::vector<ItemId> most_similar(const EmbeddingModel& model, std::span<const ItemId> cip, std::size_t n,
                                 std::span<const ItemId> exclude = {});

}  // namespace ciprec::deepcip

#include "ciprec/deepcip.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>

#include "ciprec/persist.hpp"
#include "ciprec/ranking.hpp"

namespace ciprec::deepcip {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double dot(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
}

// Local copies of the rows touched by one pair, plus gradient buffers.
// samples[0] is the context row, the rest are negatives; slot[s] points
// into the deduplicated `rows`.
struct PairScratch {
    std::size_t dim = 0;
    std::vector<std::size_t> samples;
    std::vector<std::size_t> rows;
    std::vector<std::size_t> slot;
    std::vector<double> h;
    std::vector<double> outs;
    std::vector<double> g_in;
    std::vector<double> g_out;

    explicit PairScratch(std::size_t d) : dim(d), h(d), g_in(d) {}

    void index_rows() {
        rows.clear();
        slot.clear();
        for (std::size_t r : samples) {
            auto it = std::find(rows.begin(), rows.end(), r);
            slot.push_back(static_cast<std::size_t>(it - rows.begin()));
            if (it == rows.end()) rows.push_back(r);
        }
        outs.assign(rows.size() * dim, 0.0);
        g_out.assign(rows.size() * dim, 0.0);
    }

    // Gradient of the pair loss at the copied parameters.
    double compute() {
        std::fill(g_in.begin(), g_in.end(), 0.0);
        std::fill(g_out.begin(), g_out.end(), 0.0);
        double loss = 0.0;
        for (std::size_t s = 0; s < samples.size(); ++s) {
            const double* out = outs.data() + slot[s] * dim;
            const double f = dot(h.data(), out, dim);
            const double label = s == 0 ? 1.0 : 0.0;
            loss -= s == 0 ? log_sigmoid(f) : log_sigmoid(-f);
            // d loss / d f = sigmoid(f) - label
            const double g = sigmoid(f) - label;
            double* gout = g_out.data() + slot[s] * dim;
            for (std::size_t k = 0; k < dim; ++k) {
                g_in[k] += g * out[k];
                gout[k] += g * h[k];
            }
        }
        return loss;
    }
};

void draw_samples(PairScratch& scratch, std::size_t context_row, std::size_t k_neg, Rng& rng,
                  const NegativeSampler& sampler) {
    scratch.samples.clear();
    scratch.samples.push_back(context_row);
    for (std::size_t n = 0; n < k_neg && sampler.size() > 0; ++n) {
        std::size_t row = sampler.draw(rng);
        for (int attempt = 0; row == context_row && sampler.size() > 1 && attempt < 64; ++attempt)
            row = sampler.draw(rng);
        scratch.samples.push_back(row);
    }
}

// Spin lock per row. Updates to one row are atomic; nothing spans rows.
class RowLocks {
public:
    explicit RowLocks(std::size_t n) : flags_(std::make_unique<std::atomic_flag[]>(n)) {}

    void lock(std::size_t row) {
        while (flags_[row].test_and_set(std::memory_order_acquire)) std::this_thread::yield();
    }
    void unlock(std::size_t row) { flags_[row].clear(std::memory_order_release); }

private:
    std::unique_ptr<std::atomic_flag[]> flags_;
};

// Shared parameter store for asynchronous workers.
class ParameterStore {
public:
    explicit ParameterStore(EmbeddingModel& model)
        : model_(model), input_locks_(model.size()), output_locks_(model.size()) {}

    void pull(std::size_t target, PairScratch& s) {
        copy_locked(input_locks_, target, model_.input(target), s.h.data());
        for (std::size_t r = 0; r < s.rows.size(); ++r)
            copy_locked(output_locks_, s.rows[r], model_.output(s.rows[r]), s.outs.data() + r * s.dim);
    }

    void push(std::size_t target, const PairScratch& s, double lr) {
        add_locked(input_locks_, target, model_.input(target), s.g_in.data(), -lr);
        for (std::size_t r = 0; r < s.rows.size(); ++r)
            add_locked(output_locks_, s.rows[r], model_.output(s.rows[r]), s.g_out.data() + r * s.dim, -lr);
    }

private:
    static void copy_locked(RowLocks& locks, std::size_t row, std::span<const double> src, double* dst) {
        locks.lock(row);
        std::copy(src.begin(), src.end(), dst);
        locks.unlock(row);
    }
    static void add_locked(RowLocks& locks, std::size_t row, std::span<double> dst, const double* delta,
                           double scale) {
        locks.lock(row);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * delta[k];
        locks.unlock(row);
    }

    EmbeddingModel& model_;
    RowLocks input_locks_;
    RowLocks output_locks_;
};

struct EncodedPair {
    std::uint32_t target;
    std::uint32_t context;
};

EmbeddingModel train_impl(std::vector<std::vector<ItemId>> sequences,
                          const TrainConfig& config, const EmbeddingModel* warm, TrainStats* stats) {
    config.validate();
    if (sequences.empty()) throw Error("cannot train on an empty corpus");

    EmbeddingModel model = warm ? *warm : EmbeddingModel(config.dim);
    if (warm && warm->dim() != config.dim) throw Error("warm-start model has a different dimension");
    model.set_config(config);

    Rng init_rng(config.seed);
    std::map<ItemId, std::size_t> fresh;
    for (const auto& seq : sequences) {
        for (ItemId item : seq) {
            if (!model.row_of(item)) ++fresh[item];
        }
    }
    for (auto [item, n] : fresh) {
        if (n >= config.min_count) model.add_item(item, init_rng);
    }
    if (config.min_count > 1) {
        for (auto& seq : sequences) std::erase_if(seq, [&](ItemId item) { return !model.row_of(item); });
    }
    for (const auto& seq : sequences) {
        for (ItemId item : seq) model.add_count(*model.row_of(item), 1);
    }
    const NegativeSampler sampler(model);

    // Encode every CIP's pairs once; worker w owns CIPs w, w + W, ...
    const std::size_t workers = config.workers;
    std::vector<std::vector<EncodedPair>> shards(workers);
    for (std::size_t c = 0; c < sequences.size(); ++c) {
        for (auto [t, ctx] : gen_pairs(sequences[c], config.window)) {
            shards[c % workers].push_back(
                {static_cast<std::uint32_t>(*model.row_of(t)), static_cast<std::uint32_t>(*model.row_of(ctx))});
        }
    }
    std::size_t pairs_per_epoch = 0;
    for (const auto& s : shards) pairs_per_epoch += s.size();
    const double total = static_cast<double>(pairs_per_epoch * config.epochs);

    ParameterStore store(model);
    std::vector<Rng> rngs;
    for (std::size_t w = 0; w < workers; ++w) {
        std::seed_seq seq{config.seed, static_cast<std::uint64_t>(w), std::uint64_t{0x5eed}};
        rngs.emplace_back(seq);
    }

    TrainStats local;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<double> loss(workers, 0.0);
        auto run = [&](std::size_t w) {
            PairScratch scratch(model.dim());
            double sum = 0.0;
            // Progress is estimated from this worker's own position so the
            // hot loop shares no counter.
            const double scale = static_cast<double>(pairs_per_epoch) / static_cast<double>(std::max<std::size_t>(1, shards[w].size()));
            std::size_t mine = 0;
            for (const auto& p : shards[w]) {
                const double done = static_cast<double>(epoch * pairs_per_epoch) + scale * static_cast<double>(mine++);
                const double lr = config.learning_rate * std::max(1e-4, 1.0 - done / total);
                draw_samples(scratch, p.context, config.negatives, rngs[w], sampler);
                scratch.index_rows();
                store.pull(p.target, scratch);
                sum += scratch.compute();
                store.push(p.target, scratch, lr);
            }
            loss[w] = sum;
        };
        if (workers == 1) {
            run(0);
        } else {
            std::vector<std::jthread> threads;
            for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
        }
        const double sum = std::accumulate(loss.begin(), loss.end(), 0.0);
        local.epoch_loss.push_back(pairs_per_epoch ? sum / static_cast<double>(pairs_per_epoch) : 0.0);
    }
    local.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    local.pairs = pairs_per_epoch * config.epochs;
    if (stats) *stats = local;
    return model;
}

}  // namespace

void TrainConfig::validate() const {
    if (window < 1) throw Error("window must be at least 1");
    if (negatives < 1) throw Error("negatives must be at least 1");
    if (dim < 2) throw Error("dimension must be at least 2");
    if (workers < 1) throw Error("workers must be at least 1");
    if (min_count < 1) throw Error("min_count must be at least 1");
    if (!(learning_rate > 0)) throw Error("learning rate must be positive");
}

std::vector<std::pair<ItemId, ItemId>> gen_pairs(std::span<const ItemId> cip, std::size_t window) {
    if (window < 1) throw Error("window must be at least 1");
    std::vector<std::pair<ItemId, ItemId>> pairs;
    for (std::size_t t = 0; t < cip.size(); ++t) {
        const std::size_t lo = t >= window ? t - window : 0;
        const std::size_t hi = std::min(cip.size() - 1, t + window);
        for (std::size_t c = lo; c <= hi; ++c) {
            if (c != t) pairs.emplace_back(cip[t], cip[c]);
        }
    }
    return pairs;
}

EmbeddingModel::EmbeddingModel(std::size_t dim) : dim_(dim) {
    if (dim < 2) throw Error("dimension must be at least 2");
    config_.dim = dim;
}

std::optional<std::size_t> EmbeddingModel::row_of(ItemId item) const {
    auto it = index_.find(item);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t EmbeddingModel::add_item(ItemId item, Rng& rng) {
    if (auto row = row_of(item)) return *row;
    const std::size_t row = items_.size();
    items_.push_back(item);
    index_.emplace(item, row);
    counts_.push_back(0);
    const double bound = 0.5 / static_cast<double>(dim_);
    std::uniform_real_distribution<double> init(-bound, bound);
    for (std::size_t k = 0; k < dim_; ++k) input_.push_back(init(rng));
    output_.resize(output_.size() + dim_, 0.0);
    return row;
}

bool EmbeddingModel::all_finite() const {
    auto finite = [](double x) { return std::isfinite(x); };
    return std::all_of(input_.begin(), input_.end(), finite) && std::all_of(output_.begin(), output_.end(), finite);
}

void EmbeddingModel::save(std::ostream& out) const {
    persist::write_header(out, "deepcip");
    out << "n " << size() << " d " << dim_ << " window " << config_.window << " negatives " << config_.negatives
        << " epochs " << config_.epochs << " workers " << config_.workers << " min_count " << config_.min_count << " lr "
        << persist::format_double(config_.learning_rate) << " seed " << config_.seed << '\n';
    for (std::size_t r = 0; r < size(); ++r) {
        persist::write_i64(out, items_[r]);
        persist::write_i64(out, static_cast<std::int64_t>(counts_[r]));
        for (double x : input(r)) persist::write_f64(out, x);
        for (double x : output(r)) persist::write_f64(out, x);
    }
    out << '\n';
}

EmbeddingModel EmbeddingModel::load(std::istream& in) {
    persist::expect_header(in, "deepcip");
    std::string line;
    std::getline(in, line);
    std::istringstream head(line);
    std::size_t n = 0, d = 0;
    TrainConfig config;
    persist::expect_word(head, "n");
    head >> n;
    persist::expect_word(head, "d");
    head >> d;
    persist::expect_word(head, "window");
    head >> config.window;
    persist::expect_word(head, "negatives");
    head >> config.negatives;
    persist::expect_word(head, "epochs");
    head >> config.epochs;
    persist::expect_word(head, "workers");
    head >> config.workers;
    persist::expect_word(head, "min_count");
    head >> config.min_count;
    persist::expect_word(head, "lr");
    head >> config.learning_rate;
    persist::expect_word(head, "seed");
    head >> config.seed;
    if (!head) throw Error("deepcip model: malformed header line");
    config.dim = d;

    EmbeddingModel model(d);
    model.config_ = config;
    model.items_.reserve(n);
    model.input_.reserve(n * d);
    model.output_.reserve(n * d);
    for (std::size_t r = 0; r < n; ++r) {
        const ItemId item = persist::read_i64(in);
        model.index_.emplace(item, r);
        model.items_.push_back(item);
        model.counts_.push_back(static_cast<std::uint64_t>(persist::read_i64(in)));
        for (std::size_t k = 0; k < d; ++k) model.input_.push_back(persist::read_f64(in));
        for (std::size_t k = 0; k < d; ++k) model.output_.push_back(persist::read_f64(in));
    }
    if (in.peek() == '\n') in.get();
    return model;
}

NegativeSampler::NegativeSampler(const EmbeddingModel& model) {
    double acc = 0.0;
    cumulative_.reserve(model.size());
    for (std::size_t r = 0; r < model.size(); ++r) {
        acc += std::pow(static_cast<double>(model.count(r)), 0.75);
        cumulative_.push_back(acc);
    }
}

std::size_t NegativeSampler::draw(Rng& rng) const {
    // 53 random bits -> uniform in [0, 1); the mapping is fixed so draws
    // are reproducible across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double x = u * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
}

SgnsGradient sgns_gradient(const EmbeddingModel& model, std::size_t target_row, std::size_t context_row,
                           std::span<const std::size_t> negative_rows) {
    PairScratch s(model.dim());
    s.samples.push_back(context_row);
    s.samples.insert(s.samples.end(), negative_rows.begin(), negative_rows.end());
    s.index_rows();
    const auto h = model.input(target_row);
    std::copy(h.begin(), h.end(), s.h.begin());
    for (std::size_t r = 0; r < s.rows.size(); ++r) {
        const auto o = model.output(s.rows[r]);
        std::copy(o.begin(), o.end(), s.outs.begin() + static_cast<std::ptrdiff_t>(r * s.dim));
    }
    SgnsGradient g;
    g.loss = s.compute();
    g.input = s.g_in;
    for (std::size_t r = 0; r < s.rows.size(); ++r) {
        g.output.emplace_back(s.rows[r], std::vector<double>(s.g_out.begin() + static_cast<std::ptrdiff_t>(r * s.dim),
                                                             s.g_out.begin() + static_cast<std::ptrdiff_t>((r + 1) * s.dim)));
    }
    return g;
}

double sgns_step(EmbeddingModel& model, ItemId target, ItemId context, std::size_t k_neg, double lr, Rng& rng,
                 const NegativeSampler& sampler) {
    const auto t = model.row_of(target);
    const auto c = model.row_of(context);
    if (!t || !c) throw Error("sgns_step: item outside the vocabulary");
    PairScratch s(model.dim());
    draw_samples(s, *c, k_neg, rng, sampler);
    const std::vector<std::size_t> negatives(s.samples.begin() + 1, s.samples.end());
    const auto g = sgns_gradient(model, *t, *c, negatives);
    auto in = model.input(*t);
    for (std::size_t k = 0; k < in.size(); ++k) in[k] -= lr * g.input[k];
    for (const auto& [row, grad] : g.output) {
        auto out = model.output(row);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] -= lr * grad[k];
    }
    return g.loss;
}

EmbeddingModel train(std::span<const Cip> corpus, const TrainConfig& config, const EmbeddingModel* warm,
                     TrainStats* stats) {
    std::vector<std::vector<ItemId>> sequences;
    sequences.reserve(corpus.size());
    for (const auto& cip : corpus) sequences.push_back(cip.items);
    return train_impl(std::move(sequences), config, warm, stats);
}

EmbeddingModel train(std::span<const std::vector<ItemId>> corpus, const TrainConfig& config,
                     const EmbeddingModel* warm, TrainStats* stats) {
    return train_impl(std::vector<std::vector<ItemId>>(corpus.begin(), corpus.end()), config, warm, stats);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = std::sqrt(dot(a.data(), a.data(), a.size()));
    const double nb = std::sqrt(dot(b.data(), b.data(), b.size()));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a.data(), b.data(), a.size()) / (na * nb), -1.0, 1.0);
}

std::vector<double> cip_vector(const EmbeddingModel& model, std::span<const ItemId> cip) {
    std::vector<double> mean(model.dim(), 0.0);
    std::size_t known = 0;
    for (ItemId item : cip) {
        auto row = model.row_of(item);
        if (!row) continue;
        const auto v = model.input(*row);
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v[k];
        ++known;
    }
    if (known == 0) throw Error("cip_vector: no item of the CIP is in the vocabulary");
    for (double& x : mean) x /= static_cast<double>(known);
    return mean;
}

std::vector<ItemId> most_similar(const EmbeddingModel& model, std::span<const ItemId> cip, std::size_t n,
                                 std::span<const ItemId> exclude) {
    const auto query = cip_vector(model, cip);
    const double qn = std::sqrt(dot(query.data(), query.data(), query.size()));
    if (qn == 0.0) throw Error("most_similar: zero-norm query vector");
    std::unordered_set<ItemId> skip(exclude.begin(), exclude.end());
    std::vector<std::pair<ItemId, double>> scored;
    scored.reserve(model.size());
    for (std::size_t r = 0; r < model.size(); ++r) {
        const ItemId item = model.item_at(r);
        if (!skip.contains(item)) scored.emplace_back(item, cosine(query, model.input(r)));
    }
    return top_n_ids(std::move(scored), n);
}

}  // namespace ciprec::deepcip

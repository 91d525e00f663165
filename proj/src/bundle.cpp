#include "ciprec/bundle.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "ciprec/persist.hpp"

namespace ciprec {

namespace {

using namespace recommenders;

template <typename T>
const T& as(const Base& rec) {
    const auto* p = dynamic_cast<const T*>(&rec);
    if (!p) throw Error("bundle: recommender does not match the configured model kind");
    return *p;
}

}  // namespace

std::unique_ptr<Base> train_recommender(const Config& config, std::span<const Event> events) {
    config.validate();
    switch (config.model) {
        case ModelKind::cip_u:
            return std::make_unique<CipU>(train_cip_u(events, config.delta_h, config.k_user), events);
        case ModelKind::cip_i:
            return std::make_unique<CipI>(train_cip_i(events, config.delta, config.k_item), events);
        case ModelKind::deepcip: {
            auto tc = config.deepcip;
            tc.seed = config.seed;
            tc.workers = thread_cap(tc.workers);
            return std::make_unique<DeepCip>(train_deepcip(events, config.delta, tc), config.delta, events);
        }
        case ModelKind::fism: {
            fism::FitConfig fit;
            fit.seed = config.seed;
            return std::make_unique<Fism>(
                train_fism(events, config.fism_rank, config.fism_alpha, config.seed, config.fism_fit ? &fit : nullptr),
                config.delta, events);
        }
        case ModelKind::popularity:
            return std::make_unique<Popularity>(events);
    }
    throw Error("unreachable model kind");
}

Bundle train_bundle(const Config& config, std::span<const Event> events) {
    Bundle b;
    b.config = config;
    b.events.assign(events.begin(), events.end());
    b.recommender = train_recommender(config, events);
    return b;
}

void update_bundle(Bundle& bundle, std::span<const Event> fresh) {
    for (const auto& e : fresh) {
        bundle.recommender->observe(e);
        bundle.events.push_back(e);
    }
    bundle.recommender->commit();
}

void save_bundle(std::ostream& out, const Bundle& b) {
    persist::write_header(out, "bundle");
    out << "config " << to_json(b.config) << '\n';
    out << "events " << b.events.size() << '\n';
    const auto& rec = *b.recommender;
    switch (b.config.model) {
        case ModelKind::cip_u: as<CipU>(rec).model().save(out); break;
        case ModelKind::cip_i: as<CipI>(rec).model().save(out); break;
        case ModelKind::deepcip: as<DeepCip>(rec).model().save(out); break;
        case ModelKind::fism: as<Fism>(rec).model().save(out); break;
        case ModelKind::popularity: persist::write_header(out, "popularity"); break;
    }
    // Like any log, the section is read back in (stable) timestamp order.
    write_canonical(out, EventLog(b.events));
}

Bundle load_bundle(std::istream& in) {
    persist::expect_header(in, "bundle");
    persist::expect_word(in, "config");
    std::string json;
    std::getline(in, json);
    Bundle b;
    b.config = config_from_json(json);
    persist::expect_word(in, "events");
    std::size_t expected_events = 0;
    if (!(in >> expected_events)) throw Error("bundle: bad event count");
    const Timestamp delta = b.config.delta;

    std::unique_ptr<Base> rec;
    auto build = [&](auto make) {
        // The events section follows the model; histories need it first.
        auto model = make();
        auto log = parse_events(in, LogFormat::canonical);
        b.events.assign(log.events().begin(), log.events().end());
        return model;
    };
    switch (b.config.model) {
        case ModelKind::cip_u: {
            auto m = build([&] { return cip_u::UserModel::load(in); });
            rec = std::make_unique<CipU>(std::move(m), b.events);
            break;
        }
        case ModelKind::cip_i: {
            auto m = build([&] { return cip_i::ItemModel::load(in); });
            rec = std::make_unique<CipI>(std::move(m), b.events);
            break;
        }
        case ModelKind::deepcip: {
            auto m = build([&] { return deepcip::EmbeddingModel::load(in); });
            rec = std::make_unique<DeepCip>(std::move(m), delta, b.events);
            break;
        }
        case ModelKind::fism: {
            auto m = build([&] { return fism::FismModel::load(in); });
            rec = std::make_unique<Fism>(std::move(m), delta, b.events);
            break;
        }
        case ModelKind::popularity: {
            build([&] {
                persist::expect_header(in, "popularity");
                return 0;
            });
            rec = std::make_unique<Popularity>(b.events);
            break;
        }
    }
    if (b.events.size() != expected_events)
        throw Error("bundle: expected " + std::to_string(expected_events) + " events, found " +
                    std::to_string(b.events.size()) + " (truncated file?)");
    b.recommender = std::move(rec);
    return b;
}

void save_bundle(const std::string& path, const Bundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    save_bundle(out, bundle);
    if (!out) throw Error("failed writing " + path);
}

Bundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file " + path);
    return load_bundle(in);
}

}  // namespace ciprec

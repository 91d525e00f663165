#include "ciprec/config.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

#include <json.hpp>

namespace ciprec {

ModelKind parse_model_kind(std::string_view name) {
    if (name == "cip-u") return ModelKind::cip_u;
    if (name == "cip-i") return ModelKind::cip_i;
    if (name == "deepcip") return ModelKind::deepcip;
    if (name == "fism") return ModelKind::fism;
    if (name == "popularity") return ModelKind::popularity;
    throw Error("unknown model kind '" + std::string(name) + "' (expected cip-u, cip-i, deepcip, fism or popularity)");
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::cip_u: return "cip-u";
        case ModelKind::cip_i: return "cip-i";
        case ModelKind::deepcip: return "deepcip";
        case ModelKind::fism: return "fism";
        case ModelKind::popularity: return "popularity";
    }
    return "?";
}

std::string Config::input_path() const { return input.empty() ? "data/" + dataset + "/u.data" : input; }

void Config::validate() const {
    auto positive = [](auto value, const char* name) {
        if (!(value > 0)) throw Error(std::string(name) + " must be positive");
    };
    positive(delta_h, "delta_h");
    positive(delta, "delta");
    positive(k_user, "k_user");
    positive(k_item, "k_item");
    positive(top_n, "top_n");
    positive(batch, "batch");
    positive(graph_m, "graph_m");
    positive(fism_rank, "fism_rank");
    positive(deepcip.epochs, "epochs");
    if (!(fism_alpha >= 0.0 && fism_alpha <= 1.0)) throw Error("fism_alpha must lie in [0, 1]");
    deepcip.validate();
}

Config default_config(std::string_view dataset) {
    Config c;
    c.dataset = std::string(dataset);
    if (dataset == "ml-100k") {
        c.n_train = 75000;
        c.n_valid = 5000;
        c.n_test = 20000;
    } else if (dataset == "ml-1m") {
        c.delta_h = 30;
        c.n_train = 970209;
        c.n_valid = 10000;
        c.n_test = 20000;
    } else if (dataset == "ciao") {
        c.delta = 100 * 60;
        c.graph_m = 2;
        c.format = LogFormat::csv;
        c.n_train = 19396;
        c.n_valid = 1000;
        c.n_test = 2000;
    } else if (dataset != "custom") {
        throw Error("unknown dataset '" + std::string(dataset) + "' (expected ml-100k, ml-1m, ciao or custom)");
    }
    if (dataset == "ml-1m") c.format = LogFormat::ml_dcolon;
    c.deepcip.window = 5;
    c.deepcip.seed = c.seed;
    return c;
}

std::size_t thread_cap(std::size_t requested) {
    const char* env = std::getenv("CIPREC_THREADS");
    if (!env) return requested;
    std::size_t cap = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), cap);
    if (ec != std::errc{} || cap == 0) return requested;
    return std::min(requested, cap);
}

std::string to_json(const Config& c) {
    nlohmann::json j{
        {"dataset", c.dataset},
        {"input", c.input},
        {"format", std::string(to_string(c.format))},
        {"model", std::string(to_string(c.model))},
        {"delta_h", c.delta_h},
        {"delta", c.delta},
        {"k_user", c.k_user},
        {"k_item", c.k_item},
        {"top_n", c.top_n},
        {"batch", c.batch},
        {"graph_m", c.graph_m},
        {"n_train", c.n_train},
        {"n_valid", c.n_valid},
        {"n_test", c.n_test},
        {"window", c.deepcip.window},
        {"negatives", c.deepcip.negatives},
        {"dim", c.deepcip.dim},
        {"epochs", c.deepcip.epochs},
        {"workers", c.deepcip.workers},
        {"min_count", c.deepcip.min_count},
        {"learning_rate", c.deepcip.learning_rate},
        {"fism_rank", c.fism_rank},
        {"fism_alpha", c.fism_alpha},
        {"fism_fit", c.fism_fit},
        {"seed", c.seed},
        {"replay", std::string(to_string(c.replay))},
    };
    return j.dump();
}

Config config_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    Config c;
    try {
        c.dataset = j.at("dataset").get<std::string>();
        c.input = j.at("input").get<std::string>();
        c.format = parse_log_format(j.at("format").get<std::string>());
        c.model = parse_model_kind(j.at("model").get<std::string>());
        c.delta_h = j.at("delta_h");
        c.delta = j.at("delta");
        c.k_user = j.at("k_user");
        c.k_item = j.at("k_item");
        c.top_n = j.at("top_n");
        c.batch = j.at("batch");
        c.graph_m = j.at("graph_m");
        c.n_train = j.at("n_train");
        c.n_valid = j.at("n_valid");
        c.n_test = j.at("n_test");
        c.deepcip.window = j.at("window");
        c.deepcip.negatives = j.at("negatives");
        c.deepcip.dim = j.at("dim");
        c.deepcip.epochs = j.at("epochs");
        c.deepcip.workers = j.at("workers");
        c.deepcip.min_count = j.at("min_count");
        c.deepcip.learning_rate = j.at("learning_rate");
        c.fism_rank = j.at("fism_rank");
        c.fism_alpha = j.at("fism_alpha");
        c.fism_fit = j.at("fism_fit");
        c.seed = j.at("seed");
        c.deepcip.seed = c.seed;
        c.replay = analysis::parse_replay(j.at("replay").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    return c;
}

}  // namespace ciprec

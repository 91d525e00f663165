// Command-line front end: ingest, train, update, recommend, evaluate, sweep,
// graph and dump-model.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ciprec/bundle.hpp"
#include "ciprec/config.hpp"
#include "ciprec/evaluation.hpp"
#include "ciprec/graph.hpp"
#include "ciprec/persist.hpp"

using namespace ciprec;

namespace {

// Flag values; unset ones fall back to the config file, then the dataset.
struct Overrides {
    std::optional<std::string> dataset, input, format, model, replay;
    std::optional<std::size_t> delta_h, k, k_user, k_item, window, top_n, batch, n_train, n_valid, n_test;
    std::optional<std::size_t> dim, epochs, negatives, workers, min_count, rank;
    std::optional<Timestamp> delta;
    std::optional<std::uint64_t> graph_m, seed;
    std::optional<double> lr, alpha;
    bool fism_fit = false;

    Config resolve() const {
        Config c = default_config(dataset.value_or("custom"));
        if (input) c.input = *input;
        if (format) c.format = parse_log_format(*format);
        if (model) c.model = parse_model_kind(*model);
        if (replay) c.replay = analysis::parse_replay(*replay);
        if (delta_h) c.delta_h = *delta_h;
        if (delta) c.delta = *delta;
        if (k_user) c.k_user = *k_user;
        if (k_item) c.k_item = *k_item;
        if (k) (c.model == ModelKind::cip_i ? c.k_item : c.k_user) = *k;
        if (window) c.deepcip.window = *window;
        if (top_n) c.top_n = *top_n;
        if (batch) c.batch = *batch;
        if (graph_m) c.graph_m = *graph_m;
        if (n_train) c.n_train = *n_train;
        if (n_valid) c.n_valid = *n_valid;
        if (n_test) c.n_test = *n_test;
        if (dim) c.deepcip.dim = *dim;
        if (epochs) c.deepcip.epochs = *epochs;
        if (negatives) c.deepcip.negatives = *negatives;
        if (workers) c.deepcip.workers = *workers;
        if (min_count) c.deepcip.min_count = *min_count;
        if (lr) c.deepcip.learning_rate = *lr;
        if (rank) c.fism_rank = *rank;
        if (alpha) c.fism_alpha = *alpha;
        if (fism_fit) c.fism_fit = true;
        if (seed) c.seed = *seed;
        c.deepcip.seed = c.seed;
        c.deepcip.workers = thread_cap(c.deepcip.workers);
        c.validate();
        return c;
    }
};

void add_config_options(CLI::App& app, Overrides& o) {
    app.add_option("--dataset", o.dataset, "ml-100k, ml-1m, ciao or custom (selects defaults)");
    app.add_option("--input", o.input, "Event log path (default data/<dataset>/u.data)");
    app.add_option("--format", o.format, "ml-tab, ml-dcolon, csv or canonical");
    app.add_option("--model", o.model, "cip-u, cip-i, deepcip, fism or popularity");
    app.add_option("--dh", o.delta_h, "CIP-U hammock threshold");
    app.add_option("--delta", o.delta, "Seconds separating δ-distant CIPs");
    app.add_option("--k", o.k, "Model size K of the selected model");
    app.add_option("--k-user", o.k_user, "CIP-U neighbors");
    app.add_option("--k-item", o.k_item, "CIP-I neighbors");
    app.add_option("--window,-W", o.window, "DEEPCIP window");
    app.add_option("--top,-N", o.top_n, "Recommendation list length");
    app.add_option("--batch,-Q", o.batch, "Events per incremental update");
    app.add_option("--m", o.graph_m, "Item-graph edge threshold");
    app.add_option("--train", o.n_train, "Train split size (0: whole log)");
    app.add_option("--valid", o.n_valid, "Validation split size");
    app.add_option("--test", o.n_test, "Test split size");
    app.add_option("--dim", o.dim, "DEEPCIP embedding dimension");
    app.add_option("--epochs", o.epochs, "DEEPCIP epochs");
    app.add_option("--negatives", o.negatives, "DEEPCIP negative samples");
    app.add_option("--workers", o.workers, "DEEPCIP training threads (capped by CIPREC_THREADS)");
    app.add_option("--min-count", o.min_count, "DEEPCIP vocabulary floor for new items");
    app.add_option("--lr", o.lr, "DEEPCIP initial learning rate");
    app.add_option("--rank", o.rank, "FISM factor rank");
    app.add_option("--alpha", o.alpha, "FISM normalization exponent");
    app.add_flag("--fism-fit", o.fism_fit, "Run the experimental FISM fitter");
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--replay", o.replay, "frozen, history or incremental");
    app.set_config("--config", "", "INI/TOML file with any of the options above");
}

struct Splits {
    std::vector<Event> train, valid, test;
};

Splits split_log(const Config& c) {
    const auto log = load_events(c.input_path(), c.format);
    Splits s;
    if (c.n_train == 0) {
        s.train.assign(log.events().begin(), log.events().end());
        return s;
    }
    const auto split = temporal_split(log, c.n_train, c.n_valid, c.n_test);
    auto copy = [](const EventLog& l) { return std::vector<Event>(l.events().begin(), l.events().end()); };
    s.train = copy(split.train);
    s.valid = copy(split.valid);
    s.test = copy(split.test);
    return s;
}

analysis::EvalOptions eval_options(const Config& c) { return {c.top_n, c.replay, c.batch}; }

std::string params_of(const Config& c) {
    analysis::ParamPoint p;
    switch (c.model) {
        case ModelKind::cip_u:
            p = {{"dh", double(c.delta_h)}, {"k", double(c.k_user)}};
            break;
        case ModelKind::cip_i:
            p = {{"delta", double(c.delta)}, {"k", double(c.k_item)}};
            break;
        case ModelKind::deepcip:
            p = {{"delta", double(c.delta)}, {"window", double(c.deepcip.window)}};
            break;
        case ModelKind::fism:
            p = {{"rank", double(c.fism_rank)}, {"alpha", c.fism_alpha}};
            break;
        case ModelKind::popularity:
            break;
    }
    return analysis::format_params(p);
}

void apply_param(Config& c, const std::string& name, double v) {
    const auto n = static_cast<std::size_t>(v);
    if (name == "dh") c.delta_h = n;
    else if (name == "delta") c.delta = static_cast<Timestamp>(v);
    else if (name == "k") (c.model == ModelKind::cip_i ? c.k_item : c.k_user) = n;
    else if (name == "k_user") c.k_user = n;
    else if (name == "k_item") c.k_item = n;
    else if (name == "window") c.deepcip.window = n;
    else if (name == "dim") c.deepcip.dim = n;
    else if (name == "epochs") c.deepcip.epochs = n;
    else if (name == "rank") c.fism_rank = n;
    else if (name == "alpha") c.fism_alpha = v;
    else throw Error("unknown sweep parameter '" + name + "'");
}

// "name=v1,v2,..."
std::pair<std::string, std::vector<double>> parse_grid_entry(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("grid entry '" + text + "' is not name=v1,v2,...");
    std::vector<double> values;
    std::stringstream rest(text.substr(eq + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error("grid value '" + item + "' is not a number");
        }
    }
    return {text.substr(0, eq), values};
}

std::ostream& output_or_stdout(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw Error("cannot write " + path);
    return file;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CIP-based implicit-feedback recommenders"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    add_config_options(app, o);

    std::string output, model_file, events_file, events_format = "csv", out_format = "csv", graphml, partition;
    std::vector<std::string> grid;
    std::optional<UserId> user;
    std::size_t hop_back = 2, hop_fwd = 3;

    auto* ingest = app.add_subcommand("ingest", "Parse a log and write it as CSV or canonical events");
    ingest->add_option("--output,-o", output, "Output path")->required();
    ingest->add_option("--out-format", out_format, "csv or canonical")->check(CLI::IsMember({"csv", "canonical"}));

    auto* train = app.add_subcommand("train", "Train a model on the train split and save it");
    train->add_option("--output,-o", output, "Model file")->required();

    auto* update = app.add_subcommand("update", "Apply one incremental batch of events to a saved model");
    update->add_option("--model-file", model_file, "Model file")->required();
    update->add_option("--events", events_file, "Events to apply")->required();
    update->add_option("--events-format", events_format, "Format of the events file");
    update->add_option("--output,-o", output, "Where to save (default: overwrite the model file)");

    auto* recommend = app.add_subcommand("recommend", "Print the top-N items for a user");
    recommend->add_option("--model-file", model_file, "Model file")->required();
    recommend->add_option("--user", user, "User id")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Precision@N on the test split, as CSV");
    evaluate->add_option("--model-file", model_file, "Evaluate this saved model instead of training one");
    evaluate->add_option("--output,-o", output, "CSV path (default stdout)");

    auto* sweep = app.add_subcommand("sweep", "Precision@N on the validation split over a parameter grid");
    sweep->add_option("--grid", grid, "name=v1,v2,... (repeatable)")->required();
    sweep->add_option("--output,-o", output, "CSV path (default stdout)");

    auto* graph = app.add_subcommand("graph", "Build and export the item co-consumption graph");
    graph->add_option("--output,-o", output, "Edge list path")->required();
    graph->add_option("--graphml", graphml, "Also write GraphML here");
    graph->add_option("--partition", partition, "node,community CSV; prints the modularity");
    graph->add_option("--back", hop_back, "Hops looked back");
    graph->add_option("--fwd", hop_fwd, "Hops looked forward");

    auto* dump = app.add_subcommand("dump-model", "Describe a saved model, or re-save it with --output");
    dump->add_option("--model-file", model_file, "Model file")->required();
    dump->add_option("--output,-o", output, "Re-save the model here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*ingest) {
            const auto c = o.resolve();
            const auto log = load_events(c.input_path(), c.format);
            std::ofstream out(output);
            if (!out) throw Error("cannot write " + output);
            if (out_format == "csv") write_csv(out, log);
            else write_canonical(out, log);
            std::cout << "events " << log.size() << " users " << log.user_count() << " items " << log.item_count()
                      << '\n';
        } else if (*train) {
            const auto c = o.resolve();
            const auto s = split_log(c);
            save_bundle(output, train_bundle(c, s.train));
            std::cout << "trained " << to_string(c.model) << " on " << s.train.size() << " events -> " << output
                      << '\n';
        } else if (*update) {
            auto b = load_bundle(model_file);
            const auto log = load_events(events_file, parse_log_format(events_format));
            update_bundle(b, log.events());
            save_bundle(output.empty() ? model_file : output, b);
            std::cout << "applied " << log.size() << " events\n";
        } else if (*recommend) {
            auto b = load_bundle(model_file);
            const auto n = o.top_n.value_or(b.config.top_n);
            for (ItemId item : b.recommender->recommend(*user, n)) std::cout << item << '\n';
        } else if (*evaluate) {
            std::optional<Bundle> saved;
            if (!model_file.empty()) saved = load_bundle(model_file);
            const auto c = saved ? saved->config : o.resolve();
            const auto s = split_log(c);
            if (s.test.empty()) throw Error("evaluate needs a test split (--train/--valid/--test)");
            std::unique_ptr<analysis::Recommender> rec;
            if (saved) rec = std::move(saved->recommender);
            else rec = train_recommender(c, s.train);
            auto opts = eval_options(c);
            analysis::replay_history(*rec, s.valid, opts);
            const auto report = analysis::precision_at_n(*rec, s.test, opts, params_of(c));
            std::ofstream file;
            auto& out = output_or_stdout(output, file);
            analysis::write_reports_csv(out, std::span(&report, 1));
        } else if (*sweep) {
            const auto base = o.resolve();
            const auto s = split_log(base);
            if (s.valid.empty()) throw Error("sweep needs a validation split (--train/--valid/--test)");
            analysis::ParamGrid g;
            for (const auto& entry : grid) g.push_back(parse_grid_entry(entry));
            auto factory = [&](const analysis::ParamPoint& point) -> std::unique_ptr<analysis::Recommender> {
                Config c = base;
                for (const auto& [name, value] : point) apply_param(c, name, value);
                return train_recommender(c, s.train);
            };
            const auto reports = analysis::sweep(g, factory, s.valid, eval_options(base));
            std::ofstream file;
            auto& out = output_or_stdout(output, file);
            analysis::write_reports_csv(out, reports);
        } else if (*graph) {
            const auto c = o.resolve();
            const auto profiles = build_profiles(load_events(c.input_path(), c.format));
            const auto g = analysis::build_item_graph(profiles, c.graph_m, hop_back, hop_fwd);
            std::ofstream edges(output);
            if (!edges) throw Error("cannot write " + output);
            analysis::write_edge_list(edges, g);
            if (!graphml.empty()) {
                std::ofstream xml(graphml);
                if (!xml) throw Error("cannot write " + graphml);
                analysis::write_graphml(xml, g);
            }
            std::cout << "nodes " << g.nodes.size() << " edges " << g.edges.size() << '\n';
            if (!partition.empty()) {
                std::ifstream in(partition);
                if (!in) throw Error("cannot open " + partition);
                std::cout << "modularity " << persist::format_double(analysis::modularity(g, analysis::read_partition(in)))
                          << '\n';
            }
        } else if (*dump) {
            auto b = load_bundle(model_file);
            if (!output.empty()) {
                save_bundle(output, b);
            } else {
                std::cout << "model " << to_string(b.config.model) << '\n'
                          << "config " << to_json(b.config) << '\n'
                          << "events " << b.events.size() << '\n'
                          << "users " << b.recommender->history().users().size() << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

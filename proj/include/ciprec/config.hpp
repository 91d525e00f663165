#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "ciprec/deepcip.hpp"
#include "ciprec/evaluation.hpp"
#include "ciprec/ingest.hpp"

namespace ciprec {

enum class ModelKind { cip_u, cip_i, deepcip, fism, popularity };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

// Every knob of a run in one place.
struct Config {
    std::string dataset = "custom";
    std::string input;  // empty: data/<dataset>/u.data
    LogFormat format = LogFormat::ml_tab;
    ModelKind model = ModelKind::cip_u;

    std::size_t delta_h = 10;   // CIP-U hammock threshold
    Timestamp delta = 60;       // seconds between δ-distant CIPs
    std::size_t k_user = 50;    // CIP-U neighbors
    std::size_t k_item = 30;    // CIP-I neighbors
    std::size_t top_n = 10;
    std::size_t batch = 1000;   // events per incremental update
    std::uint64_t graph_m = 30; // item-graph edge threshold

    // Split sizes; zero train means the whole log.
    std::size_t n_train = 0;
    std::size_t n_valid = 0;
    std::size_t n_test = 0;

    deepcip::TrainConfig deepcip;  // deepcip.window is W
    std::size_t fism_rank = 16;
    double fism_alpha = 0.5;
    bool fism_fit = false;  // run the experimental fitter after random init

    std::uint64_t seed = 1;
    analysis::Replay replay = analysis::Replay::incremental;

    // K of the selected model kind.
    std::size_t model_k() const { return model == ModelKind::cip_i ? k_item : k_user; }
    std::string input_path() const;
    void validate() const;

    friend bool operator==(const Config&, const Config&) = default;
};

// Tuned values for ml-100k, ml-1m and ciao; "custom" starts from the
// ml-100k hyper-parameters with no split. Other names throw.
Config default_config(std::string_view dataset);

// requested, capped by CIPREC_THREADS when that is set to a positive integer.
std::size_t thread_cap(std::size_t requested);

std::string to_json(const Config& config);
Config config_from_json(std::string_view text);

}  // namespace ciprec

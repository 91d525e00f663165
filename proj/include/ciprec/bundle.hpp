#pragma once

// A saved recommender: the run's configuration, the model section and the
// events the model has seen, from which user histories are rebuilt.
//
//   CIPREC1 bundle
//   config <json>
//   events <count>
//   <model section>          (CIPREC1 cip-u | cip-i | deepcip | fism | popularity)
//   CIPREC1 events           (canonical event log, to end of file)

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ciprec/config.hpp"
#include "ciprec/recommenders.hpp"

namespace ciprec {

struct Bundle {
    Config config;
    std::vector<Event> events;
    std::unique_ptr<recommenders::Base> recommender;
};

// Trains config.model on the events (time-ordered).
Bundle train_bundle(const Config& config, std::span<const Event> events);
std::unique_ptr<recommenders::Base> train_recommender(const Config& config, std::span<const Event> events);

// Observes the events and commits them as one incremental update.
void update_bundle(Bundle& bundle, std::span<const Event> fresh);

void save_bundle(std::ostream& out, const Bundle& bundle);
Bundle load_bundle(std::istream& in);
void save_bundle(const std::string& path, const Bundle& bundle);
Bundle load_bundle(const std::string& path);

}  // namespace ciprec

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ciprec/ingest.hpp"
#include "ciprec/types.hpp"

namespace ciprec::analysis {

// What a model may learn while the test events stream past.
enum class Replay {
    frozen,       // nothing: every event is scored against the trained state
    history,      // users' profiles grow, the similarity model stays fixed
    incremental,  // profiles grow and the model is updated every batch
};

Replay parse_replay(std::string_view name);
std::string_view to_string(Replay replay);

class Recommender {
public:
    virtual ~Recommender() = default;
    virtual std::string name() const = 0;
    // Up to n items u has not consumed. Unknown users get popular items.
    virtual std::vector<ItemId> recommend(UserId u, std::size_t n) = 0;
    // Records a consumption in the user's history.
    virtual void observe(const Event& event) = 0;
    // Folds everything observed since the last commit into the model.
    virtual void commit() {}
};

struct EvalOptions {
    std::size_t n = 10;
    Replay replay = Replay::incremental;
    std::size_t batch = 1000;  // events per commit under incremental replay
};

struct EvalReport {
    std::string model;
    std::size_t n = 0;
    std::string params;  // "name=value" pairs joined by ';'
    double precision = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t events = 0;
    double runtime_s = 0.0;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Replays events into the recommender without scoring them (e.g. the
// validation split ahead of the test split).
void replay_history(Recommender& rec, std::span<const Event> events, const EvalOptions& options);

// For each event, in order: score a hit if the item is in u's top n, then
// let the recommender see the event as the replay mode allows.
// precision = hits / (events * n). Throws on an empty test set.
EvalReport precision_at_n(Recommender& rec, std::span<const Event> test, const EvalOptions& options,
                          std::string params = {});

using ParamPoint = std::map<std::string, double>;
using ParamGrid = std::vector<std::pair<std::string, std::vector<double>>>;

// Cartesian product, the last parameter varying fastest.
std::vector<ParamPoint> expand_grid(const ParamGrid& grid);
std::string format_params(const ParamPoint& point);

// Builds a recommender per grid point (trained by the factory) and scores
// it on the given events. Reports come in expand_grid order.
std::vector<EvalReport> sweep(const ParamGrid& grid,
                              const std::function<std::unique_ptr<Recommender>(const ParamPoint&)>& factory,
                              std::span<const Event> events, const EvalOptions& options);

void write_report_header(std::ostream& out);
void write_report(std::ostream& out, const EvalReport& report);
void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports);

}  // namespace ciprec::analysis

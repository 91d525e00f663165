#include "ciprec/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

#include "ciprec/persist.hpp"

namespace ciprec::analysis {

Replay parse_replay(std::string_view name) {
    if (name == "frozen") return Replay::frozen;
    if (name == "history") return Replay::history;
    if (name == "incremental") return Replay::incremental;
    throw Error("unknown replay mode '" + std::string(name) + "' (expected frozen, history or incremental)");
}

std::string_view to_string(Replay replay) {
    switch (replay) {
        case Replay::frozen: return "frozen";
        case Replay::history: return "history";
        case Replay::incremental: return "incremental";
    }
    return "?";
}

namespace {

// Feeds one event through, committing at batch boundaries.
class Feeder {
public:
    Feeder(Recommender& rec, const EvalOptions& options) : rec_(rec), options_(options) {}

    void feed(const Event& e) {
        if (options_.replay == Replay::frozen) return;
        rec_.observe(e);
        if (options_.replay == Replay::incremental && ++pending_ >= std::max<std::size_t>(1, options_.batch)) flush();
    }

    void flush() {
        if (pending_ > 0) rec_.commit();
        pending_ = 0;
    }

private:
    Recommender& rec_;
    const EvalOptions& options_;
    std::size_t pending_ = 0;
};

}  // namespace

void replay_history(Recommender& rec, std::span<const Event> events, const EvalOptions& options) {
    Feeder feeder(rec, options);
    for (const auto& e : events) feeder.feed(e);
    feeder.flush();
}

EvalReport precision_at_n(Recommender& rec, std::span<const Event> test, const EvalOptions& options,
                          std::string params) {
    if (test.empty()) throw Error("precision_at_n: empty test set");
    if (options.n == 0) throw Error("precision_at_n: N must be positive");
    const auto start = std::chrono::steady_clock::now();
    EvalReport report;
    report.model = rec.name();
    report.n = options.n;
    report.params = std::move(params);
    Feeder feeder(rec, options);
    for (const auto& e : test) {
        const auto list = rec.recommend(e.user, options.n);
        if (std::find(list.begin(), list.end(), e.item) != list.end()) ++report.hits;
        ++report.events;
        feeder.feed(e);
    }
    feeder.flush();
    report.precision = static_cast<double>(report.hits) / (static_cast<double>(report.events) * double(options.n));
    report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<ParamPoint> expand_grid(const ParamGrid& grid) {
    std::vector<ParamPoint> points{{}};
    for (const auto& [name, values] : grid) {
        if (values.empty()) throw Error("sweep: no values for parameter " + name);
        std::vector<ParamPoint> next;
        for (const auto& p : points) {
            for (double v : values) {
                auto q = p;
                q[name] = v;
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

std::string format_params(const ParamPoint& point) {
    std::string out;
    for (const auto& [name, value] : point) {
        if (!out.empty()) out += ';';
        out += name + '=' + persist::format_double(value);
    }
    return out;
}

std::vector<EvalReport> sweep(const ParamGrid& grid,
                              const std::function<std::unique_ptr<Recommender>(const ParamPoint&)>& factory,
                              std::span<const Event> events, const EvalOptions& options) {
    if (grid.empty()) throw Error("sweep: empty grid");
    std::vector<EvalReport> reports;
    for (const auto& point : expand_grid(grid)) {
        auto rec = factory(point);
        reports.push_back(precision_at_n(*rec, events, options, format_params(point)));
    }
    return reports;
}

void write_report_header(std::ostream& out) { out << "model,N,params,precision,hits,events,runtime_s\n"; }

void write_report(std::ostream& out, const EvalReport& r) {
    out << r.model << ',' << r.n << ',' << r.params << ',' << persist::format_double(r.precision) << ',' << r.hits
        << ',' << r.events << ',' << persist::format_double(r.runtime_s) << '\n';
}

void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports) {
    write_report_header(out);
    for (const auto& r : reports) write_report(out, r);
}

}  // namespace ciprec::analysis

#include "ciprec/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace ciprec {

namespace {

constexpr std::string_view kCanonicalHeader = "CIPREC1 events";
constexpr std::string_view kCsvHeader = "user,item,rating,timestamp";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + sep.size();
    }
}

std::int64_t parse_int(std::string_view field, std::size_t line, const char* what) {
    field = trim(field);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
        throw ParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
    return value;
}

std::optional<double> parse_rating(std::string_view field, std::size_t line) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    double value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError(line, "bad rating '" + std::string(field) + "'");
    return value;
}

Event parse_fields(const std::vector<std::string_view>& f, std::size_t line, bool with_rating) {
    const std::size_t expected = with_rating ? 4 : 3;
    if (f.size() != expected)
        throw ParseError(line, "expected " + std::to_string(expected) + " fields, got " +
                                   std::to_string(f.size()));
    Event e;
    e.user = parse_int(f[0], line, "user id");
    e.item = parse_int(f[1], line, "item id");
    if (with_rating) {
        e.rating = parse_rating(f[2], line);
        e.timestamp = parse_int(f[3], line, "timestamp");
    } else {
        e.timestamp = parse_int(f[2], line, "timestamp");
    }
    if (e.timestamp < 0) throw ParseError(line, "negative timestamp");
    return e;
}

}  // namespace

LogFormat parse_log_format(std::string_view name) {
    if (name == "ml-tab") return LogFormat::ml_tab;
    if (name == "ml-dcolon") return LogFormat::ml_dcolon;
    if (name == "csv") return LogFormat::csv;
    if (name == "canonical") return LogFormat::canonical;
    throw Error("unknown log format '" + std::string(name) + "'");
}

std::string_view to_string(LogFormat format) {
    switch (format) {
        case LogFormat::ml_tab: return "ml-tab";
        case LogFormat::ml_dcolon: return "ml-dcolon";
        case LogFormat::csv: return "csv";
        case LogFormat::canonical: return "canonical";
    }
    return "?";
}

IdDictionary::IdDictionary(std::vector<std::int64_t> raw_ids) : raw_(std::move(raw_ids)) {
    std::sort(raw_.begin(), raw_.end());
    raw_.erase(std::unique(raw_.begin(), raw_.end()), raw_.end());
    index_.reserve(raw_.size());
    for (std::uint32_t i = 0; i < raw_.size(); ++i) index_.emplace(raw_[i], i);
}

std::optional<std::uint32_t> IdDictionary::index_of(std::int64_t raw) const {
    auto it = index_.find(raw);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

EventLog::EventLog(std::vector<Event> events) : events_(std::move(events)) {
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    std::vector<std::int64_t> users, items;
    users.reserve(events_.size());
    items.reserve(events_.size());
    for (const auto& e : events_) {
        users.push_back(e.user);
        items.push_back(e.item);
    }
    users_ = IdDictionary(std::move(users));
    items_ = IdDictionary(std::move(items));
}

EventLog EventLog::slice(std::size_t first, std::size_t count) const {
    if (first > events_.size() || count > events_.size() - first) throw Error("slice out of range");
    return EventLog(std::vector<Event>(events_.begin() + static_cast<std::ptrdiff_t>(first),
                                       events_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

EventLog parse_events(std::istream& source, LogFormat format) {
    std::vector<Event> events;
    std::string raw;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(source, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty()) continue;
        switch (format) {
            case LogFormat::ml_tab:
                events.push_back(parse_fields(split(line, "\t"), line_no, true));
                break;
            case LogFormat::ml_dcolon:
                events.push_back(parse_fields(split(line, "::"), line_no, true));
                break;
            case LogFormat::csv:
                if (!header_seen) {
                    if (line != kCsvHeader) throw ParseError(line_no, "expected header '" + std::string(kCsvHeader) + "'");
                    header_seen = true;
                    break;
                }
                events.push_back(parse_fields(split(line, ","), line_no, true));
                break;
            case LogFormat::canonical:
                if (!header_seen) {
                    if (line != kCanonicalHeader)
                        throw ParseError(line_no, "expected header '" + std::string(kCanonicalHeader) + "'");
                    header_seen = true;
                    break;
                }
                events.push_back(parse_fields(split(line, ","), line_no, false));
                break;
        }
    }
    if (events.empty()) throw Error("empty event log");
    return EventLog(std::move(events));
}

EventLog load_events(const std::string& path, LogFormat format) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return parse_events(in, format);
}

void write_csv(std::ostream& out, const EventLog& log) {
    out << kCsvHeader << '\n';
    for (const auto& e : log.events()) {
        out << e.user << ',' << e.item << ',';
        if (e.rating) {
            char buf[32];
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *e.rating);
            out.write(buf, ptr - buf);
        }
        out << ',' << e.timestamp << '\n';
    }
}

void write_canonical(std::ostream& out, const EventLog& log) {
    out << kCanonicalHeader << '\n';
    for (const auto& e : log.events()) out << e.user << ',' << e.item << ',' << e.timestamp << '\n';
}

std::vector<ItemId> UserProfile::item_ids() const {
    std::vector<ItemId> ids;
    ids.reserve(items.size());
    for (const auto& c : items) ids.push_back(c.item);
    return ids;
}

bool UserProfile::contains(ItemId item) const {
    return std::any_of(items.begin(), items.end(), [&](const Consumption& c) { return c.item == item; });
}

const UserProfile* ProfileStore::find(UserId user) const {
    auto it = profiles_.find(user);
    return it == profiles_.end() ? nullptr : &it->second;
}

bool ProfileStore::append(UserId user, Consumption c) {
    auto& profile = profiles_[user];
    profile.user = user;
    if (profile.contains(c.item)) return false;
    profile.items.push_back(c);
    return true;
}

ProfileStore build_profiles(const EventLog& log, std::optional<Timestamp> delta) {
    if (log.empty()) throw Error("cannot build profiles from an empty log");
    ProfileStore::Map profiles;
    std::unordered_map<UserId, std::set<ItemId>> seen;
    for (const auto& e : log.events()) {
        if (!seen[e.user].insert(e.item).second) continue;
        auto& profile = profiles[e.user];
        profile.user = e.user;
        profile.items.push_back({e.item, e.timestamp});
    }
    if (delta) {
        for (auto& [user, profile] : profiles) profile.cip_boundaries = cip_boundaries(profile.items, *delta);
    }
    return ProfileStore(std::move(profiles));
}

std::vector<std::size_t> cip_boundaries(std::span<const Consumption> items, Timestamp delta) {
    if (delta <= 0) throw Error("delta must be positive");
    std::vector<std::size_t> starts;
    for (std::size_t k = 0; k < items.size(); ++k) {
        if (k == 0 || items[k].timestamp > items[k - 1].timestamp + delta) starts.push_back(k);
    }
    return starts;
}

std::vector<Cip> partition_cips(const UserProfile& profile, Timestamp delta) {
    const auto starts = cip_boundaries(profile.items, delta);
    std::vector<Cip> cips;
    cips.reserve(starts.size());
    for (std::size_t s = 0; s < starts.size(); ++s) {
        const std::size_t end = s + 1 < starts.size() ? starts[s + 1] : profile.items.size();
        Cip cip;
        cip.start_ts = profile.items[starts[s]].timestamp;
        cip.end_ts = profile.items[end - 1].timestamp;
        for (std::size_t k = starts[s]; k < end; ++k) cip.items.push_back(profile.items[k].item);
        cips.push_back(std::move(cip));
    }
    return cips;
}

std::vector<Cip> collect_cips(const ProfileStore& profiles, Timestamp delta) {
    std::vector<Cip> corpus;
    for (const auto& [user, profile] : profiles) {
        auto cips = partition_cips(profile, delta);
        corpus.insert(corpus.end(), std::make_move_iterator(cips.begin()), std::make_move_iterator(cips.end()));
    }
    return corpus;
}

TemporalSplit temporal_split(const EventLog& log, std::size_t n_train, std::size_t n_valid,
                             std::size_t n_test) {
    if (n_train > log.size() || n_valid > log.size() - n_train ||
        n_test > log.size() - n_train - n_valid)
        throw Error("split sizes " + std::to_string(n_train) + "+" + std::to_string(n_valid) + "+" +
                    std::to_string(n_test) + " exceed log size " + std::to_string(log.size()));
    return {log.slice(0, n_train), log.slice(n_train, n_valid), log.slice(n_train + n_valid, n_test)};
}

}  // namespace ciprec

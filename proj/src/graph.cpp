#include "ciprec/graph.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>

namespace ciprec::analysis {

namespace {

std::pair<ItemId, ItemId> key(ItemId i, ItemId j) { return i < j ? std::pair{i, j} : std::pair{j, i}; }

template <typename T>
T parse_field(std::string_view text, std::size_t line) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError(line, "bad number '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

std::uint64_t ItemGraph::weight(ItemId i, ItemId j) const {
    auto it = edges.find(key(i, j));
    return it == edges.end() ? 0 : it->second;
}

std::uint64_t ItemGraph::total_weight() const {
    std::uint64_t total = 0;
    for (const auto& [e, w] : edges) total += w;
    return total;
}

ItemGraph build_item_graph(std::span<const std::vector<ItemId>> profiles, std::uint64_t threshold,
                           std::size_t hop_back, std::size_t hop_fwd) {
    ItemGraph graph;
    graph.hop_back = hop_back;
    graph.hop_fwd = hop_fwd;
    graph.threshold = threshold;

    std::map<std::pair<ItemId, ItemId>, std::uint64_t> counts;
    std::set<std::pair<ItemId, ItemId>> mine;
    for (const auto& p : profiles) {
        mine.clear();
        for (std::size_t t = 0; t < p.size(); ++t) {
            const std::size_t lo = t >= hop_back ? t - hop_back : 0;
            const std::size_t hi = std::min(p.size() - 1, t + hop_fwd);
            for (std::size_t s = lo; s <= hi; ++s) {
                if (s != t && p[s] != p[t]) mine.insert(key(p[t], p[s]));
            }
        }
        for (const auto& e : mine) ++counts[e];
    }
    for (const auto& [e, w] : counts) {
        if (w < threshold) continue;
        graph.edges.emplace(e, w);
        graph.nodes.insert(e.first);
        graph.nodes.insert(e.second);
    }
    return graph;
}

ItemGraph build_item_graph(const ProfileStore& profiles, std::uint64_t threshold, std::size_t hop_back,
                           std::size_t hop_fwd) {
    std::vector<std::vector<ItemId>> sequences;
    for (const auto& [user, profile] : profiles) sequences.push_back(profile.item_ids());
    return build_item_graph(sequences, threshold, hop_back, hop_fwd);
}

double modularity(const ItemGraph& graph, const Partition& partition) {
    auto community_of = [&](ItemId node) {
        auto it = partition.find(node);
        if (it == partition.end()) throw Error("partition does not cover node " + std::to_string(node));
        return it->second;
    };
    const double total = static_cast<double>(graph.total_weight());
    if (total == 0.0) throw Error("modularity is undefined for a graph without edges");

    std::unordered_map<Community, double> inside, degree;
    for (const auto& [e, w] : graph.edges) {
        const auto ci = community_of(e.first), cj = community_of(e.second);
        if (ci == cj) inside[ci] += static_cast<double>(w);
        degree[ci] += static_cast<double>(w);
        degree[cj] += static_cast<double>(w);
    }
    std::vector<Community> communities;
    for (const auto& [c, d] : degree) communities.push_back(c);
    std::sort(communities.begin(), communities.end());
    double q = 0.0;
    for (auto c : communities) {
        const double share = degree[c] / (2.0 * total);
        q += inside[c] / total - share * share;
    }
    return q;
}

void write_edge_list(std::ostream& out, const ItemGraph& graph) {
    for (const auto& [e, w] : graph.edges) out << e.first << '\t' << e.second << '\t' << w << '\n';
}

void write_graphml(std::ostream& out, const ItemGraph& graph) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"long\"/>\n"
        << "  <graph id=\"items\" edgedefault=\"undirected\">\n";
    for (ItemId n : graph.nodes) out << "    <node id=\"" << n << "\"/>\n";
    for (const auto& [e, w] : graph.edges) {
        out << "    <edge source=\"" << e.first << "\" target=\"" << e.second << "\"><data key=\"weight\">" << w
            << "</data></edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
}

Partition read_partition(std::istream& in) {
    Partition partition;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (number == 1 && line == "node,community") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(number, "expected node,community");
        const auto node = parse_field<ItemId>(std::string_view(line).substr(0, comma), number);
        const auto community = parse_field<Community>(std::string_view(line).substr(comma + 1), number);
        if (!partition.emplace(node, community).second) throw ParseError(number, "node listed twice");
    }
    return partition;
}

}  // namespace ciprec::analysis

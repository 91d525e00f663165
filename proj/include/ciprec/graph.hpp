#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "ciprec/ingest.hpp"
#include "ciprec/types.hpp"

namespace ciprec::analysis {

using Community = std::int64_t;
using Partition = std::map<ItemId, Community>;

// Undirected item co-consumption graph. An edge's weight is the number of
// users with at least one transition between its two items.
struct ItemGraph {
    std::size_t hop_back = 2;
    std::size_t hop_fwd = 3;
    std::uint64_t threshold = 1;
    // Keyed (smaller id, larger id); every weight is >= threshold.
    std::map<std::pair<ItemId, ItemId>, std::uint64_t> edges;
    // Endpoints of the retained edges.
    std::set<ItemId> nodes;

    std::uint64_t weight(ItemId i, ItemId j) const;
    std::uint64_t total_weight() const;
};

// Items at positions t and t + k, -hop_back <= k <= hop_fwd, k != 0, form a
// transition. Edges seen for fewer than `threshold` users are dropped.
ItemGraph build_item_graph(std::span<const std::vector<ItemId>> profiles, std::uint64_t threshold,
                           std::size_t hop_back = 2, std::size_t hop_fwd = 3);
ItemGraph build_item_graph(const ProfileStore& profiles, std::uint64_t threshold, std::size_t hop_back = 2,
                           std::size_t hop_fwd = 3);

// Weighted modularity sum_c (e_c / W - (deg_c / 2W)^2). Throws when a node
// is missing from the partition or the graph has no edges.
double modularity(const ItemGraph& graph, const Partition& partition);

// "i<TAB>j<TAB>weight" lines.
void write_edge_list(std::ostream& out, const ItemGraph& graph);
void write_graphml(std::ostream& out, const ItemGraph& graph);
// "node,community" lines; a header line with those names is optional.
Partition read_partition(std::istream& in);

}  // namespace ciprec::analysis

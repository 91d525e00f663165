#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

namespace ciprec {

// Keeps the n best (id, score) entries: score descending, id ascending on
// ties. Returns them in that order.
template <typename Id, typename Score>
std::vector<std::pair<Id, Score>> top_n(std::vector<std::pair<Id, Score>> scored, std::size_t n) {
    auto better = [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    };
    if (scored.size() > n) {
        std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
        scored.resize(n);
    }
    std::sort(scored.begin(), scored.end(), better);
    return scored;
}

template <typename Id, typename Score>
std::vector<Id> top_n_ids(std::vector<std::pair<Id, Score>> scored, std::size_t n) {
    std::vector<Id> ids;
    for (auto& [id, score] : top_n(std::move(scored), n)) ids.push_back(id);
    return ids;
}

}  // namespace ciprec

#pragma once

// Online search. The coarse stage ranks group summaries in the reduced
// space; the fine stage exactly re-ranks the members of the selected groups
// with full-dimension distances. The returned list covers exactly the
// members of the selected groups, never the whole gallery. A brute-force
// scan is provided as the accuracy and timing baseline.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reidx/core.hpp"
#include "reidx/error.hpp"
#include "reidx/pca.hpp"
#include "reidx/tdc.hpp"

namespace reidx {

inline constexpr std::size_t kDefaultTopKGroups = 100;

struct Query {
    SampleId id = 0;  // batch position unless the source file says otherwise
    DescriptorVector descriptor;
    std::optional<PersonLabel> label;
};

struct RankEntry {
    SampleId id = 0;
    double distance = 0.0;

    friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

// Distances non-decreasing; ties ordered by ascending sample id.
using RankList = std::vector<RankEntry>;

struct StageTimes {
    double projection_ms = 0.0;
    double coarse_ms = 0.0;
    double fine_ms = 0.0;

    double total_ms() const { return projection_ms + coarse_ms + fine_ms; }
};

struct RetrieveResult {
    RankList list;
    StageTimes times;
};

namespace detail {

inline void sort_rank_entries(RankList& list) {
    std::sort(list.begin(), list.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start)
        .count();
}

}  // namespace detail

// Rank group ids by squared distance between an already-reduced query and the
// reduced group descriptors. Ties order by ascending group id.
inline std::vector<std::size_t> coarse_retrieve_reduced(std::span<const double> reduced,
                                                        const GroupIndex& index,
                                                        std::size_t top_k_groups) {
    if (top_k_groups == 0) throw InvalidArgument("top_k_groups must be positive");
    if (reduced.size() != index.reduced_dim) {
        throw DimensionMismatch(reduced.size(), index.reduced_dim);
    }
    const std::size_t count = index.group_count();
    std::vector<std::pair<double, std::size_t>> order(count);
    for (std::size_t g = 0; g < count; ++g) {
        order[g] = {squared_euclidean(reduced, index.group_descriptor_reduced(g)), g};
    }
    const std::size_t keep = std::min(top_k_groups, count);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                      order.end());
    std::vector<std::size_t> group_ids(keep);
    for (std::size_t i = 0; i < keep; ++i) group_ids[i] = order[i].second;
    return group_ids;
}

inline std::vector<std::size_t> coarse_retrieve(const Query& query, const GroupIndex& index,
                                                std::size_t top_k_groups = kDefaultTopKGroups) {
    const DescriptorVector reduced = pca_transform(index.pca, query.descriptor);
    return coarse_retrieve_reduced(reduced, index, top_k_groups);
}

// Exact full-dimension ranking of the union of candidate group members.
// Duplicate candidate ids are collapsed so every sample appears once.
inline RankList fine_retrieve(const Query& query, const GroupIndex& index,
                              const Gallery& gallery,
                              std::span<const std::size_t> candidate_groups) {
    if (query.descriptor.size() != gallery.dim()) {
        throw DimensionMismatch(query.descriptor.size(), gallery.dim());
    }
    const bool rows_attached = index.member_rows.size() == index.groups.size();
    std::vector<bool> seen(index.group_count(), false);
    RankList list;
    const std::span<const double> q{query.descriptor};
    for (std::size_t g : candidate_groups) {
        if (g >= index.group_count()) {
            throw UnknownGroup("group id " + std::to_string(g) + " out of range (" +
                               std::to_string(index.group_count()) + " groups)");
        }
        if (seen[g]) continue;
        seen[g] = true;
        const auto& members = index.groups[g].members;
        for (std::size_t m = 0; m < members.size(); ++m) {
            const std::size_t row = rows_attached
                                        ? index.member_rows[g][m]
                                        : detail::row_of_member(gallery, members[m]);
            list.push_back({members[m], squared_euclidean(q, gallery.descriptor(row))});
        }
    }
    detail::sort_rank_entries(list);
    return list;
}

inline RetrieveResult retrieve(const Query& query, const GroupIndex& index,
                               const Gallery& gallery,
                               std::size_t top_k_groups = kDefaultTopKGroups) {
    RetrieveResult result;
    auto start = std::chrono::steady_clock::now();
    DescriptorVector reduced(index.reduced_dim);
    pca_transform_into(index.pca, query.descriptor, reduced);
    result.times.projection_ms = detail::elapsed_ms(start);

    start = std::chrono::steady_clock::now();
    const auto candidates = coarse_retrieve_reduced(reduced, index, top_k_groups);
    result.times.coarse_ms = detail::elapsed_ms(start);

    start = std::chrono::steady_clock::now();
    result.list = fine_retrieve(query, index, gallery, candidates);
    result.times.fine_ms = detail::elapsed_ms(start);
    return result;
}

inline RankList brute_force_retrieve(const Query& query, const Gallery& gallery) {
    if (query.descriptor.size() != gallery.dim()) {
        throw DimensionMismatch(query.descriptor.size(), gallery.dim());
    }
    RankList list;
    list.reserve(gallery.size());
    const std::span<const double> q{query.descriptor};
    for (std::size_t row = 0; row < gallery.size(); ++row) {
        list.push_back({gallery.id(row), squared_euclidean(q, gallery.descriptor(row))});
    }
    detail::sort_rank_entries(list);
    return list;
}

}  // namespace reidx

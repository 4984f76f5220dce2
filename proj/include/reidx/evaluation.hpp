#pragma once

// Retrieval quality metrics. Average precision follows the truncated-list
// convention: relevant samples the engine never returned contribute zero.
// The rank-weighted objective sums the 1-based ranks of relevant returned
// samples, so smaller is better. A query whose label has no relevant gallery
// sample is skipped and counted, not failed.
//
// Every gallery sample sharing the query label counts as relevant. Dataset
// protocols that exclude junk or same-camera matches are intentionally not
// applied; importers of real benchmark data must filter beforehand.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reidx/core.hpp"
#include "reidx/error.hpp"
#include "reidx/retrieval.hpp"
#include "reidx/tdc.hpp"

namespace reidx {

struct QuerySet {
    std::vector<Query> queries;  // every entry must carry a label
};

struct EvalOptions {
    std::size_t top_k_groups = kDefaultTopKGroups;
    std::vector<std::size_t> cmc_ranks = {1, 5, 10, 20};
};

struct EvalReport {
    double map = 0.0;
    std::vector<std::pair<std::size_t, double>> cmc;  // (rank, fraction), ranks ascending
    std::vector<double> per_query_ap;                 // evaluated queries, input order
    std::vector<std::uint64_t> objective_values;      // parallel to per_query_ap
    double mean_projection_ms = 0.0;
    double mean_coarse_ms = 0.0;
    double mean_fine_ms = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;  // queries with no relevant gallery sample

    double mean_total_ms() const {
        return mean_projection_ms + mean_coarse_ms + mean_fine_ms;
    }
};

inline std::size_t count_relevant(const Gallery& gallery, const PersonLabel& label) {
    std::size_t count = 0;
    for (std::size_t row = 0; row < gallery.size(); ++row) {
        const auto& l = gallery.label(row);
        if (l && *l == label) ++count;
    }
    return count;
}

namespace detail {

inline bool is_relevant(const Gallery& gallery, SampleId id, const PersonLabel& label) {
    const auto row = gallery.row_of(id);
    if (!row) {
        throw InvalidArgument("ranked sample id " + std::to_string(id) +
                              " is not in the gallery");
    }
    const auto& l = gallery.label(*row);
    return l && *l == label;
}

}  // namespace detail

inline double average_precision(const RankList& ranklist, const Gallery& gallery,
                                const PersonLabel& query_label,
                                std::size_t total_relevant) {
    if (total_relevant == 0) {
        throw NoRelevant("no gallery sample carries label \"" + query_label + "\"");
    }
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < ranklist.size(); ++i) {
        if (detail::is_relevant(gallery, ranklist[i].id, query_label)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

// 1-based rank of the first relevant sample, or nullopt if none was returned.
inline std::optional<std::size_t> first_correct_rank(const RankList& ranklist,
                                                     const Gallery& gallery,
                                                     const PersonLabel& query_label) {
    for (std::size_t i = 0; i < ranklist.size(); ++i) {
        if (detail::is_relevant(gallery, ranklist[i].id, query_label)) return i + 1;
    }
    return std::nullopt;
}

inline double cmc_at_k(std::span<const std::optional<std::size_t>> first_ranks,
                       std::size_t k) {
    if (k == 0) throw InvalidArgument("cmc rank must be positive");
    if (first_ranks.empty()) return 0.0;
    std::size_t matched = 0;
    for (const auto& r : first_ranks) {
        if (r && *r <= k) ++matched;
    }
    return static_cast<double>(matched) / static_cast<double>(first_ranks.size());
}

inline double cmc_at_k(const std::vector<RankList>& ranklists, const Gallery& gallery,
                       std::span<const PersonLabel> query_labels, std::size_t k) {
    if (ranklists.size() != query_labels.size()) {
        throw LengthMismatch("ranklist count " + std::to_string(ranklists.size()) +
                             " does not match label count " +
                             std::to_string(query_labels.size()));
    }
    std::vector<std::optional<std::size_t>> first_ranks(ranklists.size());
    for (std::size_t i = 0; i < ranklists.size(); ++i) {
        first_ranks[i] = first_correct_rank(ranklists[i], gallery, query_labels[i]);
    }
    return cmc_at_k(first_ranks, k);
}

inline std::uint64_t objective_value(const RankList& ranklist, const Gallery& gallery,
                                     const PersonLabel& query_label) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < ranklist.size(); ++i) {
        if (detail::is_relevant(gallery, ranklist[i].id, query_label)) sum += i + 1;
    }
    return sum;
}

namespace detail {

// RunQuery: Query -> (RankList, StageTimes). Shared between the
// coarse-to-fine and brute-force evaluation paths.
template <typename RunQuery>
EvalReport evaluate_with(const QuerySet& queries, const Gallery& gallery,
                         const EvalOptions& options, RunQuery&& run_query) {
    if (queries.queries.empty()) throw InvalidArgument("query set is empty");
    for (const auto& q : queries.queries) {
        if (!q.label) throw InvalidArgument("every evaluation query must be labeled");
    }

    EvalReport report;
    std::vector<std::optional<std::size_t>> first_ranks;
    for (const auto& query : queries.queries) {
        const std::size_t relevant = count_relevant(gallery, *query.label);
        if (relevant == 0) {
            ++report.skipped;
            continue;
        }
        auto [list, times] = run_query(query);
        report.per_query_ap.push_back(average_precision(list, gallery, *query.label, relevant));
        report.objective_values.push_back(objective_value(list, gallery, *query.label));
        first_ranks.push_back(first_correct_rank(list, gallery, *query.label));
        report.mean_projection_ms += times.projection_ms;
        report.mean_coarse_ms += times.coarse_ms;
        report.mean_fine_ms += times.fine_ms;
        ++report.evaluated;
    }

    if (report.evaluated > 0) {
        const double n = static_cast<double>(report.evaluated);
        for (double ap : report.per_query_ap) report.map += ap;
        report.map /= n;
        report.mean_projection_ms /= n;
        report.mean_coarse_ms /= n;
        report.mean_fine_ms /= n;
    }

    std::vector<std::size_t> ranks = options.cmc_ranks;
    std::sort(ranks.begin(), ranks.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
    for (std::size_t k : ranks) {
        report.cmc.emplace_back(k, cmc_at_k(std::span{first_ranks}, k));
    }
    return report;
}

}  // namespace detail

inline EvalReport evaluate(const QuerySet& queries, const GroupIndex& index,
                           const Gallery& gallery, const EvalOptions& options = {}) {
    return detail::evaluate_with(queries, gallery, options, [&](const Query& q) {
        RetrieveResult r = retrieve(q, index, gallery, options.top_k_groups);
        return std::pair{std::move(r.list), r.times};
    });
}

inline EvalReport evaluate_brute_force(const QuerySet& queries, const Gallery& gallery,
                                       const EvalOptions& options = {}) {
    return detail::evaluate_with(queries, gallery, options, [&](const Query& q) {
        const auto start = std::chrono::steady_clock::now();
        RankList list = brute_force_retrieve(q, gallery);
        StageTimes times;
        times.fine_ms = detail::elapsed_ms(start);
        return std::pair{std::move(list), times};
    });
}

}  // namespace reidx

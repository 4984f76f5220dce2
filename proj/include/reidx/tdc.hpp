#pragma once

// Offline gallery grouping. A gallery is divided greedily: any group whose
// internal dissimilarity exceeds theta is split at its two furthest members,
// until every group is coherent. Each group is then summarized by the
// dimension-wise mean of its members, and those summaries are projected to a
// lower dimension for the coarse retrieval stage.
//
// Offline cost is dominated by the exact furthest-pair search, which is
// quadratic in group size. That is deliberate: splits are exact, so the
// partition is a pure function of the gallery content and theta.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reidx/core.hpp"
#include "reidx/error.hpp"
#include "reidx/pca.hpp"

namespace reidx {

struct Group {
    std::vector<SampleId> members;  // unique, in stable assignment order
    double dissimilarity = 0.0;     // cached mean pairwise squared distance
};

namespace detail {

// Mean squared Euclidean distance over ordered member pairs i != j, computed
// via the identity sum_ij ||g_i - g_j||^2 == 2N * sum_i ||g_i - mean||^2.
// RowAt maps a member index to a pointer at its dim-length descriptor.
template <typename RowAt>
double mean_pairwise_sqdist(RowAt&& row_at, std::size_t n, std::size_t dim) {
    if (n < 2) return 0.0;
    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = row_at(i);
        for (std::size_t c = 0; c < dim; ++c) mean[c] += row[c];
    }
    for (std::size_t c = 0; c < dim; ++c) mean[c] /= static_cast<double>(n);
    double scatter = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = row_at(i);
        for (std::size_t c = 0; c < dim; ++c) {
            const double dev = row[c] - mean[c];
            scatter += dev * dev;
        }
    }
    return 2.0 * scatter / static_cast<double>(n - 1);
}

template <typename RowAt>
void mean_descriptor_into(RowAt&& row_at, std::size_t n, std::size_t dim,
                          std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = row_at(i);
        for (std::size_t c = 0; c < dim; ++c) out[c] += row[c];
    }
    for (std::size_t c = 0; c < dim; ++c) out[c] /= static_cast<double>(n);
}

inline std::size_t row_of_member(const Gallery& gallery, SampleId id) {
    auto row = gallery.row_of(id);
    if (!row) {
        throw InvalidArgument("sample id " + std::to_string(id) + " is not in the gallery");
    }
    return *row;
}

inline std::vector<std::size_t> rows_of_members(const Gallery& gallery,
                                                std::span<const SampleId> members) {
    std::vector<std::size_t> rows;
    rows.reserve(members.size());
    for (SampleId id : members) rows.push_back(row_of_member(gallery, id));
    return rows;
}

// Exact max-distance pair over rows. Ties resolve to the pair whose
// (smaller id, larger id) tuple is lexicographically least, so the result is
// independent of member order.
inline std::pair<std::size_t, std::size_t> furthest_pair_rows(
    const Gallery& gallery, std::span<const std::size_t> rows) {
    if (rows.size() < 2) {
        throw TooFewMembers("furthest pair needs at least 2 members, got " +
                            std::to_string(rows.size()));
    }
    const std::size_t dim = gallery.dim();
    double best_dist = -1.0;
    std::pair<SampleId, SampleId> best_ids{0, 0};
    std::pair<std::size_t, std::size_t> best_rows{0, 0};
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double* a = gallery.descriptor(rows[i]).data();
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            const double* b = gallery.descriptor(rows[j]).data();
            double dist = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double diff = a[c] - b[c];
                dist += diff * diff;
            }
            SampleId id_a = gallery.id(rows[i]);
            SampleId id_b = gallery.id(rows[j]);
            std::size_t row_a = rows[i], row_b = rows[j];
            if (id_b < id_a) {
                std::swap(id_a, id_b);
                std::swap(row_a, row_b);
            }
            if (dist > best_dist ||
                (dist == best_dist && std::pair{id_a, id_b} < best_ids)) {
                best_dist = dist;
                best_ids = {id_a, id_b};
                best_rows = {row_a, row_b};
            }
        }
    }
    return best_rows;
}

// One divisive step: seed with the furthest pair (left seed has the smaller
// id) and assign each member by strict nearest-seed comparison. A member
// equidistant from both seeds goes right. Member order is preserved.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(
    const Gallery& gallery, std::span<const std::size_t> rows) {
    auto [left_seed, right_seed] = furthest_pair_rows(gallery, rows);
    const auto seed_l = gallery.descriptor(left_seed);
    const auto seed_r = gallery.descriptor(right_seed);
    if (squared_euclidean(seed_l, seed_r) == 0.0) {
        throw Unsplittable("all " + std::to_string(rows.size()) +
                           " member descriptors are identical");
    }
    std::vector<std::size_t> left, right;
    for (std::size_t row : rows) {
        const auto g = gallery.descriptor(row);
        if (squared_euclidean(g, seed_l) < squared_euclidean(g, seed_r)) {
            left.push_back(row);
        } else {
            right.push_back(row);
        }
    }
    return {std::move(left), std::move(right)};
}

}  // namespace detail

inline double dissimilarity_degree(const Gallery& gallery,
                                   std::span<const std::size_t> rows) {
    if (rows.empty()) throw InvalidArgument("dissimilarity_degree of an empty member list");
    return detail::mean_pairwise_sqdist(
        [&](std::size_t i) { return gallery.descriptor(rows[i]).data(); }, rows.size(),
        gallery.dim());
}

inline double dissimilarity_degree(const std::vector<DescriptorVector>& members) {
    if (members.empty()) throw InvalidArgument("dissimilarity_degree of an empty member list");
    const std::size_t dim = members.front().size();
    for (const auto& m : members) {
        if (m.size() != dim) throw DimensionMismatch(m.size(), dim);
    }
    return detail::mean_pairwise_sqdist([&](std::size_t i) { return members[i].data(); },
                                        members.size(), dim);
}

inline std::pair<SampleId, SampleId> furthest_pair(const Gallery& gallery,
                                                   std::span<const SampleId> members) {
    const auto rows = detail::rows_of_members(gallery, members);
    auto [l, r] = detail::furthest_pair_rows(gallery, rows);
    return {gallery.id(l), gallery.id(r)};
}

inline std::pair<std::vector<SampleId>, std::vector<SampleId>> split_group(
    const Gallery& gallery, std::span<const SampleId> members) {
    const auto rows = detail::rows_of_members(gallery, members);
    auto [left_rows, right_rows] = detail::split_rows(gallery, rows);
    std::vector<SampleId> left, right;
    left.reserve(left_rows.size());
    right.reserve(right_rows.size());
    for (std::size_t row : left_rows) left.push_back(gallery.id(row));
    for (std::size_t row : right_rows) right.push_back(gallery.id(row));
    return {std::move(left), std::move(right)};
}

inline DescriptorVector group_descriptor(const Gallery& gallery,
                                         std::span<const std::size_t> rows) {
    if (rows.empty()) throw InvalidArgument("group_descriptor of an empty member list");
    DescriptorVector out(gallery.dim());
    detail::mean_descriptor_into(
        [&](std::size_t i) { return gallery.descriptor(rows[i]).data(); }, rows.size(),
        gallery.dim(), out);
    return out;
}

inline DescriptorVector group_descriptor(const std::vector<DescriptorVector>& members) {
    if (members.empty()) throw InvalidArgument("group_descriptor of an empty member list");
    const std::size_t dim = members.front().size();
    for (const auto& m : members) {
        if (m.size() != dim) throw DimensionMismatch(m.size(), dim);
    }
    DescriptorVector out(dim);
    detail::mean_descriptor_into([&](std::size_t i) { return members[i].data(); },
                                 members.size(), dim, out);
    return out;
}

// Divide the gallery until every group's dissimilarity is at most theta.
// Each sweep fixes the set of over-threshold groups up front, splits them in
// stable creation order, and appends the two halves after all existing
// groups; freshly created halves are not re-examined until the next sweep.
inline std::vector<Group> tdc_cluster(const Gallery& gallery, double theta) {
    if (gallery.empty()) throw InvalidArgument("tdc_cluster on an empty gallery");
    if (!(theta >= 0.0)) throw InvalidArgument("theta must be non-negative");

    struct WorkGroup {
        std::vector<std::size_t> rows;
        double dissimilarity;
    };

    std::vector<std::size_t> all(gallery.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    std::vector<WorkGroup> work;
    work.push_back({std::move(all), 0.0});
    work.front().dissimilarity = dissimilarity_degree(gallery, work.front().rows);

    while (true) {
        std::vector<std::size_t> violators;
        for (std::size_t i = 0; i < work.size(); ++i) {
            if (work[i].dissimilarity > theta) violators.push_back(i);
        }
        if (violators.empty()) break;

        std::vector<bool> removed(work.size(), false);
        for (std::size_t idx : violators) {
            auto [left, right] = detail::split_rows(gallery, work[idx].rows);
            removed[idx] = true;
            WorkGroup l{std::move(left), 0.0};
            l.dissimilarity = dissimilarity_degree(gallery, l.rows);
            WorkGroup r{std::move(right), 0.0};
            r.dissimilarity = dissimilarity_degree(gallery, r.rows);
            work.push_back(std::move(l));
            work.push_back(std::move(r));
        }

        std::vector<WorkGroup> next;
        next.reserve(work.size() - violators.size());
        for (std::size_t i = 0; i < work.size(); ++i) {
            if (i >= removed.size() || !removed[i]) next.push_back(std::move(work[i]));
        }
        work = std::move(next);
    }

    std::vector<Group> groups;
    groups.reserve(work.size());
    for (const auto& w : work) {
        Group g;
        g.members.reserve(w.rows.size());
        for (std::size_t row : w.rows) g.members.push_back(gallery.id(row));
        g.dissimilarity = w.dissimilarity;
        groups.push_back(std::move(g));
    }
    return groups;
}

// Which descriptor set the projection is fitted on. Group summaries are the
// vectors the coarse stage actually serves; raw gallery rows are the larger
// sample and the required fallback when there are fewer groups than target
// dimensions.
enum class PcaFitSource {
    GroupDescriptors,
    GalleryDescriptors,
};

struct GroupIndex {
    double theta = 0.0;
    std::size_t full_dim = 0;
    std::size_t reduced_dim = 0;
    std::uint64_t source_digest = 0;  // gallery_digest of the build input
    std::vector<Group> groups;
    PcaModel pca;
    std::vector<double> descriptors_full;     // group count x full_dim, row-major
    std::vector<double> descriptors_reduced;  // group count x reduced_dim, row-major

    // Derived per-group gallery rows; rebuilt against the serving gallery
    // after deserialization, not persisted.
    std::vector<std::vector<std::size_t>> member_rows;

    std::size_t group_count() const { return groups.size(); }

    std::span<const double> group_descriptor_full(std::size_t g) const {
        return {descriptors_full.data() + g * full_dim, full_dim};
    }
    std::span<const double> group_descriptor_reduced(std::size_t g) const {
        return {descriptors_reduced.data() + g * reduced_dim, reduced_dim};
    }
};

inline void attach_gallery_rows(GroupIndex& index, const Gallery& gallery) {
    index.member_rows.clear();
    index.member_rows.reserve(index.groups.size());
    for (const auto& g : index.groups) {
        index.member_rows.push_back(detail::rows_of_members(gallery, g.members));
    }
}

inline GroupIndex build_index(const Gallery& gallery, double theta, std::size_t k,
                              PcaFitSource fit_source = PcaFitSource::GroupDescriptors) {
    if (gallery.empty()) throw InvalidArgument("build_index on an empty gallery");
    if (k == 0 || k > gallery.dim()) {
        throw InvalidArgument("reduced dimension " + std::to_string(k) +
                              " must be in [1, " + std::to_string(gallery.dim()) + "]");
    }

    GroupIndex index;
    index.theta = theta;
    index.full_dim = gallery.dim();
    index.reduced_dim = k;
    index.source_digest = gallery_digest(gallery);
    index.groups = tdc_cluster(gallery, theta);
    attach_gallery_rows(index, gallery);

    const std::size_t count = index.groups.size();
    index.descriptors_full.resize(count * index.full_dim);
    for (std::size_t g = 0; g < count; ++g) {
        detail::mean_descriptor_into(
            [&](std::size_t i) { return gallery.descriptor(index.member_rows[g][i]).data(); },
            index.member_rows[g].size(), index.full_dim,
            {index.descriptors_full.data() + g * index.full_dim, index.full_dim});
    }

    // Too few groups cannot support a k-dim fit; fall back to the raw rows.
    const bool groups_sufficient = count >= std::max<std::size_t>(2, k);
    if (fit_source == PcaFitSource::GroupDescriptors && groups_sufficient) {
        index.pca = pca_fit(index.descriptors_full.data(), count, index.full_dim, k);
    } else {
        index.pca = pca_fit(gallery.descriptor(0).data(), gallery.size(), index.full_dim, k);
    }

    index.descriptors_reduced.resize(count * k);
    for (std::size_t g = 0; g < count; ++g) {
        pca_transform_into(index.pca, index.group_descriptor_full(g),
                           {index.descriptors_reduced.data() + g * k, k});
    }
    return index;
}

// Empirical quantile of the pairwise squared-distance distribution, for
// picking theta. Enumerates all pairs when that fits in max_pairs, otherwise
// samples pairs uniformly with the given seed.
inline double dissimilarity_quantile(const Gallery& gallery, double q,
                                     std::size_t max_pairs = 200000,
                                     std::uint64_t seed = 1) {
    if (gallery.size() < 2) {
        throw InsufficientData("pair quantile needs at least 2 samples");
    }
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile must be in [0, 1]");
    if (max_pairs == 0) throw InvalidArgument("max_pairs must be positive");

    const std::size_t n = gallery.size();
    std::vector<double> dists;
    const bool exhaustive = n <= 2000 && n * (n - 1) / 2 <= max_pairs;
    if (exhaustive) {
        dists.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                dists.push_back(squared_euclidean(gallery.descriptor(i), gallery.descriptor(j)));
            }
        }
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        dists.reserve(max_pairs);
        while (dists.size() < max_pairs) {
            const std::size_t i = pick(rng);
            const std::size_t j = pick(rng);
            if (i == j) continue;
            dists.push_back(squared_euclidean(gallery.descriptor(i), gallery.descriptor(j)));
        }
    }
    std::sort(dists.begin(), dists.end());
    const double pos = q * static_cast<double>(dists.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, dists.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return dists[lo] + frac * (dists[hi] - dists[lo]);
}

}  // namespace reidx

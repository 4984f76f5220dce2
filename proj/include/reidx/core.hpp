#pragma once

// Canonical data model: sample ids, labels, descriptors, galleries, and the
// squared Euclidean distance every other module builds on.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "reidx/error.hpp"

namespace reidx {

using SampleId = std::uint64_t;
using PersonLabel = std::string;
using DescriptorVector = std::vector<double>;

// Distances accumulate in double precision regardless of how descriptors were
// stored; downstream code averages O(N^2) of these terms.
inline double squared_euclidean(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch(a.size(), b.size());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// Ordered collection of (id, optional label, descriptor). Descriptors live in
// one contiguous row-major buffer. Immutable once loaded; concurrent readers
// need no coordination.
class Gallery {
public:
    Gallery() = default;
    explicit Gallery(std::size_t dim) : dim_(dim) {}

    void add(SampleId id, std::optional<PersonLabel> label, std::span<const double> descriptor) {
        if (dim_ == 0) {
            throw InvalidArgument("gallery dimension not set");
        }
        if (descriptor.size() != dim_) {
            throw DimensionMismatch(descriptor.size(), dim_);
        }
        data_.insert(data_.end(), descriptor.begin(), descriptor.end());
        ids_.push_back(id);
        labels_.push_back(std::move(label));
        // first occurrence wins; duplicates are surfaced by validate_gallery
        row_by_id_.emplace(id, ids_.size() - 1);
    }

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return ids_.empty(); }

    SampleId id(std::size_t row) const { return ids_[row]; }
    const std::optional<PersonLabel>& label(std::size_t row) const { return labels_[row]; }

    std::span<const double> descriptor(std::size_t row) const {
        return {data_.data() + row * dim_, dim_};
    }

    std::optional<std::size_t> row_of(SampleId id) const {
        auto it = row_by_id_.find(id);
        if (it == row_by_id_.end()) return std::nullopt;
        return it->second;
    }

    const std::vector<SampleId>& ids() const noexcept { return ids_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
    std::vector<SampleId> ids_;
    std::vector<std::optional<PersonLabel>> labels_;
    std::unordered_map<SampleId, std::size_t> row_by_id_;
};

struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const noexcept { return issues.empty(); }
};

// Report-style checks: duplicate ids, non-finite entries, emptiness. Never throws.
inline ValidationReport validate_gallery(const Gallery& g) {
    ValidationReport report;
    if (g.empty()) {
        report.issues.push_back("gallery is empty");
        return report;
    }
    if (g.dim() == 0) {
        report.issues.push_back("gallery dimension is zero");
    }
    std::unordered_map<SampleId, std::size_t> seen;
    for (std::size_t row = 0; row < g.size(); ++row) {
        const SampleId id = g.id(row);
        auto [it, inserted] = seen.emplace(id, row);
        if (!inserted) {
            report.issues.push_back("duplicate sample id " + std::to_string(id) +
                                    " (rows " + std::to_string(it->second) + " and " +
                                    std::to_string(row) + ")");
        }
        for (double v : g.descriptor(row)) {
            if (!std::isfinite(v)) {
                report.issues.push_back("non-finite entry in descriptor of sample " +
                                        std::to_string(id));
                break;
            }
        }
    }
    return report;
}

namespace detail {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline void fnv_update(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= kFnvPrime;
    }
}

inline void fnv_u64(std::uint64_t& h, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    fnv_update(h, b, 8);
}

inline std::uint32_t f32_bits(double v) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    return bits;
}

}  // namespace detail

// FNV-1a over the gallery's canonical content: dim, count, per-sample id and
// label, and the 32-bit storage bits of every descriptor entry. Matches across
// a write/read cycle of the descriptor file format.
inline std::uint64_t gallery_digest(const Gallery& g) {
    std::uint64_t h = detail::kFnvOffset;
    detail::fnv_u64(h, g.dim());
    detail::fnv_u64(h, g.size());
    for (std::size_t row = 0; row < g.size(); ++row) {
        detail::fnv_u64(h, g.id(row));
        const auto& label = g.label(row);
        detail::fnv_u64(h, label.has_value() ? 1 : 0);
        if (label) {
            detail::fnv_u64(h, label->size());
            detail::fnv_update(h, label->data(), label->size());
        }
    }
    for (std::size_t row = 0; row < g.size(); ++row) {
        for (double v : g.descriptor(row)) {
            detail::fnv_u64(h, detail::f32_bits(v));
        }
    }
    return h;
}

}  // namespace reidx

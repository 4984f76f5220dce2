#pragma once

// Descriptor assembly: global average pooling over feature-map stacks,
// concatenation of the four region descriptors into one vector, and weighted
// fusion of region descriptors. No normalization is applied anywhere; the
// concatenated vector is consumed by squared Euclidean distance as-is.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "reidx/core.hpp"
#include "reidx/error.hpp"

namespace reidx {

// M channels of Y x X responses, stored channel-major.
class FeatureMapStack {
public:
    FeatureMapStack(std::size_t channels, std::size_t height, std::size_t width)
        : channels_(channels), height_(height), width_(width),
          responses_(channels * height * width, 0.0) {
        if (channels == 0 || height == 0 || width == 0) {
            throw InvalidArgument("feature map stack dimensions must be positive");
        }
    }

    FeatureMapStack(std::size_t channels, std::size_t height, std::size_t width,
                    std::vector<double> responses)
        : FeatureMapStack(channels, height, width) {
        if (responses.size() != responses_.size()) {
            throw DimensionMismatch(responses.size(), responses_.size());
        }
        for (double v : responses) {
            if (!std::isfinite(v)) {
                throw InvalidArgument("non-finite response in feature map stack");
            }
        }
        responses_ = std::move(responses);
    }

    std::size_t channels() const noexcept { return channels_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }

    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return responses_[(c * height_ + y) * width_ + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return responses_[(c * height_ + y) * width_ + x];
    }

    std::span<const double> channel(std::size_t c) const {
        return {responses_.data() + c * height_ * width_, height_ * width_};
    }

    std::span<const double> data() const noexcept { return responses_; }

private:
    std::size_t channels_, height_, width_;
    std::vector<double> responses_;
};

enum class Region { Global, Head, UpperBody, LowerBody };

inline const char* region_name(Region r) {
    switch (r) {
        case Region::Global: return "global";
        case Region::Head: return "head";
        case Region::UpperBody: return "upper_body";
        case Region::LowerBody: return "lower_body";
    }
    return "?";
}

struct RegionDescriptor {
    Region region = Region::Global;
    DescriptorVector vector;
};

// Concatenation of the four region descriptors, in the fixed order
// [global; head; upper_body; lower_body]. Slicing recovers the inputs exactly.
struct GladDescriptor {
    DescriptorVector vector;
    std::size_t region_dim = 0;

    std::span<const double> slice(Region r) const {
        const std::size_t i = static_cast<std::size_t>(r);
        return {vector.data() + i * region_dim, region_dim};
    }
};

// Spatial mean of each channel. The same pooling serves classification scores
// and feature extraction.
inline DescriptorVector gap(const FeatureMapStack& stack) {
    DescriptorVector out(stack.channels());
    const double denom = static_cast<double>(stack.height() * stack.width());
    for (std::size_t c = 0; c < stack.channels(); ++c) {
        double acc = 0.0;
        for (double v : stack.channel(c)) acc += v;
        out[c] = acc / denom;
    }
    return out;
}

inline GladDescriptor assemble_glad(const RegionDescriptor& global,
                                    const RegionDescriptor& head,
                                    const RegionDescriptor& upper_body,
                                    const RegionDescriptor& lower_body) {
    const RegionDescriptor* slots[4] = {&global, &head, &upper_body, &lower_body};
    const Region expected[4] = {Region::Global, Region::Head, Region::UpperBody,
                                Region::LowerBody};
    const std::size_t m = global.vector.size();
    for (int i = 0; i < 4; ++i) {
        if (slots[i]->region != expected[i]) {
            throw RegionMismatch(std::string("expected ") + region_name(expected[i]) +
                                 " descriptor, got " + region_name(slots[i]->region));
        }
        if (slots[i]->vector.size() != m) {
            throw RegionMismatch(std::string("region ") + region_name(expected[i]) +
                                 " has dimension " + std::to_string(slots[i]->vector.size()) +
                                 ", expected " + std::to_string(m));
        }
    }
    GladDescriptor out;
    out.region_dim = m;
    out.vector.reserve(4 * m);
    for (const RegionDescriptor* rd : slots) {
        out.vector.insert(out.vector.end(), rd->vector.begin(), rd->vector.end());
    }
    return out;
}

// Concatenates w_i-scaled descriptors in input order. Scaling slices before
// concatenation is equivalent, under squared Euclidean distance, to weighting
// per-region distances by w_i^2.
inline DescriptorVector weighted_fuse(std::span<const RegionDescriptor> descriptors,
                                      std::span<const double> weights) {
    if (descriptors.size() != weights.size()) {
        throw LengthMismatch("got " + std::to_string(descriptors.size()) + " descriptors and " +
                             std::to_string(weights.size()) + " weights");
    }
    std::size_t total = 0;
    for (const auto& d : descriptors) total += d.vector.size();
    for (double w : weights) {
        if (!(w >= 0.0)) throw InvalidArgument("fusion weights must be non-negative");
    }
    DescriptorVector out;
    out.reserve(total);
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
        for (double v : descriptors[i].vector) out.push_back(weights[i] * v);
    }
    return out;
}

// Pools each region's stack and concatenates. Convenience for fixture-driven
// pipelines where the four stacks arrive precomputed.
inline GladDescriptor extract_glad(const FeatureMapStack& global, const FeatureMapStack& head,
                                   const FeatureMapStack& upper_body,
                                   const FeatureMapStack& lower_body) {
    return assemble_glad({Region::Global, gap(global)}, {Region::Head, gap(head)},
                         {Region::UpperBody, gap(upper_body)},
                         {Region::LowerBody, gap(lower_body)});
}

}  // namespace reidx

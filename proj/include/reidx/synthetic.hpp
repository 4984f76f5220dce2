#pragma once

// Synthetic labeled galleries for benchmarks and acceptance runs. Identities
// are Gaussian clusters: a centroid per identity with spread between_std,
// samples around it with spread within_std, plus one held-out query per
// identity. Everything is drawn from one seeded generator in a fixed order,
// so a spec maps to exactly one dataset.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

#include "reidx/core.hpp"
#include "reidx/error.hpp"
#include "reidx/evaluation.hpp"
#include "reidx/retrieval.hpp"

namespace reidx {

struct SyntheticSpec {
    std::size_t identities = 0;
    std::size_t samples_per_identity = 0;
    std::size_t dim = 0;
    double within_std = 0.0;
    double between_std = 0.0;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Gallery gallery;
    QuerySet queries;  // one labeled probe per identity

    explicit SyntheticData(std::size_t dim) : gallery(dim) {}
};

inline SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    if (spec.identities == 0) throw InvalidSpec("identities must be positive");
    if (spec.samples_per_identity == 0) {
        throw InvalidSpec("samples_per_identity must be positive");
    }
    if (spec.dim == 0) throw InvalidSpec("dim must be positive");
    if (!(spec.within_std > 0.0)) throw InvalidSpec("within_std must be positive");
    if (!(spec.between_std > 0.0)) throw InvalidSpec("between_std must be positive");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    SyntheticData data(spec.dim);
    DescriptorVector centroid(spec.dim), sample(spec.dim);
    SampleId next_id = 0;
    for (std::size_t p = 0; p < spec.identities; ++p) {
        const PersonLabel label = std::to_string(p);
        for (std::size_t c = 0; c < spec.dim; ++c) centroid[c] = spec.between_std * unit(rng);
        for (std::size_t s = 0; s < spec.samples_per_identity; ++s) {
            for (std::size_t c = 0; c < spec.dim; ++c) {
                sample[c] = centroid[c] + spec.within_std * unit(rng);
            }
            data.gallery.add(next_id++, label, sample);
        }
        Query probe;
        probe.id = static_cast<SampleId>(p);
        probe.descriptor.resize(spec.dim);
        for (std::size_t c = 0; c < spec.dim; ++c) {
            probe.descriptor[c] = centroid[c] + spec.within_std * unit(rng);
        }
        probe.label = label;
        data.queries.queries.push_back(std::move(probe));
    }
    return data;
}

}  // namespace reidx

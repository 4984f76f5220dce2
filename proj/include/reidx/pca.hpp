#pragma once

// Linear dimensionality reduction for the coarse retrieval stage. Fitting is
// a dense symmetric eigendecomposition of the d x d sample covariance; the
// dimensions in play are desk-scale (d <= 4096), so exactness is affordable
// and no sketching is used.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "reidx/core.hpp"
#include "reidx/error.hpp"

namespace reidx {

// Fitted model. Component rows are orthonormal, ordered by descending
// eigenvalue, and sign-normalized so the first non-negligible entry of each
// row is positive. A fitted model is immutable; concurrent transform calls
// need no coordination.
struct PcaModel {
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    std::vector<double> mean;         // input_dim
    std::vector<double> components;   // output_dim x input_dim, row-major
    std::vector<double> eigenvalues;  // output_dim, descending
    bool rank_deficient = false;      // fewer than output_dim positive eigenvalues

    std::span<const double> component(std::size_t i) const {
        return {components.data() + i * input_dim, input_dim};
    }
};

inline PcaModel pca_fit(const double* data, std::size_t count, std::size_t dim, std::size_t k) {
    if (count < 2) {
        throw InsufficientData("pca_fit needs at least 2 samples, got " + std::to_string(count));
    }
    if (k == 0 || k > dim || k > count) {
        throw InsufficientData("pca_fit target dimension " + std::to_string(k) +
                               " exceeds min(dim=" + std::to_string(dim) +
                               ", samples=" + std::to_string(count) + ") or is zero");
    }

    using RowMajorMatrix =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajorMatrix> samples(data, static_cast<Eigen::Index>(count),
                                             static_cast<Eigen::Index>(dim));

    Eigen::RowVectorXd mean = samples.colwise().mean();
    Eigen::MatrixXd centered = samples.rowwise() - mean;
    Eigen::MatrixXd covariance =
        (centered.adjoint() * centered) / static_cast<double>(count - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
    if (solver.info() != Eigen::Success) {
        throw Error("eigendecomposition of the covariance failed");
    }

    // Solver returns eigenvalues ascending; walk from the back for descending
    // order. Exact ties keep that traversal order, which is stable across runs.
    const Eigen::VectorXd& values = solver.eigenvalues();
    const Eigen::MatrixXd& vectors = solver.eigenvectors();

    PcaModel model;
    model.input_dim = dim;
    model.output_dim = k;
    model.mean.assign(mean.data(), mean.data() + dim);
    model.components.resize(k * dim);
    model.eigenvalues.resize(k);

    const double scale = std::max(1.0, std::abs(values(values.size() - 1)));
    std::size_t positive = 0;
    for (Eigen::Index i = values.size() - 1; i >= 0; --i) {
        if (values(i) > 1e-12 * scale) ++positive;
    }
    model.rank_deficient = positive < k;

    for (std::size_t r = 0; r < k; ++r) {
        const Eigen::Index src = values.size() - 1 - static_cast<Eigen::Index>(r);
        model.eigenvalues[r] = values(src);
        double* row = model.components.data() + r * dim;
        for (std::size_t c = 0; c < dim; ++c) row[c] = vectors(static_cast<Eigen::Index>(c), src);
        // sign convention: first entry of non-negligible magnitude is positive
        double flip = 1.0;
        for (std::size_t c = 0; c < dim; ++c) {
            if (std::abs(row[c]) > 1e-12) {
                flip = row[c] < 0.0 ? -1.0 : 1.0;
                break;
            }
        }
        if (flip < 0.0) {
            for (std::size_t c = 0; c < dim; ++c) row[c] = -row[c];
        }
    }
    return model;
}

inline PcaModel pca_fit(const std::vector<DescriptorVector>& data, std::size_t k) {
    if (data.size() < 2) {
        throw InsufficientData("pca_fit needs at least 2 samples, got " +
                               std::to_string(data.size()));
    }
    const std::size_t dim = data.front().size();
    std::vector<double> flat;
    flat.reserve(data.size() * dim);
    for (const auto& v : data) {
        if (v.size() != dim) throw DimensionMismatch(v.size(), dim);
        flat.insert(flat.end(), v.begin(), v.end());
    }
    return pca_fit(flat.data(), data.size(), dim, k);
}

// out = components * (v - mean); out must have output_dim entries.
inline void pca_transform_into(const PcaModel& model, std::span<const double> v,
                               std::span<double> out) {
    if (v.size() != model.input_dim) {
        throw DimensionMismatch(v.size(), model.input_dim);
    }
    if (out.size() != model.output_dim) {
        throw DimensionMismatch(out.size(), model.output_dim);
    }
    for (std::size_t r = 0; r < model.output_dim; ++r) {
        const double* row = model.components.data() + r * model.input_dim;
        double acc = 0.0;
        for (std::size_t c = 0; c < model.input_dim; ++c) {
            acc += row[c] * (v[c] - model.mean[c]);
        }
        out[r] = acc;
    }
}

inline DescriptorVector pca_transform(const PcaModel& model, std::span<const double> v) {
    DescriptorVector out(model.output_dim);
    pca_transform_into(model, v, out);
    return out;
}

}  // namespace reidx

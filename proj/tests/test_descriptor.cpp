#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "reidx/descriptor.hpp"
#include "reidx/error.hpp"

using namespace reidx;

namespace {

FeatureMapStack random_stack(std::mt19937_64& rng, std::size_t c, std::size_t h,
                             std::size_t w) {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> data(c * h * w);
    for (auto& v : data) v = dist(rng);
    return FeatureMapStack(c, h, w, std::move(data));
}

RegionDescriptor rd(Region r, DescriptorVector v) { return {r, std::move(v)}; }

}  // namespace

TEST(FeatureMapStack, RejectsDegenerateShapes) {
    EXPECT_THROW(FeatureMapStack(0, 2, 2), InvalidArgument);
    EXPECT_THROW(FeatureMapStack(1, 0, 2), InvalidArgument);
    EXPECT_THROW(FeatureMapStack(1, 2, 0), InvalidArgument);
}

TEST(FeatureMapStack, RejectsWrongSizeAndNonFinite) {
    EXPECT_THROW(FeatureMapStack(1, 2, 2, std::vector<double>{1.0}), DimensionMismatch);
    EXPECT_THROW(FeatureMapStack(1, 1, 2,
                                 std::vector<double>{1.0, std::nan("")}),
                 InvalidArgument);
}

TEST(Gap, ConstantChannel) {
    FeatureMapStack s(1, 3, 3);
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) s.at(0, y, x) = 3.0;
    const auto d = gap(s);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_DOUBLE_EQ(d[0], 3.0);
}

TEST(Gap, TwoByTwoMean) {
    FeatureMapStack s(1, 2, 2, {1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(gap(s)[0], 2.5);
}

TEST(Gap, PerChannelIndependence) {
    FeatureMapStack s(2, 2, 2, {0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0});
    const auto d = gap(s);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_DOUBLE_EQ(d[0], 0.0);
    EXPECT_DOUBLE_EQ(d[1], 1.0);
}

TEST(Gap, LinearInTheStack) {
    std::mt19937_64 rng(21);
    const auto s1 = random_stack(rng, 3, 4, 5);
    const auto s2 = random_stack(rng, 3, 4, 5);
    const double a = 2.5, b = -0.75;

    std::vector<double> mixed(s1.data().size());
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        mixed[i] = a * s1.data()[i] + b * s2.data()[i];
    }
    const auto lhs = gap(FeatureMapStack(3, 4, 5, std::move(mixed)));
    const auto g1 = gap(s1);
    const auto g2 = gap(s2);
    for (std::size_t c = 0; c < lhs.size(); ++c) {
        EXPECT_NEAR(lhs[c], a * g1[c] + b * g2[c], 1e-12);
    }
}

TEST(Gap, PermutationInvariantWithinChannel) {
    FeatureMapStack a(1, 2, 2, {1.0, 2.0, 3.0, 4.0});
    FeatureMapStack b(1, 2, 2, {4.0, 1.0, 3.0, 2.0});
    EXPECT_DOUBLE_EQ(gap(a)[0], gap(b)[0]);
}

TEST(AssembleGlad, ConcatenationOrder) {
    const auto glad = assemble_glad(rd(Region::Global, {1.0, 0.0}),
                                    rd(Region::Head, {0.0, 1.0}),
                                    rd(Region::UpperBody, {2.0, 2.0}),
                                    rd(Region::LowerBody, {3.0, 3.0}));
    const DescriptorVector expect{1.0, 0.0, 0.0, 1.0, 2.0, 2.0, 3.0, 3.0};
    EXPECT_EQ(glad.vector, expect);
    EXPECT_EQ(glad.region_dim, 2u);
}

TEST(AssembleGlad, FourTimesChannelDim) {
    DescriptorVector v(1024, 0.5);
    const auto glad = assemble_glad(rd(Region::Global, v), rd(Region::Head, v),
                                    rd(Region::UpperBody, v), rd(Region::LowerBody, v));
    EXPECT_EQ(glad.vector.size(), 4096u);
}

TEST(AssembleGlad, SlicesRecoverInputs) {
    const DescriptorVector g{1.0, 2.0}, h{3.0, 4.0}, ub{5.0, 6.0}, lb{7.0, 8.0};
    const auto glad = assemble_glad(rd(Region::Global, g), rd(Region::Head, h),
                                    rd(Region::UpperBody, ub), rd(Region::LowerBody, lb));
    const auto slice = [&](Region r) {
        const auto s = glad.slice(r);
        return DescriptorVector(s.begin(), s.end());
    };
    EXPECT_EQ(slice(Region::Global), g);
    EXPECT_EQ(slice(Region::Head), h);
    EXPECT_EQ(slice(Region::UpperBody), ub);
    EXPECT_EQ(slice(Region::LowerBody), lb);
}

TEST(AssembleGlad, WrongRegionTagThrows) {
    DescriptorVector v{1.0};
    EXPECT_THROW(assemble_glad(rd(Region::Head, v), rd(Region::Head, v),
                               rd(Region::UpperBody, v), rd(Region::LowerBody, v)),
                 RegionMismatch);
}

TEST(AssembleGlad, MismatchedDimsThrow) {
    EXPECT_THROW(assemble_glad(rd(Region::Global, {1.0}), rd(Region::Head, {1.0, 2.0}),
                               rd(Region::UpperBody, {1.0}), rd(Region::LowerBody, {1.0})),
                 RegionMismatch);
}

TEST(WeightedFuse, UnitWeightsConcatenate) {
    std::vector<RegionDescriptor> parts{rd(Region::Head, {1.0, 2.0}),
                                        rd(Region::UpperBody, {3.0})};
    const double weights[] = {1.0, 1.0};
    const auto fused = weighted_fuse(parts, weights);
    const DescriptorVector expect{1.0, 2.0, 3.0};
    EXPECT_EQ(fused, expect);
}

TEST(WeightedFuse, PartWeightsFixture) {
    // head/upper/lower weighting 0.2/0.4/0.4 on all-ones parts.
    std::vector<RegionDescriptor> parts{rd(Region::Head, {1.0, 1.0}),
                                        rd(Region::UpperBody, {1.0, 1.0}),
                                        rd(Region::LowerBody, {1.0, 1.0})};
    const double weights[] = {0.2, 0.4, 0.4};
    const auto fused = weighted_fuse(parts, weights);
    const DescriptorVector expect{0.2, 0.2, 0.4, 0.4, 0.4, 0.4};
    ASSERT_EQ(fused.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_DOUBLE_EQ(fused[i], expect[i]);
}

TEST(WeightedFuse, ZeroWeightZeroesTheSlice) {
    std::vector<RegionDescriptor> parts{rd(Region::Head, {5.0}), rd(Region::UpperBody, {7.0})};
    const double weights[] = {0.0, 1.0};
    const auto fused = weighted_fuse(parts, weights);
    EXPECT_DOUBLE_EQ(fused[0], 0.0);
    EXPECT_DOUBLE_EQ(fused[1], 7.0);
}

TEST(WeightedFuse, CountMismatchThrows) {
    std::vector<RegionDescriptor> parts{rd(Region::Head, {1.0})};
    const double weights[] = {1.0, 2.0};
    EXPECT_THROW(weighted_fuse(parts, weights), LengthMismatch);
}

TEST(WeightedFuse, NegativeWeightThrows) {
    std::vector<RegionDescriptor> parts{rd(Region::Head, {1.0})};
    const double weights[] = {-0.5};
    EXPECT_THROW(weighted_fuse(parts, weights), InvalidArgument);
}

TEST(ExtractGlad, PoolsEachRegionThenConcatenates) {
    FeatureMapStack global(2, 1, 2, {1.0, 3.0, 0.0, 0.0});   // means 2, 0
    FeatureMapStack head(2, 1, 1, {5.0, 6.0});               // means 5, 6
    FeatureMapStack upper(2, 1, 1, {7.0, 8.0});
    FeatureMapStack lower(2, 1, 1, {9.0, 10.0});
    const auto glad = extract_glad(global, head, upper, lower);
    const DescriptorVector expect{2.0, 0.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
    EXPECT_EQ(glad.vector, expect);
}

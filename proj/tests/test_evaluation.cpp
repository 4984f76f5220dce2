#include <gtest/gtest.h>

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "reidx/core.hpp"
#include "reidx/error.hpp"
#include "reidx/evaluation.hpp"
#include "reidx/retrieval.hpp"
#include "reidx/tdc.hpp"

using namespace reidx;

namespace {

Gallery labeled_gallery(const std::vector<PersonLabel>& labels) {
    Gallery g(2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        g.add(i, labels[i], DescriptorVector{static_cast<double>(i), 0.0});
    }
    return g;
}

RankList list_of(const std::vector<SampleId>& ids) {
    RankList list;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        list.push_back({ids[i], static_cast<double>(i)});
    }
    return list;
}

// Slow textbook evaluation used to cross-check the implementation.
struct NaiveMetrics {
    double ap = 0.0;
    std::optional<std::size_t> first_rank;
    std::uint64_t objective = 0;
};

NaiveMetrics naive_metrics(const RankList& list, const Gallery& g,
                           const PersonLabel& label) {
    std::size_t total = 0;
    for (std::size_t row = 0; row < g.size(); ++row) {
        if (g.label(row) && *g.label(row) == label) ++total;
    }
    NaiveMetrics m;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto row = g.row_of(list[i].id);
        const bool rel = g.label(*row) && *g.label(*row) == label;
        if (!rel) continue;
        ++hits;
        m.ap += static_cast<double>(hits) / static_cast<double>(i + 1);
        m.objective += i + 1;
        if (!m.first_rank) m.first_rank = i + 1;
    }
    m.ap /= static_cast<double>(total);
    return m;
}

// Two identities far apart with probes at the centers. Retrieval is easy by
// construction, so metric plumbing failures are the only way to lose score.
struct SeparatedSetup {
    Gallery gallery{4};
    QuerySet queries;
};

SeparatedSetup separated_setup() {
    SeparatedSetup s;
    std::mt19937_64 rng(401);
    std::normal_distribution<double> noise(0.0, 0.05);
    SampleId id = 0;
    for (int p = 0; p < 2; ++p) {
        const double center = p == 0 ? -5.0 : 5.0;
        for (int k = 0; k < 8; ++k) {
            DescriptorVector v(4);
            for (auto& x : v) x = center + noise(rng);
            s.gallery.add(id++, std::to_string(p), v);
        }
        Query q;
        q.id = static_cast<SampleId>(p);
        q.label = std::to_string(p);
        q.descriptor.assign(4, center);
        s.queries.queries.push_back(std::move(q));
    }
    return s;
}

}  // namespace

TEST(AveragePrecision, PerfectRankingScoresOne) {
    const Gallery g = labeled_gallery({"a", "a", "b", "b"});
    const RankList list = list_of({0, 1, 2, 3});
    EXPECT_DOUBLE_EQ(average_precision(list, g, "a", 2), 1.0);
}

TEST(AveragePrecision, SingleRelevantAtRankTwo) {
    const Gallery g = labeled_gallery({"b", "a", "b"});
    const RankList list = list_of({0, 1, 2});
    EXPECT_DOUBLE_EQ(average_precision(list, g, "a", 1), 0.5);
}

TEST(AveragePrecision, RelevantAtRanksOneAndThree) {
    const Gallery g = labeled_gallery({"a", "b", "a", "b"});
    const RankList list = list_of({0, 1, 2, 3});
    EXPECT_DOUBLE_EQ(average_precision(list, g, "a", 2), 5.0 / 6.0);
}

TEST(AveragePrecision, MissingRelevantContributesZero) {
    // Two relevant exist, only one is in the returned list.
    const Gallery g = labeled_gallery({"a", "b", "a"});
    const RankList list = list_of({0, 1});
    EXPECT_DOUBLE_EQ(average_precision(list, g, "a", 2), 0.5);
}

TEST(AveragePrecision, ZeroRelevantThrows) {
    const Gallery g = labeled_gallery({"a", "b"});
    EXPECT_THROW(average_precision(list_of({0, 1}), g, "z", 0), NoRelevant);
}

TEST(AveragePrecision, ForeignIdInListThrows) {
    const Gallery g = labeled_gallery({"a", "b"});
    EXPECT_THROW(average_precision(list_of({0, 99}), g, "a", 1), InvalidArgument);
}

TEST(FirstCorrectRank, FindsEarliestRelevant) {
    const Gallery g = labeled_gallery({"b", "b", "a", "a"});
    EXPECT_EQ(first_correct_rank(list_of({0, 1, 2, 3}), g, "a"), 3u);
    EXPECT_EQ(first_correct_rank(list_of({2, 0, 1, 3}), g, "a"), 1u);
    EXPECT_EQ(first_correct_rank(list_of({0, 1}), g, "a"), std::nullopt);
}

TEST(CmcAtK, HandComputedFixture) {
    const std::vector<std::optional<std::size_t>> first_ranks{1, 3, std::nullopt};
    EXPECT_DOUBLE_EQ(cmc_at_k(std::span{first_ranks}, 1), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(cmc_at_k(std::span{first_ranks}, 2), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(cmc_at_k(std::span{first_ranks}, 3), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(cmc_at_k(std::span{first_ranks}, 100), 2.0 / 3.0);
}

TEST(CmcAtK, ZeroRankThrows) {
    const std::vector<std::optional<std::size_t>> first_ranks{1};
    EXPECT_THROW(cmc_at_k(std::span{first_ranks}, 0), InvalidArgument);
}

TEST(CmcAtK, EmptyInputIsZero) {
    const std::vector<std::optional<std::size_t>> none;
    EXPECT_DOUBLE_EQ(cmc_at_k(std::span{none}, 1), 0.0);
}

TEST(CmcAtK, ListOverloadChecksLengths) {
    const Gallery g = labeled_gallery({"a", "b"});
    const std::vector<RankList> lists{list_of({0, 1})};
    const std::vector<PersonLabel> labels{"a", "b"};
    EXPECT_THROW(cmc_at_k(lists, g, labels, 1), LengthMismatch);
}

TEST(ObjectiveValue, PerfectRankingSumsPrefix) {
    const Gallery g = labeled_gallery({"a", "a", "a", "b"});
    // Three relevant at ranks 1..3: 1+2+3.
    EXPECT_EQ(objective_value(list_of({0, 1, 2, 3}), g, "a"), 6u);
}

TEST(ObjectiveValue, SingleRelevantAtRankFive) {
    const Gallery g = labeled_gallery({"b", "b", "b", "b", "a"});
    EXPECT_EQ(objective_value(list_of({0, 1, 2, 3, 4}), g, "a"), 5u);
}

TEST(ObjectiveValue, UnreturnedRelevantAddsNothing) {
    const Gallery g = labeled_gallery({"a", "a"});
    EXPECT_EQ(objective_value(list_of({0}), g, "a"), 1u);
}

TEST(Metrics, MatchNaiveOracleOnRandomInstances) {
    std::mt19937_64 rng(409);
    std::uniform_int_distribution<std::size_t> size_dist(5, 40);
    const std::vector<PersonLabel> alphabet{"a", "b", "c"};
    int checked = 0;
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t n = size_dist(rng);
        std::vector<PersonLabel> labels(n);
        for (auto& l : labels) l = alphabet[rng() % alphabet.size()];
        const Gallery g = labeled_gallery(labels);
        const PersonLabel query_label = alphabet[rng() % alphabet.size()];
        const std::size_t total = count_relevant(g, query_label);
        if (total == 0) continue;

        std::vector<SampleId> ids = g.ids();
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(1 + rng() % ids.size());
        const RankList list = list_of(ids);

        const NaiveMetrics want = naive_metrics(list, g, query_label);
        EXPECT_NEAR(average_precision(list, g, query_label, total), want.ap, 1e-9);
        EXPECT_EQ(first_correct_rank(list, g, query_label), want.first_rank);
        EXPECT_EQ(objective_value(list, g, query_label), want.objective);
        ++checked;
    }
    EXPECT_GE(checked, 100);
}

TEST(Evaluate, SeparatedIdentitiesScorePerfectly) {
    const SeparatedSetup s = separated_setup();
    const EvalReport report = evaluate_brute_force(s.queries, s.gallery);
    EXPECT_DOUBLE_EQ(report.map, 1.0);
    EXPECT_EQ(report.evaluated, 2u);
    EXPECT_EQ(report.skipped, 0u);
    ASSERT_FALSE(report.cmc.empty());
    EXPECT_DOUBLE_EQ(report.cmc.front().second, 1.0);
    // 8 relevant per query, all ranked first: objective is 1+2+...+8.
    for (auto v : report.objective_values) EXPECT_EQ(v, 36u);
}

TEST(Evaluate, FullBudgetFullRankMatchesBruteForce) {
    const SeparatedSetup s = separated_setup();
    std::mt19937_64 rng(419);
    std::normal_distribution<double> noise(0.0, 2.0);
    QuerySet queries = s.queries;
    for (int extra = 0; extra < 6; ++extra) {
        Query q;
        q.id = 100 + static_cast<SampleId>(extra);
        q.label = std::to_string(extra % 2);
        q.descriptor.resize(4);
        for (auto& v : q.descriptor) v = noise(rng);
        queries.queries.push_back(std::move(q));
    }

    const GroupIndex index = build_index(s.gallery, 0.0, 4);
    EvalOptions options;
    options.top_k_groups = index.group_count();
    const EvalReport coarse = evaluate(queries, index, s.gallery, options);
    const EvalReport brute = evaluate_brute_force(queries, s.gallery, options);

    EXPECT_EQ(coarse.evaluated, brute.evaluated);
    EXPECT_EQ(coarse.skipped, brute.skipped);
    EXPECT_EQ(coarse.per_query_ap, brute.per_query_ap);
    EXPECT_EQ(coarse.objective_values, brute.objective_values);
    EXPECT_EQ(coarse.map, brute.map);
    ASSERT_EQ(coarse.cmc.size(), brute.cmc.size());
    for (std::size_t i = 0; i < coarse.cmc.size(); ++i) {
        EXPECT_EQ(coarse.cmc[i].first, brute.cmc[i].first);
        EXPECT_EQ(coarse.cmc[i].second, brute.cmc[i].second);
    }
}

TEST(Evaluate, UnmatchedLabelsAreSkippedAndCounted) {
    SeparatedSetup s = separated_setup();
    Query orphan;
    orphan.id = 50;
    orphan.label = "nobody";
    orphan.descriptor.assign(4, 0.0);
    s.queries.queries.push_back(orphan);

    const EvalReport report = evaluate_brute_force(s.queries, s.gallery);
    EXPECT_EQ(report.evaluated, 2u);
    EXPECT_EQ(report.skipped, 1u);
    EXPECT_EQ(report.per_query_ap.size(), 2u);
    EXPECT_EQ(report.objective_values.size(), 2u);
}

TEST(Evaluate, CmcCurveIsNonDecreasing) {
    std::mt19937_64 rng(421);
    std::normal_distribution<double> noise(0.0, 1.5);
    Gallery g(3);
    QuerySet queries;
    SampleId id = 0;
    for (int p = 0; p < 6; ++p) {
        for (int k = 0; k < 4; ++k) {
            DescriptorVector v(3);
            for (auto& x : v) x = static_cast<double>(p) + noise(rng);
            g.add(id++, std::to_string(p), v);
        }
        Query q;
        q.id = static_cast<SampleId>(p);
        q.label = std::to_string(p);
        q.descriptor.resize(3);
        for (auto& x : q.descriptor) x = static_cast<double>(p) + noise(rng);
        queries.queries.push_back(std::move(q));
    }
    EvalOptions options;
    options.cmc_ranks = {1, 2, 3, 5, 8, 13, 21};
    const EvalReport report = evaluate_brute_force(queries, g, options);
    ASSERT_EQ(report.cmc.size(), options.cmc_ranks.size());
    for (std::size_t i = 1; i < report.cmc.size(); ++i) {
        EXPECT_LT(report.cmc[i - 1].first, report.cmc[i].first);
        EXPECT_GE(report.cmc[i].second, report.cmc[i - 1].second);
    }
}

TEST(Evaluate, MapIsMeanOfPerQueryAp) {
    const SeparatedSetup s = separated_setup();
    const GroupIndex index = build_index(s.gallery, 1.0, 2);
    const EvalReport report = evaluate(s.queries, index, s.gallery);
    ASSERT_EQ(report.per_query_ap.size(), report.evaluated);
    double mean = 0.0;
    for (double ap : report.per_query_ap) mean += ap;
    mean /= static_cast<double>(report.evaluated);
    EXPECT_DOUBLE_EQ(report.map, mean);
}

TEST(Evaluate, RequestedCmcRanksAreSortedAndDeduplicated) {
    const SeparatedSetup s = separated_setup();
    EvalOptions options;
    options.cmc_ranks = {10, 1, 5, 5, 1};
    const EvalReport report = evaluate_brute_force(s.queries, s.gallery, options);
    ASSERT_EQ(report.cmc.size(), 3u);
    EXPECT_EQ(report.cmc[0].first, 1u);
    EXPECT_EQ(report.cmc[1].first, 5u);
    EXPECT_EQ(report.cmc[2].first, 10u);
}

TEST(Evaluate, TimingMeansAreNonNegative) {
    const SeparatedSetup s = separated_setup();
    const GroupIndex index = build_index(s.gallery, 1.0, 2);
    const EvalReport report = evaluate(s.queries, index, s.gallery);
    EXPECT_GE(report.mean_projection_ms, 0.0);
    EXPECT_GE(report.mean_coarse_ms, 0.0);
    EXPECT_GE(report.mean_fine_ms, 0.0);
    EXPECT_DOUBLE_EQ(report.mean_total_ms(), report.mean_projection_ms +
                                                 report.mean_coarse_ms +
                                                 report.mean_fine_ms);
}

TEST(Evaluate, EmptyOrUnlabeledQueriesThrow) {
    const SeparatedSetup s = separated_setup();
    QuerySet empty;
    EXPECT_THROW(evaluate_brute_force(empty, s.gallery), InvalidArgument);

    QuerySet unlabeled = s.queries;
    unlabeled.queries.front().label.reset();
    EXPECT_THROW(evaluate_brute_force(unlabeled, s.gallery), InvalidArgument);
}

#include "giht/groups.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace giht;

namespace {

GroupLayout three_groups() { return GroupLayout::create(6, {{0, 1, 2}, {2, 3}, {4, 5}}); }

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

} // namespace

TEST(GroupLayout, DisjointCover) {
    const auto layout = validate_layout(4, {{0, 1}, {2, 3}});
    EXPECT_TRUE(layout.covers_ambient());
    EXPECT_TRUE(layout.disjoint());
    EXPECT_EQ(layout.size(), 2);
    EXPECT_EQ(layout.max_group_size(), 2);
}

TEST(GroupLayout, PartialCover) {
    const auto layout = validate_layout(4, {{0, 1}});
    EXPECT_FALSE(layout.covers_ambient());
}

TEST(GroupLayout, RejectsOutOfRangeIndex) {
    EXPECT_THROW(validate_layout(4, {{0, 5}}), InvalidArgument);
    EXPECT_THROW(validate_layout(4, {{-1}}), InvalidArgument);
}

TEST(GroupLayout, RejectsEmptyGroupsAndEmptyList) {
    EXPECT_THROW(validate_layout(4, {}), InvalidArgument);
    EXPECT_THROW(validate_layout(4, {{0}, {}}), InvalidArgument);
    EXPECT_THROW(validate_layout(0, {{0}}), InvalidArgument);
}

TEST(GroupLayout, NormalizesGroupsAndKeepsOrder) {
    const auto layout = validate_layout(5, {{3, 1, 1}, {0}});
    ASSERT_EQ(layout.group(0).size(), 2u);
    EXPECT_EQ(layout.group(0)[0], 1);
    EXPECT_EQ(layout.group(0)[1], 3);
    EXPECT_EQ(layout.group(1)[0], 0);
    EXPECT_TRUE(layout.contains(0, 3));
    EXPECT_FALSE(layout.contains(0, 2));
    EXPECT_FALSE(layout.disjoint() && layout.covers_ambient());
}

TEST(GroupLayout, OverlapIsNotDisjoint) {
    const auto layout = three_groups();
    EXPECT_FALSE(layout.disjoint());
    EXPECT_TRUE(layout.covers_ambient());
    const std::vector<Index> ids{0, 1};
    EXPECT_EQ(layout.union_of(ids), (std::vector<Index>{0, 1, 2, 3}));
}

TEST(GroupSupport, CoordsAreTheUnion) {
    const auto layout = three_groups();
    const auto s = GroupSupport::from_groups(layout, {2, 0, 2});
    EXPECT_EQ(s.group_ids, (std::vector<Index>{0, 2}));
    EXPECT_EQ(s.coords, (std::vector<Index>{0, 1, 2, 4, 5}));
    EXPECT_EQ(s.size(), 2);
    EXPECT_THROW(GroupSupport::from_groups(layout, {3}), InvalidArgument);
}

TEST(GroupL0, ZeroVector) { EXPECT_EQ(group_l0_bruteforce(Vector::Zero(6), three_groups()), 0); }

TEST(GroupL0, SingleSharedCoordinate) {
    EXPECT_EQ(group_l0_bruteforce(vec({0, 0, 1, 0, 0, 0}), three_groups()), 1);
}

TEST(GroupL0, NeedsAllThreeGroups) {
    EXPECT_EQ(group_l0_bruteforce(vec({1, 0, 0, 1, 1, 0}), three_groups()), 3);
}

TEST(GroupL0, UncoverableSupportIsInfeasible) {
    const auto layout = validate_layout(4, {{0, 1}});
    EXPECT_THROW(group_l0_bruteforce(vec({0, 0, 1, 0}), layout), InfeasibleError);
}

TEST(GroupL0, GuardRejectsLargeM) {
    std::vector<std::vector<Index>> groups;
    for (Index i = 0; i < 30; ++i) groups.push_back({i});
    const auto layout = validate_layout(30, groups);
    EXPECT_THROW(group_l0_bruteforce(Vector::Ones(30), layout), GuardError);
    EXPECT_EQ(group_l0_bruteforce(Vector::Ones(30), layout, 30), 30);
}

TEST(GroupL0, MatchesOracleAndBoundsExplicitSupports) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Index p = oracle::uniform_int(2, 16, gen);
        const Index M = oracle::uniform_int(1, 8, gen);
        const auto groups = oracle::random_groups(p, M, gen);
        const auto layout = validate_layout(p, groups);
        // a vector supported on a random explicit group-support
        std::vector<Index> ids;
        for (Index id = 0; id < M; ++id)
            if (oracle::uniform_int(0, 2, gen) == 0) ids.push_back(id);
        const auto support = GroupSupport::from_groups(layout, ids);
        Vector w = Vector::Zero(p);
        for (Index c : support.coords) w[c] = oracle::uniform_int(0, 3, gen) == 0 ? 0.0 : 1.0;
        const Index l0 = group_l0_bruteforce(w, layout);
        EXPECT_EQ(l0, oracle::group_l0(groups, w)) << "trial " << trial;
        EXPECT_LE(l0, support.size());
    }
}

TEST(MaxSupport, DisjointEqualGroups) {
    std::vector<std::vector<Index>> groups;
    for (Index i = 0; i < 5; ++i) groups.push_back({3 * i, 3 * i + 1, 3 * i + 2});
    const auto layout = validate_layout(15, groups);
    for (Index k = 1; k <= 5; ++k) {
        const auto s = max_support_size(layout, k);
        EXPECT_EQ(s.upper_bound, 3 * k);
        EXPECT_EQ(s.greedy_estimate, 3 * k);
    }
}

TEST(MaxSupport, ThreeGroupExample) {
    const auto s = max_support_size(three_groups(), 2);
    EXPECT_EQ(s.greedy_estimate, 5);
    EXPECT_EQ(s.upper_bound, 5);
}

TEST(MaxSupport, FullBudgetCoversUnion) {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Index p = oracle::uniform_int(2, 20, gen);
        const Index M = oracle::uniform_int(1, 6, gen);
        const auto groups = oracle::random_groups(p, M, gen, false);
        const auto layout = validate_layout(p, groups);
        std::vector<Index> all(static_cast<std::size_t>(M));
        for (Index i = 0; i < M; ++i) all[static_cast<std::size_t>(i)] = i;
        const auto s = max_support_size(layout, M);
        EXPECT_EQ(s.greedy_estimate, static_cast<Index>(oracle::union_of(groups, all).size()));
        for (Index k = 1; k <= M; ++k) {
            const auto e = max_support_size(layout, k);
            EXPECT_LE(e.greedy_estimate, e.upper_bound);
            EXPECT_LE(e.upper_bound, k * layout.max_group_size());
        }
    }
}

TEST(MaxSupport, RejectsBadK) {
    EXPECT_THROW(max_support_size(three_groups(), 0), InvalidArgument);
    EXPECT_THROW(max_support_size(three_groups(), 4), InvalidArgument);
}

TEST(CoverageEnergy, Examples) {
    const auto layout = three_groups();
    const Vector g = vec({3, 0, 0, 4, 1, 1});
    EXPECT_EQ(coverage_energy(std::vector<Index>{}, g, layout), 0.0);
    EXPECT_EQ(coverage_energy(std::vector<Index>{0, 1}, g, layout), 25.0);
    EXPECT_EQ(coverage_energy(std::vector<Index>{2}, g, layout), 2.0);
    EXPECT_THROW(coverage_energy(std::vector<Index>{3}, g, layout), InvalidArgument);
}

// Diminishing returns and monotonicity over random (S, T, i) with S within T and i outside T.
TEST(CoverageEnergy, SubmodularAndMonotone) {
    std::mt19937_64 gen(2024);
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const Index p = oracle::uniform_int(1, 20, gen);
        const Index M = oracle::uniform_int(2, 8, gen);
        const auto groups = oracle::random_groups(p, M, gen, false);
        const auto layout = validate_layout(p, groups);
        const Vector g = oracle::gaussian(p, gen);
        std::vector<Index> S, T;
        const Index i = oracle::uniform_int(0, M - 1, gen);
        for (Index id = 0; id < M; ++id) {
            if (id == i) continue;
            const Index r = oracle::uniform_int(0, 2, gen);
            if (r >= 1) T.push_back(id);
            if (r == 2) S.push_back(id);
        }
        auto with = [&](std::vector<Index> s) {
            s.push_back(i);
            return s;
        };
        const double zS = coverage_energy(S, g, layout), zT = coverage_energy(T, g, layout);
        const double gainS = coverage_energy(with(S), g, layout) - zS;
        const double gainT = coverage_energy(with(T), g, layout) - zT;
        EXPECT_GE(gainS - gainT, -1e-12) << "trial " << trial;
        EXPECT_LE(zS, zT + 1e-12) << "trial " << trial;
        EXPECT_NEAR(zT, oracle::energy(groups, T, g), 1e-12);
        ++checked;
    }
    EXPECT_EQ(checked, 500);
}

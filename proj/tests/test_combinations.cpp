#include <gtest/gtest.h>

#include <set>

#include "edgecache/combinations.hpp"
#include "edgecache/rng.hpp"

using namespace edgecache;

TEST(Binomial, SmallValues) {
    EXPECT_EQ(binomial(5, 2), 10U);
    EXPECT_EQ(binomial(20, 5), 15504U);
    EXPECT_EQ(binomial(4, 0), 1U);
    EXPECT_EQ(binomial(3, 4), 0U);
    EXPECT_EQ(binomial(3, -1), 0U);
}

TEST(Binomial, PascalRule) {
    for (long long n = 1; n <= 30; ++n) {
        for (long long k = 1; k <= n; ++k) EXPECT_EQ(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
    }
}

TEST(Binomial, OverflowThrows) { EXPECT_THROW(binomial(200, 100), std::overflow_error); }

TEST(Combinations, CountFiveChooseTwo) { EXPECT_EQ(enumerate_combinations(5, 2).size(), 10U); }

TEST(Combinations, ThreeChooseTwoListing) {
    const auto all = enumerate_combinations(3, 2);
    ASSERT_EQ(all.size(), 3U);
    EXPECT_EQ(all[0].contents, (std::vector<ContentId>{0, 1}));
    EXPECT_EQ(all[1].contents, (std::vector<ContentId>{0, 2}));
    EXPECT_EQ(all[2].contents, (std::vector<ContentId>{1, 2}));
}

TEST(Combinations, TenChooseThreeMembership) {
    const CombinationSpace space(10, 3);
    ASSERT_EQ(space.size(), 120U);
    for (ContentId n = 0; n < 10; ++n) {
        std::size_t count = 0;
        for (const auto& c : space.all()) count += c.contains(n);
        EXPECT_EQ(count, 36U);
        EXPECT_EQ(space.containing(n).size(), 36U);
    }
}

TEST(Combinations, KGreaterThanNThrows) {
    EXPECT_THROW(CombinationSpace(3, 4), std::invalid_argument);
    EXPECT_THROW(CombinationSpace(3, 0), std::invalid_argument);
}

TEST(Combinations, MakeCombinationRejectsDuplicates) {
    EXPECT_THROW(make_combination({1, 1}), std::invalid_argument);
    EXPECT_EQ(make_combination({3, 1}).contents, (std::vector<ContentId>{1, 3}));
}

// Lexicographic, duplicate-free, membership count C(N-1,K-1), index_of inverts operator[].
TEST(CombinationsProperty, EnumerationInvariants) {
    for (std::size_t n = 1; n <= 9; ++n) {
        for (std::size_t k = 1; k <= n; ++k) {
            const CombinationSpace space(n, k);
            ASSERT_EQ(space.size(), binomial(static_cast<long long>(n), static_cast<long long>(k)));
            std::set<std::vector<ContentId>> seen;
            for (ArmIndex c = 0; c < space.size(); ++c) {
                const auto& combo = space[c];
                ASSERT_EQ(combo.size(), k);
                ASSERT_TRUE(std::is_sorted(combo.contents.begin(), combo.contents.end()));
                if (c > 0) {
                    ASSERT_LT(space[c - 1], combo);
                }
                seen.insert(combo.contents);
                ASSERT_EQ(space.index_of(combo), c);
            }
            EXPECT_EQ(seen.size(), space.size());
            const auto per_content = binomial(static_cast<long long>(n) - 1, static_cast<long long>(k) - 1);
            for (ContentId i = 0; i < n; ++i) EXPECT_EQ(space.containing(i).size(), per_content);
        }
    }
}

TEST(Rng, StreamSeedsDiffer) {
    EXPECT_NE(stream_seed(1, "demand", 0), stream_seed(1, "credit", 0));
    EXPECT_NE(stream_seed(1, "demand", 0), stream_seed(1, "demand", 1));
    EXPECT_EQ(stream_seed(7, "x", 3), stream_seed(7, "x", 3));
}

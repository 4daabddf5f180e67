#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mrsq/metrics.hpp"

using namespace mrsq;

TEST(Smape, Examples)
{
    EXPECT_EQ(smape({0.3, 2.0}, {0.3, 2.0}), 0.0);
    EXPECT_DOUBLE_EQ(smape({1.0}, {0.0}), 100.0);
    EXPECT_DOUBLE_EQ(smape({1.0, 1.0}, {0.5, 1.5}), 25.0);
}

TEST(Smape, ZeroDenominator)
{
    EXPECT_EQ(smape({0.0, 0.0}, {0.0, 0.0}), 0.0);
    EXPECT_EQ(smape({}, {}), 0.0);
}

TEST(Smape, Errors)
{
    EXPECT_THROW(smape({1.0}, {-0.1}), InvalidArgument);
    EXPECT_THROW(smape({-1.0}, {0.1}), InvalidArgument);
    EXPECT_THROW(smape({1.0, 2.0}, {1.0}), InvalidArgument);
}

TEST(Smape, PropertiesOverRandomVectors)
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0), scale(1e-3, 1e3);
    std::uniform_int_distribution<int> len(1, 20);
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<double> a(static_cast<std::size_t>(len(rng))), b(a.size());
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        const double s = smape(a, b);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 100.0);
        EXPECT_EQ(s, smape(b, a));
        const double c = scale(rng);
        auto ca = a, cb = b;
        for (auto& v : ca) v *= c;
        for (auto& v : cb) v *= c;
        EXPECT_NEAR(smape(ca, cb), s, 1e-10 * std::max(1.0, s));
    }
}

TEST(RankMethods, StrictWinnerEverywhere)
{
    std::vector<std::vector<double>> table(21, {1.0, 2.0});
    const auto r = rank_methods(table);
    EXPECT_EQ(r.wins, (std::vector<int>{21, 0}));
    EXPECT_DOUBLE_EQ(r.avg_rank[0], 1.0);
    EXPECT_DOUBLE_EQ(r.avg_rank[1], 2.0);
}

TEST(RankMethods, TiesShareMeanRank)
{
    std::vector<std::vector<double>> table(5, {3.0, 3.0});
    const auto r = rank_methods(table);
    EXPECT_EQ(r.wins, (std::vector<int>{0, 0}));
    EXPECT_DOUBLE_EQ(r.avg_rank[0], 1.5);
    EXPECT_DOUBLE_EQ(r.avg_rank[1], 1.5);
}

TEST(RankMethods, ThreeMethods)
{
    const auto r = rank_methods({{1.0, 2.0, 3.0}});
    EXPECT_EQ(r.ranks[0], (std::vector<double>{1.0, 2.0, 3.0}));
    EXPECT_EQ(r.wins, (std::vector<int>{1, 0, 0}));
}

TEST(RankMethods, RelabelingAndPermutationProperty)
{
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<int> level(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<double>> table(7, std::vector<double>(4));
        for (auto& row : table) {
            for (auto& v : row) v = level(rng);
        }
        const auto r = rank_methods(table);
        int total_wins = 0;
        for (int w : r.wins) total_wins += w;
        EXPECT_LE(total_wins, 7);
        for (const auto& ranks : r.ranks) {
            double sum = 0.0;
            for (double x : ranks) sum += x;
            EXPECT_DOUBLE_EQ(sum, 1 + 2 + 3 + 4);
        }
        std::vector<std::size_t> perm{2, 0, 3, 1};
        auto permuted = table;
        for (std::size_t o = 0; o < table.size(); ++o) {
            for (std::size_t m = 0; m < 4; ++m) permuted[o][m] = table[o][perm[m]];
        }
        const auto rp = rank_methods(permuted);
        for (std::size_t m = 0; m < 4; ++m) {
            EXPECT_EQ(rp.wins[m], r.wins[perm[m]]);
            EXPECT_DOUBLE_EQ(rp.avg_rank[m], r.avg_rank[perm[m]]);
        }
    }
}

TEST(RankMethods, Errors)
{
    EXPECT_THROW(rank_methods({}), InvalidArgument);
    EXPECT_THROW(rank_methods({{1.0}}), InvalidArgument);
    EXPECT_THROW(rank_methods({{1.0, 2.0}, {1.0}}), InvalidArgument);
}

TEST(Report, CsvLayout)
{
    const std::vector<std::vector<double>> truth{{1.0, 0.5}, {1.0, 0.5}};
    const std::vector<std::vector<std::vector<double>>> est{
        {{1.0, 0.5}, {1.0, 0.5}},
        {{0.5, 0.5}, {1.5, 0.0}},
    };
    const auto rep = make_report({"A", "B"}, {"m1", "m2"}, truth, est);
    EXPECT_EQ(to_csv(rep), "metabolite,m1,m2\n"
                           "A,0.0000,25.0000\n"
                           "B,0.0000,33.3333\n"
                           "wins,2,0\n"
                           "avg_rank,1.0000,2.0000\n");
}

TEST(Report, CsvRoundTrip)
{
    const std::vector<std::vector<double>> truth{{1.0, 0.5}, {1.0, 0.5}};
    const std::vector<std::vector<std::vector<double>>> est{{{1.0, 0.5}, {1.0, 0.5}}, {{0.5, 0.5}, {1.5, 0.0}}};
    const auto rep = make_report({"A", "B"}, {"m1", "m2"}, truth, est);
    const auto back = parse_report_csv(to_csv(rep));
    EXPECT_EQ(back.outputs, rep.outputs);
    EXPECT_EQ(back.methods, rep.methods);
    EXPECT_EQ(back.wins, rep.wins);
    EXPECT_NEAR(back.smape[1][1], rep.smape[1][1], 1e-4);
    EXPECT_THROW(parse_report_csv("metabolite,a,b\nA,1\n"), FormatError);
    EXPECT_THROW(parse_report_csv(""), FormatError);
}

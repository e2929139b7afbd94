#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "lobnet/fitnessmodel.hpp"
#include "lobnet/matchengine.hpp"
#include "fixtures.hpp"

using namespace lobnet;

namespace {

std::vector<FitnessAgent> pool(std::initializer_list<std::pair<const char*, Shares>> xs) {
    std::vector<FitnessAgent> out;
    for (const auto& [id, v] : xs) out.push_back({id, v});
    return out;
}

FitnessPools random_pools(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    FitnessPools p;
    for (std::size_t i = 0; i < n; ++i) {
        p.sellers.push_back({"s" + std::to_string(i), 100 * static_cast<Shares>(1 + rng.below(30))});
        p.buyers.push_back({"b" + std::to_string(i), 100 * static_cast<Shares>(1 + rng.below(30))});
    }
    // Balance the totals on one buyer.
    Shares ds = 0, db = 0;
    for (const auto& a : p.sellers) ds += a.remaining;
    for (const auto& a : p.buyers) db += a.remaining;
    if (ds > db) p.buyers.push_back({"bx", ds - db});
    if (db > ds) p.sellers.push_back({"sx", db - ds});
    return p;
}

EnsembleConfig small_ensemble(int replicas, unsigned jobs) {
    EnsembleConfig c;
    c.replicas = replicas;
    c.fit.bootstrap_replicas = 100;
    c.rng_seed = 42;
    c.jobs = jobs;
    return c;
}

}  // namespace

TEST(FitnessModel, ForcedSingleMatch) {
    Rng rng(1);
    const auto s = pool({{"A", 100}}), b = pool({{"B", 100}});
    const auto m = simulate_matches(s, b, rng);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].size, 100);
    const auto net = simulate_day(s, b, rng);
    EXPECT_EQ(net.edge_count(), 1u);
    EXPECT_EQ(net.weight("A", "B"), 100);
}

TEST(FitnessModel, SplitSellerAnyOrder) {
    const auto s = pool({{"A", 500}}), b = pool({{"B", 300}, {"C", 200}});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto net = simulate_day(s, b, rng);
        EXPECT_EQ(net.weight("A", "B"), 300);
        EXPECT_EQ(net.weight("A", "C"), 200);
        EXPECT_EQ(degrees(net)[*net.find("A")].k_ask, 2u);
    }
}

TEST(FitnessModel, ConservationAndBounds) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = random_pools(seed, 300);
        Rng rng(seed);
        const auto matches = simulate_matches(p.sellers, p.buyers, rng);
        std::vector<Shares> sold(p.sellers.size()), bought(p.buyers.size());
        std::vector<std::size_t> seller_matches(p.sellers.size());
        for (const auto& m : matches) {
            EXPECT_GT(m.size, 0);
            sold[m.seller] += m.size;
            bought[m.buyer] += m.size;
            ++seller_matches[m.seller];
        }
        for (std::size_t i = 0; i < p.sellers.size(); ++i) {
            EXPECT_EQ(sold[i], p.sellers[i].remaining);
            EXPECT_LE(seller_matches[i], static_cast<std::size_t>((p.sellers[i].remaining + 99) / 100));
        }
        for (std::size_t i = 0; i < p.buyers.size(); ++i) EXPECT_EQ(bought[i], p.buyers[i].remaining);

        Rng rng2(seed);
        const auto net = simulate_day(p.sellers, p.buyers, rng2);
        Shares total = 0;
        for (const auto& a : p.sellers) total += a.remaining;
        EXPECT_EQ(net.total_volume(), total);
        const auto recs = degrees(net);
        for (std::size_t i = 0; i < p.sellers.size(); ++i)
            EXPECT_LE(recs[*net.find(p.sellers[i].trader_id)].k_ask, seller_matches[i]);
    }
}

TEST(FitnessModel, UnbalancedPoolsStopEarly) {
    Rng rng(2);
    const auto s = pool({{"A", 1000}}), b = pool({{"B", 300}});
    const auto net = simulate_day(s, b, rng);
    EXPECT_EQ(net.total_volume(), 300);
}

TEST(FitnessModel, BadPools) {
    Rng rng(0);
    const auto empty = pool({});
    const auto one = pool({{"A", 100}});
    EXPECT_THROW(simulate_matches(empty, one, rng), std::invalid_argument);
    const auto zero = pool({{"Z", 0}});
    EXPECT_THROW(simulate_matches(zero, one, rng), std::invalid_argument);
}

TEST(FitnessModel, PoolsFromTradesBalance) {
    const auto day = fixtures::five_ask_day();
    const auto p = pools_from_trades(run_day(day).trades);
    ASSERT_EQ(p.sellers.size(), 3u);
    ASSERT_EQ(p.buyers.size(), 1u);
    EXPECT_EQ(p.buyers[0].remaining, 500);
    const auto sub = pools_from_submissions(day);
    EXPECT_EQ(sub.sellers.size(), 5u);
}

TEST(FitnessModel, SingleReplicaReproducible) {
    EnsembleInput in{"20030102", random_pools(5, 400), std::nullopt};
    const auto a = run_ensemble(in, small_ensemble(1, 1));
    const auto b = run_ensemble(in, small_ensemble(1, 1));
    for (auto k : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total}) {
        EXPECT_EQ(a.get(k).p_model, b.get(k).p_model);
        EXPECT_EQ(a.get(k).gamma_model_mean, b.get(k).gamma_model_mean);
        EXPECT_EQ(a.get(k).fitted, b.get(k).fitted);
    }
}

TEST(FitnessModel, ParallelEqualsSerial) {
    EnsembleInput in{"20030102", random_pools(6, 400), std::nullopt};
    const auto a = run_ensemble(in, small_ensemble(8, 1));
    const auto b = run_ensemble(in, small_ensemble(8, 4));
    for (auto k : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total}) {
        EXPECT_EQ(a.get(k).p_model, b.get(k).p_model);
        EXPECT_EQ(a.get(k).gamma_model_mean, b.get(k).gamma_model_mean);
        EXPECT_EQ(a.get(k).gamma_model_std, b.get(k).gamma_model_std);
        EXPECT_GE(a.get(k).p_model, 0.0);
        EXPECT_LE(a.get(k).p_model, 1.0);
    }
    EXPECT_THROW(run_ensemble(in, small_ensemble(0, 1)), ConfigError);
}

TEST(FitnessModel, CompareExponentsTiesCountHalf) {
    std::vector<EnsembleReport> reps(4);
    for (std::size_t i = 0; i < reps.size(); ++i) {
        auto& e = reps[i].total;
        reps[i].date = "2003010" + std::to_string(i + 1);
        e.fitted = 10;
        e.p_model = 1.0;
        e.gamma_model_mean = 1.5 + 0.1 * static_cast<double>(i);
        e.gamma_real = e.gamma_model_mean;
        e.real_passes = true;
    }
    const auto c = compare_exponents(reps, DegreeKind::Total);
    EXPECT_EQ(c.rows.size(), 4u);
    ASSERT_TRUE(c.fraction_model_above);
    EXPECT_DOUBLE_EQ(*c.fraction_model_above, 0.5);

    reps[0].total.gamma_model_mean += 0.2;  // above
    reps[1].total.real_passes = false;      // dropped
    const auto c2 = compare_exponents(reps, DegreeKind::Total);
    EXPECT_EQ(c2.rows.size(), 3u);
    EXPECT_DOUBLE_EQ(*c2.fraction_model_above, 2.0 / 3.0);
}

TEST(FitnessModel, CompareExponentsEmpty) {
    const auto c = compare_exponents(std::span<const EnsembleReport>{}, DegreeKind::Ask);
    EXPECT_TRUE(c.rows.empty());
    EXPECT_FALSE(c.fraction_model_above);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lobnet/plfit.hpp"

using namespace lobnet;

namespace {

FitConfig quick(Discreteness d, std::uint64_t seed = 1) {
    FitConfig c;
    c.discreteness = d;
    c.bootstrap_replicas = 100;
    c.rng_seed = seed;
    return c;
}

// Sup-norm by direct evaluation: every sample point for continuous data,
// every integer in [xmin, max] for discrete data.
double brute_ks(std::vector<double> tail, double xmin, double alpha, Discreteness d) {
    std::sort(tail.begin(), tail.end());
    const double n = static_cast<double>(tail.size());
    auto count_le = [&](double x) {
        double c = 0;
        for (const double t : tail) c += t <= x;
        return c;
    };
    double D = 0;
    if (d == Discreteness::Continuous) {
        for (const double x : tail) {
            const double F = 1.0 - std::pow(x / xmin, 1.0 - alpha);
            double below = 0;
            for (const double t : tail) below += t < x;
            D = std::max({D, std::abs(count_le(x) / n - F), std::abs(below / n - F)});
        }
        return D;
    }
    const double z0 = hurwitz_zeta(alpha, xmin);
    for (double x = xmin; x <= tail.back(); x += 1.0) {
        const double F = 1.0 - hurwitz_zeta(alpha, x + 1.0) / z0;
        D = std::max(D, std::abs(count_le(x) / n - F));
    }
    return D;
}

}  // namespace

TEST(PlFit, HurwitzZetaKnownValues) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    EXPECT_NEAR(hurwitz_zeta(2.0, 1.0), pi2 / 6.0, 1e-12);
    EXPECT_NEAR(hurwitz_zeta(2.0, 2.0), pi2 / 6.0 - 1.0, 1e-12);
    EXPECT_NEAR(hurwitz_zeta(2.0, 0.5), pi2 / 2.0, 1e-11);
    EXPECT_NEAR(hurwitz_zeta(3.0, 1.0), 1.2020569031595942, 1e-12);
    EXPECT_NEAR(hurwitz_zeta(4.0, 1.0), pi2 * pi2 / 90.0, 1e-12);
    // zeta(s, q) - zeta(s, q + 1) = q^-s
    for (const double s : {1.1, 1.7, 2.5, 5.0})
        for (const double q : {1.0, 3.0, 47.0, 2749.0})
            EXPECT_NEAR(hurwitz_zeta(s, q) - hurwitz_zeta(s, q + 1), std::pow(q, -s), 1e-10 * hurwitz_zeta(s, q));
    EXPECT_THROW(hurwitz_zeta(1.0, 1.0), std::domain_error);
}

TEST(PlFit, ContinuousClosedForm) {
    const double e = std::numbers::e;
    const std::vector<double> xs{1.0, e, e * e};  // sum ln = 3, n = 3
    EXPECT_DOUBLE_EQ(mle_alpha(xs, 1.0, Discreteness::Continuous, 2), 2.0);
}

TEST(PlFit, InverseTransformClosedForm) {
    EXPECT_DOUBLE_EQ(powerlaw_inverse_cdf(0.75, 2.0, 3.0), 12.0);
    Rng rng(0);
    EXPECT_TRUE(rand_powerlaw(2.5, 1.0, 0, Discreteness::Continuous, rng).empty());
    EXPECT_THROW(rand_powerlaw(1.0, 1.0, 5, Discreteness::Continuous, rng), std::invalid_argument);
}

TEST(PlFit, LogMomentOfSampler) {
    Rng rng(3);
    const auto xs = rand_powerlaw(2.5, 2.0, 1'000'000, Discreteness::Continuous, rng);
    double m = 0;
    for (const double x : xs) m += std::log(x / 2.0);
    EXPECT_NEAR(m / static_cast<double>(xs.size()), 1.0 / 1.5, 0.01);
}

TEST(PlFit, DiscreteSamplerMatchesPmf) {
    Rng rng(5);
    const std::size_t n = 200'000;
    const auto xs = rand_powerlaw(2.7, 1.0, n, Discreteness::Discrete, rng);
    const double z = hurwitz_zeta(2.7, 1.0);
    for (int k = 1; k <= 4; ++k) {
        const double p = std::pow(k, -2.7) / z;
        const double got = static_cast<double>(std::count(xs.begin(), xs.end(), k)) / n;
        EXPECT_NEAR(got, p, 5 * std::sqrt(p * (1 - p) / n)) << k;
    }
}

TEST(PlFit, RecoversContinuousAlpha) {
    Rng rng(7);
    const auto xs = rand_powerlaw(2.5, 1.0, 100'000, Discreteness::Continuous, rng);
    const double a = mle_alpha(xs, 1.0, Discreteness::Continuous);
    EXPECT_GE(a, 2.45);
    EXPECT_LE(a, 2.55);
}

TEST(PlFit, RecoversDiscreteAlpha) {
    Rng rng(8);
    const auto xs = rand_powerlaw(2.7, 1.0, 10'000, Discreteness::Discrete, rng);
    EXPECT_NEAR(mle_alpha(xs, 1.0, Discreteness::Discrete), 2.7, 0.1);
}

TEST(PlFit, EstimatorErrorShrinksWithN) {
    double prev = 1e9;
    for (const std::size_t n : {1000u, 10000u, 100000u}) {
        double mae = 0;
        for (std::uint64_t r = 0; r < 20; ++r) {
            Rng rng(derive_seed(99, r));
            mae += std::abs(mle_alpha(rand_powerlaw(2.2, 1.0, n, Discreteness::Continuous, rng), 1.0,
                                      Discreteness::Continuous) -
                            2.2);
        }
        EXPECT_LT(mae, prev) << n;
        prev = mae;
    }
}

TEST(PlFit, ContinuousMleIsScaleEquivariant) {
    Rng rng(9);
    auto xs = rand_powerlaw(2.3, 5.0, 500, Discreteness::Continuous, rng);
    const double a = mle_alpha(xs, 5.0, Discreteness::Continuous);
    for (auto& x : xs) x *= 37.5;
    EXPECT_NEAR(mle_alpha(xs, 5.0 * 37.5, Discreteness::Continuous), a, 1e-12);
}

TEST(PlFit, MleErrors) {
    std::vector<double> few(10, 3.0);
    EXPECT_THROW(mle_alpha(few, 1.0, Discreteness::Discrete), FitError);
    std::vector<double> flat(50, 3.0);
    EXPECT_THROW(mle_alpha(flat, 1.0, Discreteness::Continuous), FitError);
    EXPECT_THROW(select_xmin(few, quick(Discreteness::Discrete)), FitError);
}

TEST(PlFit, KsMatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto d = seed % 2 ? Discreteness::Discrete : Discreteness::Continuous;
        const double xmin = d == Discreteness::Discrete ? 3.0 : 1.5;
        auto xs = rand_powerlaw(2.6, xmin, 50 + rng.below(250), d, rng);
        std::sort(xs.begin(), xs.end());
        const double alpha = 2.2 + 0.1 * static_cast<double>(seed % 7);
        EXPECT_NEAR(ks_distance_sorted(xs, xmin, alpha, d), brute_ks(xs, xmin, alpha, d), 1e-9) << seed;
    }
}

TEST(PlFit, XminWithinTwiceTruth) {
    int ok = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        Rng rng(derive_seed(1234, r));
        const auto xs = rand_powerlaw(2.5, 10.0, 2000, Discreteness::Continuous, rng);
        ok += select_xmin(xs, quick(Discreteness::Continuous)).xmin <= 20.0;
    }
    EXPECT_GE(ok, 90);
}

TEST(PlFit, SplicedSampleFindsJoin) {
    Rng rng(21);
    std::vector<double> xs;
    while (xs.size() < 6000) {
        // Box-Muller lognormal body, truncated below the join.
        const double u1 = rng.uniform_open_low(), u2 = rng.uniform();
        const double z = std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
        const double x = std::exp(3.0 + 0.8 * z);
        if (x < 100.0) xs.push_back(x);
    }
    const auto tail = rand_powerlaw(2.5, 100.0, 3000, Discreteness::Continuous, rng);
    xs.insert(xs.end(), tail.begin(), tail.end());
    const auto sel = select_xmin(xs, quick(Discreteness::Continuous));
    EXPECT_GE(sel.xmin, 70.0);
    EXPECT_LE(sel.xmin, 150.0);
    EXPECT_NEAR(sel.alpha, 2.5, 0.15);
}

TEST(PlFit, PValueReproducibleAndJobIndependent) {
    Rng rng(31);
    const auto xs = rand_powerlaw(2.4, 2.0, 800, Discreteness::Discrete, rng);
    auto c = quick(Discreteness::Discrete, 77);
    const auto a = fit_power_law(xs, c);
    const auto b = fit_power_law(xs, c);
    EXPECT_EQ(a.p_value, b.p_value);
    c.jobs = 4;
    EXPECT_EQ(fit_power_law(xs, c).p_value, a.p_value);
    EXPECT_DOUBLE_EQ(a.gamma, a.alpha - 1.0);
    EXPECT_EQ(a.passes, a.p_value >= c.significance);
}

TEST(PlFit, BootstrapNeedsHundredReplicas) {
    Rng rng(32);
    const auto xs = rand_powerlaw(2.4, 2.0, 200, Discreteness::Discrete, rng);
    auto c = quick(Discreteness::Discrete);
    c.bootstrap_replicas = 99;
    EXPECT_THROW(fit_power_law(xs, c), ConfigError);
}

TEST(PlFit, ScalingRangeBoundaries) {
    PowerLawFit f;
    f.xmin = 7;
    f.max_value = 70;
    EXPECT_EQ(classify_scaling_range(f), ScalingRangeClass::sr_ge_1);
    f.max_value = 63;
    EXPECT_EQ(classify_scaling_range(f), ScalingRangeClass::sr_lt_1);
    const std::vector<double> sample{7, 20, 3500};
    EXPECT_EQ(classify_scaling_range(f, sample), ScalingRangeClass::sr_ge_1);
    EXPECT_NEAR(scaling_range(3500, 7), std::log10(500.0), 1e-12);
    EXPECT_NEAR(scaling_range(3500, 7), 2.7, 0.01);
}

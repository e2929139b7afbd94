#pragma once

// Power-law tail calibration in the Clauset-Shalizi-Newman style:
// maximum-likelihood exponent, KS-minimising lower bound, semi-parametric
// bootstrap goodness-of-fit and scaling-range classification.
//
// Conventions: `alpha` is the PDF exponent, p(x) ~ x^-alpha. The reported
// `gamma` is the exponent of the complementary CDF, gamma = alpha - 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lobnet/core.hpp"
#include "lobnet/parallel.hpp"
#include "lobnet/random.hpp"

namespace lobnet {

enum class Discreteness : std::uint8_t { Discrete, Continuous };

struct FitConfig {
    Discreteness discreteness = Discreteness::Discrete;
    double significance = 0.01;
    int bootstrap_replicas = 1000;
    std::size_t min_tail = 25;
    std::size_t max_candidates = 400;
    std::uint64_t rng_seed = 0;
    unsigned jobs = 1;

    void validate() const {
        if (!(significance > 0.0 && significance < 1.0)) throw ConfigError("significance must lie in (0,1)");
        if (bootstrap_replicas < 100) throw ConfigError("bootstrap replicas must be >= 100");
        if (min_tail < 2) throw ConfigError("minimum tail size must be >= 2");
        if (max_candidates < 1) throw ConfigError("candidate cap must be >= 1");
    }
};

enum class ScalingRangeClass : std::uint8_t { sr_ge_1, sr_lt_1 };

inline std::string_view to_string(ScalingRangeClass c) {
    return c == ScalingRangeClass::sr_ge_1 ? "sr_ge_1" : "sr_lt_1";
}

struct PowerLawFit {
    double xmin = 0;
    double alpha = 0;
    double gamma = 0;
    double ks_distance = 0;
    double p_value = 0;
    std::size_t n = 0;
    std::size_t n_tail = 0;
    double max_value = 0;
    double scaling_range = 0;
    bool passes = false;
};

struct XminSelection {
    double xmin = 0;
    double alpha = 0;
    double ks_distance = 0;
    std::size_t n_tail = 0;
};

inline constexpr double kAlphaLow = 1.0 + 1e-6;
inline constexpr double kAlphaHigh = 6.0;
inline constexpr double kAlphaTolerance = 1e-4;

// ---------------------------------------------------------------------------
// Hurwitz zeta, zeta(s, q) = sum_{k>=0} (q + k)^-s for s > 1, q > 0.
// Direct summation until q + N >= 10, then Euler-Maclaurin with eight
// Bernoulli corrections.
// ---------------------------------------------------------------------------

inline double hurwitz_zeta(double s, double q) {
    if (!(s > 1.0) || !(q > 0.0)) throw std::domain_error("hurwitz_zeta requires s > 1, q > 0");
    static constexpr double kB2jOverFact[] = {
        1.0 / 6.0 / 2.0,                      // B2 / 2!
        -1.0 / 30.0 / 24.0,                   // B4 / 4!
        1.0 / 42.0 / 720.0,                   // B6 / 6!
        -1.0 / 30.0 / 40320.0,                // B8 / 8!
        5.0 / 66.0 / 3628800.0,               // B10 / 10!
        -691.0 / 2730.0 / 479001600.0,        // B12 / 12!
        7.0 / 6.0 / 87178291200.0,            // B14 / 14!
        -3617.0 / 510.0 / 20922789888000.0,   // B16 / 16!
    };
    double sum = 0.0;
    double a = q;
    while (a < 10.0) {
        sum += std::pow(a, -s);
        a += 1.0;
    }
    const double a_pow = std::pow(a, -s);
    sum += a * a_pow / (s - 1.0) + 0.5 * a_pow;
    // term_j = B_{2j}/(2j)! * s(s+1)...(s+2j-2) * a^{-s-2j+1}
    double rising = s;          // s(s+1)...(s+2j-2)
    double a_term = a_pow / a;  // a^{-s-1}
    const double inv_a2 = 1.0 / (a * a);
    for (int j = 0; j < 8; ++j) {
        sum += kB2jOverFact[j] * rising * a_term;
        rising *= (s + 2 * j + 1) * (s + 2 * j + 2);
        a_term *= inv_a2;
    }
    return sum;
}

// P(X >= x) for the fitted tail.
inline double powerlaw_ccdf(double x, double alpha, double xmin, Discreteness d) {
    if (x <= xmin) return 1.0;
    if (d == Discreteness::Continuous) return std::pow(x / xmin, 1.0 - alpha);
    return hurwitz_zeta(alpha, x) / hurwitz_zeta(alpha, xmin);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

// Continuous inverse transform: u in [0,1) -> xmin (1-u)^{-1/(alpha-1)}.
inline double powerlaw_inverse_cdf(double u, double alpha, double xmin) {
    return xmin * std::pow(1.0 - u, -1.0 / (alpha - 1.0));
}

namespace detail {

// Discrete inverse CDF over integers >= xmin: the largest x with
// P(X >= x) >= v, for v in (0, 1]. Starts from the rounded continuous
// approximation and corrects with exact zeta ratios.
inline double discrete_powerlaw_draw(double v, double alpha, double xmin, double zeta_xmin) {
    double x = std::floor((xmin - 0.5) * std::pow(v, -1.0 / (alpha - 1.0)) + 0.5);
    if (!(x >= xmin)) x = xmin;
    if (x > 1e15) return x;
    auto ccdf = [&](double k) { return hurwitz_zeta(alpha, k) / zeta_xmin; };
    while (x > xmin && ccdf(x) < v) x -= 1.0;
    while (ccdf(x + 1.0) >= v) x += 1.0;
    return x;
}

}  // namespace detail

inline std::vector<double> rand_powerlaw(double alpha, double xmin, std::size_t n, Discreteness d, Rng& rng) {
    if (!(alpha > 1.0)) throw std::invalid_argument("rand_powerlaw: alpha must exceed 1");
    if (!(xmin > 0.0)) throw std::invalid_argument("rand_powerlaw: xmin must be positive");
    std::vector<double> out;
    out.reserve(n);
    if (d == Discreteness::Continuous) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(powerlaw_inverse_cdf(rng.uniform(), alpha, xmin));
    } else {
        const double xm = std::ceil(xmin);
        const double z = hurwitz_zeta(alpha, xm);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(detail::discrete_powerlaw_draw(rng.uniform_open_low(), alpha, xm, z));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Maximum likelihood
// ---------------------------------------------------------------------------

namespace detail {

// Maximises -n ln zeta(alpha, xmin) - alpha * sum_ln by golden-section search.
inline double discrete_alpha(std::size_t n, double sum_ln, double xmin) {
    auto nll = [&](double a) { return static_cast<double>(n) * std::log(hurwitz_zeta(a, xmin)) + a * sum_ln; };
    constexpr double inv_phi = 0.6180339887498949;
    double lo = kAlphaLow, hi = kAlphaHigh;
    double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
    double fc = nll(c), fd = nll(d);
    while (hi - lo > kAlphaTolerance) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = nll(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = nll(d);
        }
    }
    return 0.5 * (lo + hi);
}

inline double continuous_alpha(std::size_t n, double sum_ln, double xmin) {
    const double denom = sum_ln - static_cast<double>(n) * std::log(xmin);
    if (!(denom > 0.0)) throw FitError("degenerate tail: all points equal xmin");
    return 1.0 + static_cast<double>(n) / denom;
}

}  // namespace detail

inline double mle_alpha(std::span<const double> sample, double xmin, Discreteness d, std::size_t min_tail = 25) {
    std::size_t n = 0;
    double sum_ln = 0.0;
    double first = std::numeric_limits<double>::quiet_NaN();
    bool all_equal = true;
    for (const double x : sample) {
        if (x < xmin) continue;
        if (n == 0) first = x;
        all_equal = all_equal && x == first;
        ++n;
        sum_ln += std::log(x);
    }
    if (n < min_tail) throw FitError("tail has " + std::to_string(n) + " points, minimum is " + std::to_string(min_tail));
    if (all_equal) throw FitError("degenerate tail: all points equal");
    return d == Discreteness::Continuous ? detail::continuous_alpha(n, sum_ln, xmin)
                                         : detail::discrete_alpha(n, sum_ln, xmin);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov distance
// ---------------------------------------------------------------------------

// Sup-norm between the empirical CDF of `tail` (sorted ascending, all >= xmin)
// and the fitted power-law CDF. In the discrete case both CDFs are step
// functions on the integers, so the supremum over each flat stretch of the
// empirical CDF sits at one of its ends.
inline double ks_distance_sorted(std::span<const double> tail, double xmin, double alpha, Discreteness d) {
    const std::size_t n = tail.size();
    if (n == 0) return 1.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    double D = 0.0;
    if (d == Discreteness::Continuous) {
        const double lx = std::log(xmin);
        for (std::size_t i = 0; i < n; ++i) {
            const double cdf = 1.0 - std::exp((1.0 - alpha) * (std::log(tail[i]) - lx));
            D = std::max({D, std::abs(static_cast<double>(i) * inv_n - cdf),
                          std::abs(static_cast<double>(i + 1) * inv_n - cdf)});
        }
        return D;
    }
    const double z0 = hurwitz_zeta(alpha, xmin);
    double prev_emp = 0.0;
    std::size_t i = 0;
    while (i < n) {
        const double u = tail[i];
        std::size_t j = i;
        while (j < n && tail[j] == u) ++j;
        const double zu = hurwitz_zeta(alpha, u);
        const double cdf_before = 1.0 - zu / z0;                         // P(X <= u - 1)
        const double cdf_at = 1.0 - (zu - std::pow(u, -alpha)) / z0;     // P(X <= u)
        const double emp = static_cast<double>(j) * inv_n;
        D = std::max({D, std::abs(prev_emp - cdf_before), std::abs(emp - cdf_at)});
        prev_emp = emp;
        i = j;
    }
    return D;
}

// ---------------------------------------------------------------------------
// Lower-bound selection
// ---------------------------------------------------------------------------

inline XminSelection select_xmin_sorted(std::span<const double> sorted, const FitConfig& cfg) {
    const std::size_t n = sorted.size();
    if (n < cfg.min_tail) throw FitError("sample has " + std::to_string(n) + " points, minimum tail is " +
                                         std::to_string(cfg.min_tail));
    // Candidate start indices: first occurrence of each distinct value whose
    // tail keeps at least min_tail points and is not a single repeated value.
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && sorted[i] == sorted[i - 1]) continue;
        if (!(sorted[i] > 0.0)) continue;
        if (n - i < cfg.min_tail) break;
        if (sorted[i] == sorted[n - 1]) break;
        starts.push_back(i);
    }
    if (starts.empty()) throw FitError("no xmin candidate leaves the minimum tail size");
    if (starts.size() > cfg.max_candidates) {
        std::vector<std::size_t> thinned;
        const std::size_t m = starts.size(), k = cfg.max_candidates;
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t idx = k == 1 ? 0 : (c * (m - 1) + (k - 1) / 2) / (k - 1);
            if (thinned.empty() || thinned.back() != starts[idx]) thinned.push_back(starts[idx]);
        }
        starts = std::move(thinned);
    }

    std::vector<double> suffix_ln(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) suffix_ln[i] = suffix_ln[i + 1] + std::log(sorted[i]);

    XminSelection best;
    best.ks_distance = std::numeric_limits<double>::infinity();
    for (const std::size_t s : starts) {
        const double xmin = sorted[s];
        const std::size_t n_tail = n - s;
        const double alpha = cfg.discreteness == Discreteness::Continuous
                                 ? detail::continuous_alpha(n_tail, suffix_ln[s], xmin)
                                 : detail::discrete_alpha(n_tail, suffix_ln[s], xmin);
        const double D = ks_distance_sorted(sorted.subspan(s), xmin, alpha, cfg.discreteness);
        if (D < best.ks_distance) best = {xmin, alpha, D, n_tail};
    }
    return best;
}

inline XminSelection select_xmin(std::span<const double> sample, const FitConfig& cfg) {
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    return select_xmin_sorted(sorted, cfg);
}

// ---------------------------------------------------------------------------
// Bootstrap goodness of fit
// ---------------------------------------------------------------------------

// Semi-parametric bootstrap: each replica keeps the sample size, drawing from
// the fitted tail with probability n_tail/n and otherwise uniformly from the
// observed points below xmin, then re-selects xmin. p is the fraction of
// replicas whose KS distance is at least the observed one. Replicas that
// cannot be fitted are left out of the count.
inline double gof_pvalue(std::span<const double> sample, const XminSelection& fit, const FitConfig& cfg) {
    cfg.validate();
    std::vector<double> body;
    for (const double x : sample)
        if (x < fit.xmin) body.push_back(x);
    std::sort(body.begin(), body.end());
    const std::size_t n = sample.size();
    const double tail_prob = static_cast<double>(fit.n_tail) / static_cast<double>(n);
    const std::size_t replicas = static_cast<std::size_t>(cfg.bootstrap_replicas);
    const double zeta_xmin =
        cfg.discreteness == Discreteness::Discrete ? hurwitz_zeta(fit.alpha, fit.xmin) : 0.0;

    std::vector<signed char> exceeds(replicas, -1);
    parallel_for(replicas, cfg.jobs, [&](std::size_t r) {
        Rng rng(derive_seed(cfg.rng_seed, r));
        std::vector<double> synth;
        synth.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (body.empty() || rng.uniform() < tail_prob) {
                if (cfg.discreteness == Discreteness::Continuous)
                    synth.push_back(powerlaw_inverse_cdf(rng.uniform(), fit.alpha, fit.xmin));
                else
                    synth.push_back(
                        detail::discrete_powerlaw_draw(rng.uniform_open_low(), fit.alpha, fit.xmin, zeta_xmin));
            } else {
                synth.push_back(body[rng.below(body.size())]);
            }
        }
        std::sort(synth.begin(), synth.end());
        try {
            exceeds[r] = select_xmin_sorted(synth, cfg).ks_distance >= fit.ks_distance ? 1 : 0;
        } catch (const FitError&) {
        }
    });
    std::size_t valid = 0, hits = 0;
    for (const auto e : exceeds) {
        if (e < 0) continue;
        ++valid;
        hits += static_cast<std::size_t>(e);
    }
    if (valid == 0) throw FitError("no bootstrap replica could be fitted");
    return static_cast<double>(hits) / static_cast<double>(valid);
}

inline double scaling_range(double max_value, double xmin) { return std::log10(max_value / xmin); }

inline ScalingRangeClass classify_scaling_range(const PowerLawFit& fit) {
    return fit.max_value >= 10.0 * fit.xmin ? ScalingRangeClass::sr_ge_1 : ScalingRangeClass::sr_lt_1;
}

inline ScalingRangeClass classify_scaling_range(const PowerLawFit& fit, std::span<const double> sample) {
    PowerLawFit f = fit;
    f.max_value = sample.empty() ? 0.0 : *std::max_element(sample.begin(), sample.end());
    return classify_scaling_range(f);
}

// Full pipeline: xmin selection, bootstrap p-value, scaling range.
inline PowerLawFit fit_power_law(std::span<const double> sample, const FitConfig& cfg) {
    cfg.validate();
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const auto sel = select_xmin_sorted(sorted, cfg);
    PowerLawFit fit;
    fit.xmin = sel.xmin;
    fit.alpha = sel.alpha;
    fit.gamma = sel.alpha - 1.0;
    fit.ks_distance = sel.ks_distance;
    fit.n = sorted.size();
    fit.n_tail = sel.n_tail;
    fit.max_value = sorted.back();
    fit.scaling_range = scaling_range(fit.max_value, fit.xmin);
    fit.p_value = gof_pvalue(sorted, sel, cfg);
    fit.passes = fit.p_value >= cfg.significance;
    return fit;
}

template <class Range>
std::vector<double> to_doubles(const Range& xs) {
    return std::vector<double>(std::begin(xs), std::end(xs));
}

}  // namespace lobnet

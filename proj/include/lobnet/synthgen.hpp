#pragma once

// Synthetic order-flow days in the canonical format, for running and testing
// the pipeline without proprietary data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "lobnet/core.hpp"
#include "lobnet/orderflow.hpp"
#include "lobnet/plfit.hpp"
#include "lobnet/random.hpp"

namespace lobnet {

struct GenConfig {
    std::string date = "20030102";
    Ticks prev_close = 1000;
    double limit_fraction = kDefaultLimitFraction;
    std::size_t traders = 2000;
    std::size_t events = 10000;
    double size_exponent = 2.7;  // PDF exponent of order size in lots
    std::int64_t size_xmin_lots = 1;
    Shares lot = 100;
    std::int64_t max_lots = 100000;
    double marketable_prob = 0.3;
    double cancel_prob = 0.1;
    double walk_prob = 0.2;  // chance per event that the reference price moves one tick
    int passive_depth = 5;   // non-marketable orders sit up to this many ticks from the reference
    int cross_ticks = 3;     // marketable orders reach up to this many ticks through it
    // Share of events per phase: auction, cool period, morning, afternoon.
    double phase_share[4] = {0.05, 0.01, 0.47, 0.47};
    std::uint64_t rng_seed = 0;

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
        };
        prob(marketable_prob, "marketable_prob");
        prob(cancel_prob, "cancel_prob");
        prob(walk_prob, "walk_prob");
        if (!(size_exponent > 1.0)) throw ConfigError("size_exponent must exceed 1");
        if (traders == 0) throw ConfigError("traders must be positive");
        if (lot <= 0 || size_xmin_lots <= 0 || max_lots < size_xmin_lots) throw ConfigError("bad size law bounds");
        if (prev_close <= 0) throw ConfigError("prev_close must be positive");
        if (!(limit_fraction > 0.0 && limit_fraction < 1.0)) throw ConfigError("limit_fraction must lie in (0,1)");
        if (passive_depth < 1 || cross_ticks < 0) throw ConfigError("bad price offsets");
        if (date.size() != 8) throw ConfigError("date must be YYYYMMDD");
        double total = 0;
        for (const double s : phase_share) {
            prob(s, "phase share");
            total += s;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("phase shares must sum to 1");
    }
};

struct GeneratedDay {
    DayStream day;
    Ticks last_reference = 0;  // reference price at the end of the day
};

namespace detail {

struct PhaseWindow {
    Centis start, end;
};

inline constexpr PhaseWindow kGenWindows[4] = {
    {clock::kAuctionOpen, clock::kAuctionMatch},
    {clock::kAuctionMatch, clock::kContinuousOpen},
    {clock::kContinuousOpen, clock::kLunchStart},
    {clock::kLunchEnd, clock::kMarketClose},
};

// Splits `total` across phases by share, largest remainders first.
inline std::vector<std::size_t> allocate_events(std::size_t total, const double (&share)[4]) {
    std::vector<std::size_t> n(4);
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t p = 0; p < 4; ++p) {
        const double exact = share[p] * static_cast<double>(total);
        n[p] = static_cast<std::size_t>(std::floor(exact));
        used += n[p];
        rem.emplace_back(exact - std::floor(exact), p);
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; used < total; ++i, ++used) ++n[rem[i % 4].second];
    return n;
}

}  // namespace detail

inline GeneratedDay generate_day_with_state(const GenConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.rng_seed);
    GeneratedDay out;
    out.day.date = cfg.date;
    out.day.prev_close = cfg.prev_close;
    const auto band = price_band(cfg.prev_close, cfg.limit_fraction);
    const auto counts = detail::allocate_events(cfg.events, cfg.phase_share);

    const double zeta_xmin = hurwitz_zeta(cfg.size_exponent, static_cast<double>(cfg.size_xmin_lots));
    Ticks reference = cfg.prev_close;
    OrderId next_id = 1;
    std::vector<std::size_t> open;  // indices into events of uncanceled submissions

    for (std::size_t p = 0; p < 4; ++p) {
        const auto [start, end] = detail::kGenWindows[p];
        const auto span = static_cast<std::uint64_t>(end - start);
        const std::size_t m = counts[p];
        if (m > span) throw ConfigError("more events than centiseconds in a phase");
        for (std::size_t i = 0; i < m; ++i) {
            const auto lo = i * span / m, hi = (i + 1) * span / m;
            const Centis ts = start + static_cast<Centis>(lo + rng.below(std::max<std::uint64_t>(1, hi - lo)));

            if (rng.bernoulli(cfg.walk_prob)) {
                reference += rng.bernoulli(0.5) ? 1 : -1;
                if (reference > band.high) reference = band.high - 1;
                if (reference < band.low) reference = band.low + 1;
            }

            OrderEvent e;
            e.order_id = next_id++;
            e.timestamp = ts;
            if (!open.empty() && rng.bernoulli(cfg.cancel_prob)) {
                const auto pick = rng.below(open.size());
                const auto& target = out.day.events[open[pick]];
                e.trader_id = target.trader_id;
                e.action = Action::Cancel;
                e.price = target.price;
                e.size = target.size;
                e.cancel_target = target.order_id;
                open[pick] = open.back();
                open.pop_back();
                out.day.events.push_back(std::move(e));
                continue;
            }
            e.trader_id = "t" + std::to_string(rng.below(cfg.traders));
            const bool bid = rng.bernoulli(0.5);
            e.action = bid ? Action::SubmitBid : Action::SubmitAsk;
            const bool marketable = rng.bernoulli(cfg.marketable_prob);
            const Ticks offset = marketable ? static_cast<Ticks>(rng.below(static_cast<std::uint64_t>(cfg.cross_ticks) + 1))
                                            : -1 - static_cast<Ticks>(rng.below(static_cast<std::uint64_t>(cfg.passive_depth)));
            e.price = std::clamp(bid ? reference + offset : reference - offset, std::max<Ticks>(1, band.low), band.high);
            const double lots = detail::discrete_powerlaw_draw(rng.uniform_open_low(), cfg.size_exponent,
                                                               static_cast<double>(cfg.size_xmin_lots), zeta_xmin);
            e.size = static_cast<Shares>(std::min(lots, static_cast<double>(cfg.max_lots))) * cfg.lot;
            open.push_back(out.day.events.size());
            out.day.events.push_back(std::move(e));
        }
    }
    out.last_reference = reference;
    return out;
}

inline DayStream generate_day(const GenConfig& cfg) { return generate_day_with_state(cfg).day; }

// ---------------------------------------------------------------------------
// Multi-day corpora on consecutive weekdays
// ---------------------------------------------------------------------------

namespace detail {

inline bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline int days_in_month(int y, int m) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && leap(y) ? 29 : kDays[m - 1];
}

// 0 = Sunday.
inline int weekday(int y, int m, int d) {
    static constexpr int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
    if (m < 3) y -= 1;
    return (y + y / 4 - y / 100 + y / 400 + t[m - 1] + d) % 7;
}

inline std::string next_weekday(const std::string& date) {
    int y = std::stoi(date.substr(0, 4)), m = std::stoi(date.substr(4, 2)), d = std::stoi(date.substr(6, 2));
    do {
        if (++d > days_in_month(y, m)) {
            d = 1;
            if (++m > 12) {
                m = 1;
                ++y;
            }
        }
    } while (weekday(y, m, d) == 0 || weekday(y, m, d) == 6);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d%02d%02d", y, m, d);
    return buf;
}

}  // namespace detail

// Day d uses seed derive_seed(cfg.rng_seed, d); each day's prev_close is the
// previous day's final reference price.
inline std::vector<DayStream> generate_days(const GenConfig& cfg, std::size_t days) {
    std::vector<DayStream> out;
    GenConfig c = cfg;
    for (std::size_t d = 0; d < days; ++d) {
        c.rng_seed = derive_seed(cfg.rng_seed, d);
        auto g = generate_day_with_state(c);
        out.push_back(std::move(g.day));
        c.prev_close = g.last_reference;
        c.date = detail::next_weekday(c.date);
    }
    return out;
}

}  // namespace lobnet

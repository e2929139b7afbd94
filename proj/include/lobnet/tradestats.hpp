#pragma once

// Statistics over trade ledgers: trade-size samples, transaction ratios,
// daily price/volume summaries and Pearson correlation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "lobnet/core.hpp"
#include "lobnet/orderflow.hpp"

namespace lobnet {

struct TransactionRatios {
    std::size_t placed = 0, placed_ask = 0, placed_bid = 0;
    std::size_t executed = 0, executed_ask = 0, executed_bid = 0;
    std::optional<double> r, r_ask, r_bid;  // undefined when nothing was placed
};

inline std::vector<Shares> trade_size_sample(std::span<const Trade> trades) {
    std::vector<Shares> out;
    out.reserve(trades.size());
    for (const auto& t : trades) out.push_back(t.size);
    return out;
}

// An order counts as executed if any part of it traded. Cancels and orders
// the engine refuses are not placed orders.
inline TransactionRatios transaction_ratios(const DayStream& day, std::span<const Trade> trades,
                                            double limit_fraction = kDefaultLimitFraction) {
    std::unordered_set<OrderId> filled;
    for (const auto& t : trades) {
        filled.insert(t.buy_order);
        filled.insert(t.sell_order);
    }
    TransactionRatios r;
    for (const auto& e : day.events) {
        if (!e.is_submission() || !admission_check(e, day.prev_close, limit_fraction).valid) continue;
        const bool hit = filled.contains(e.order_id);
        ++r.placed;
        r.executed += hit;
        if (e.side() == Side::Ask) {
            ++r.placed_ask;
            r.executed_ask += hit;
        } else {
            ++r.placed_bid;
            r.executed_bid += hit;
        }
    }
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.r = ratio(r.executed, r.placed);
    r.r_ask = ratio(r.executed_ask, r.placed_ask);
    r.r_bid = ratio(r.executed_bid, r.placed_bid);
    return r;
}

struct DailyMarketStats {
    std::string date;
    Ticks close = 0;
    double volatility = 0.0;  // ln(p_max) - ln(p_min) over trade prices
    Shares total_volume = 0;
    std::size_t trade_count = 0;
};

// Close is the last trade price, or prev_close on a day without trades.
// Fewer than two trades give zero volatility.
inline DailyMarketStats daily_market_stats(const std::string& date, std::span<const Trade> trades,
                                           Ticks prev_close = 0) {
    DailyMarketStats s{date, prev_close, 0.0, 0, trades.size()};
    if (trades.empty()) return s;
    Ticks lo = trades.front().price, hi = trades.front().price;
    for (const auto& t : trades) {
        s.total_volume += t.size;
        lo = std::min(lo, t.price);
        hi = std::max(hi, t.price);
    }
    s.close = trades.back().price;
    if (trades.size() >= 2) s.volatility = std::log(static_cast<double>(hi)) - std::log(static_cast<double>(lo));
    return s;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("pearson: need at least two points");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("pearson: zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace lobnet

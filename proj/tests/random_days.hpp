#pragma once

// Adversarial random days for engine-versus-oracle checks: clustered prices,
// equal timestamps, out-of-band and out-of-session orders, targeted and
// untargeted cancels, cancels of filled or unknown orders.

#include <algorithm>
#include <string>
#include <vector>

#include "lobnet/core.hpp"
#include "lobnet/orderflow.hpp"
#include "lobnet/random.hpp"

namespace testdata {

using namespace lobnet;

inline DayStream random_day(std::uint64_t seed, std::size_t max_events = 200) {
    Rng rng(seed);
    DayStream d;
    d.date = "20030102";
    d.prev_close = 1000;
    const std::size_t n = 1 + rng.below(max_events);
    // Windows weighted towards the auction and the phase boundaries.
    const std::pair<Centis, Centis> windows[] = {
        {hms(9, 10, 0, 0), hms(9, 15, 0, 0)},    {clock::kAuctionOpen, clock::kCancelFreeze},
        {clock::kCancelFreeze, clock::kAuctionMatch}, {clock::kAuctionMatch, clock::kContinuousOpen},
        {clock::kContinuousOpen, hms(9, 40, 0, 0)},    {hms(11, 25, 0, 0), hms(13, 5, 0, 0)},
        {hms(14, 50, 0, 0), hms(15, 10, 0, 0)},
    };
    std::vector<Centis> times;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [a, b] = windows[rng.below(std::size(windows))];
        // Coarse grid so equal timestamps are common.
        times.push_back(a + static_cast<Centis>(rng.below(static_cast<std::uint64_t>((b - a) / 500))) * 500);
    }
    std::sort(times.begin(), times.end());
    const Ticks centre = 1000 + static_cast<Ticks>(rng.below(21)) - 10;
    for (std::size_t i = 0; i < n; ++i) {
        OrderEvent e;
        e.order_id = static_cast<OrderId>(i + 1);
        e.timestamp = times[i];
        e.trader_id = "u" + std::to_string(rng.below(12));
        const auto kind = rng.below(100);
        if (kind < 18 && i > 0) {
            e.action = Action::Cancel;
            e.price = 0;
            e.size = 0;
            const auto how = rng.below(10);
            if (how < 6) e.cancel_target = 1 + static_cast<OrderId>(rng.below(i));
            else if (how < 7) e.cancel_target = 100000 + static_cast<OrderId>(rng.below(50));
            // otherwise untargeted: oldest open order of the trader
        } else {
            e.action = rng.bernoulli(0.5) ? Action::SubmitBid : Action::SubmitAsk;
            e.price = centre + static_cast<Ticks>(rng.below(9)) - 4;
            e.size = 100 * (1 + static_cast<Shares>(rng.below(8)));
            const auto odd = rng.below(100);
            if (odd < 3) e.price = 1200;
            else if (odd < 5) e.price = 850;
            else if (odd < 6) e.size = 0;
        }
        d.events.push_back(e);
    }
    return d;
}

}  // namespace testdata

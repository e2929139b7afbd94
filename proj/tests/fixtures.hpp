#pragma once

#include <optional>
#include <string>
#include <utility>

#include "lobnet/core.hpp"
#include "lobnet/orderflow.hpp"

namespace fixtures {

using namespace lobnet;

inline OrderEvent submit(OrderId id, Centis ts, std::string trader, Action a, Ticks price, Shares size) {
    OrderEvent e;
    e.order_id = id;
    e.timestamp = ts;
    e.trader_id = std::move(trader);
    e.action = a;
    e.price = price;
    e.size = size;
    return e;
}

inline OrderEvent cancel(OrderId id, Centis ts, std::string trader, std::optional<OrderId> target) {
    OrderEvent e;
    e.order_id = id;
    e.timestamp = ts;
    e.trader_id = std::move(trader);
    e.action = Action::Cancel;
    e.cancel_target = target;
    return e;
}

// Five asks at one price in arrival order h, i, j, l, m, then a 500-share bid from x.
inline DayStream five_ask_day() {
    DayStream d;
    d.date = "20030102";
    d.prev_close = 1000;
    const Centis t0 = hms(10, 0, 0, 0);
    const std::pair<const char*, Shares> asks[] = {{"h", 200}, {"i", 100}, {"j", 300}, {"l", 100}, {"m", 200}};
    OrderId id = 1;
    for (const auto& [who, size] : asks) d.events.push_back(submit(id, t0 + id, who, Action::SubmitAsk, 1020, size)), ++id;
    d.events.push_back(submit(id, t0 + 100, "x", Action::SubmitBid, 1020, 500));
    return d;
}

}  // namespace fixtures

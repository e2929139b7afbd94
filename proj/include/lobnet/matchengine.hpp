#pragma once

// Deterministic replay of one trading day under the 2003 Shenzhen rules:
// opening call auction with frozen-cancel window, cool period, continuous
// double auction, end-of-day purge.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lobnet/core.hpp"
#include "lobnet/orderflow.hpp"
#include "lobnet/tradestats.hpp"

namespace lobnet {

struct RestingOrder {
    OrderId order_id = 0;
    TraderId trader_id;
    Side side = Side::Bid;
    Ticks price = 0;
    Shares remaining = 0;
    Centis arrival = 0;
};

struct LevelView {
    Side side;
    Ticks price;
    std::vector<std::pair<OrderId, Shares>> queue;
};

struct BookSnapshot {
    Centis timestamp = 0;
    std::vector<LevelView> levels;  // bids best-first, then asks best-first
};

class OrderBook {
  public:
    using Queue = std::list<RestingOrder>;
    using BidLevels = std::map<Ticks, Queue, std::greater<>>;
    using AskLevels = std::map<Ticks, Queue, std::less<>>;

    void add(RestingOrder order) {
        auto& queue = order.side == Side::Bid ? bids_[order.price] : asks_[order.price];
        const auto id = order.order_id;
        by_trader_[order.trader_id].emplace(order.arrival, id);
        queue.push_back(std::move(order));
        index_[id] = std::prev(queue.end());
    }

    // Removes the order's remaining shares; returns 0 when the order is not resting.
    Shares cancel(OrderId id) {
        const auto it = index_.find(id);
        if (it == index_.end()) return 0;
        const auto order_it = it->second;
        const Shares removed = order_it->remaining;
        erase(order_it);
        return removed;
    }

    const RestingOrder* find(OrderId id) const {
        const auto it = index_.find(id);
        return it == index_.end() ? nullptr : &*it->second;
    }

    bool contains(OrderId id) const { return index_.contains(id); }

    std::optional<OrderId> oldest_open_order(const TraderId& trader) const {
        const auto it = by_trader_.find(trader);
        if (it == by_trader_.end() || it->second.empty()) return std::nullopt;
        return it->second.begin()->second;
    }

    std::optional<Ticks> best_bid() const {
        return bids_.empty() ? std::nullopt : std::optional<Ticks>(bids_.begin()->first);
    }
    std::optional<Ticks> best_ask() const {
        return asks_.empty() ? std::nullopt : std::optional<Ticks>(asks_.begin()->first);
    }

    // Head of the best level on `side`; side must be nonempty.
    RestingOrder& head(Side side) {
        return side == Side::Bid ? bids_.begin()->second.front() : asks_.begin()->second.front();
    }

    // Reduces the head order on `side` by `shares`, removing it when exhausted.
    void fill_head(Side side, Shares shares) {
        auto& queue = side == Side::Bid ? bids_.begin()->second : asks_.begin()->second;
        auto it = queue.begin();
        it->remaining -= shares;
        if (it->remaining == 0) erase(it);
    }

    bool empty(Side side) const { return side == Side::Bid ? bids_.empty() : asks_.empty(); }
    std::size_t order_count() const { return index_.size(); }

    const BidLevels& bids() const { return bids_; }
    const AskLevels& asks() const { return asks_; }

    std::vector<OrderId> clear() {
        std::vector<OrderId> ids;
        for (const auto& [p, q] : bids_)
            for (const auto& o : q) ids.push_back(o.order_id);
        for (const auto& [p, q] : asks_)
            for (const auto& o : q) ids.push_back(o.order_id);
        bids_.clear();
        asks_.clear();
        index_.clear();
        by_trader_.clear();
        return ids;
    }

    BookSnapshot snapshot(Centis ts) const {
        BookSnapshot snap{ts, {}};
        auto dump = [&](Side side, const auto& levels) {
            for (const auto& [price, queue] : levels) {
                LevelView view{side, price, {}};
                for (const auto& o : queue) view.queue.emplace_back(o.order_id, o.remaining);
                snap.levels.push_back(std::move(view));
            }
        };
        dump(Side::Bid, bids_);
        dump(Side::Ask, asks_);
        return snap;
    }

  private:
    void erase(Queue::iterator order_it) {
        const auto id = order_it->order_id;
        auto& trader_orders = by_trader_[order_it->trader_id];
        trader_orders.erase({order_it->arrival, id});
        if (trader_orders.empty()) by_trader_.erase(order_it->trader_id);
        if (order_it->side == Side::Bid) {
            auto level = bids_.find(order_it->price);
            level->second.erase(order_it);
            if (level->second.empty()) bids_.erase(level);
        } else {
            auto level = asks_.find(order_it->price);
            level->second.erase(order_it);
            if (level->second.empty()) asks_.erase(level);
        }
        index_.erase(id);
    }

    BidLevels bids_;
    AskLevels asks_;
    std::unordered_map<OrderId, Queue::iterator> index_;
    std::unordered_map<TraderId, std::set<std::pair<Centis, OrderId>>> by_trader_;
};

// ---------------------------------------------------------------------------
// Call auction
// ---------------------------------------------------------------------------

struct AuctionPrice {
    Ticks price = 0;
    Shares volume = 0;
    Shares imbalance = 0;  // |cumulative bids - cumulative asks| at price
};

struct AuctionResult {
    Ticks clearing_price = 0;
    Shares executed_volume = 0;
    std::vector<Trade> trades;
};

namespace detail {

inline Ticks distance(Ticks a, Ticks b) { return a > b ? a - b : b - a; }

// Volume maximization; ties by smallest imbalance, then nearest prev_close, then lower price.
inline bool better_auction_price(const AuctionPrice& a, const AuctionPrice& b, Ticks prev_close) {
    if (a.volume != b.volume) return a.volume > b.volume;
    if (a.imbalance != b.imbalance) return a.imbalance < b.imbalance;
    const auto da = distance(a.price, prev_close), db = distance(b.price, prev_close);
    if (da != db) return da < db;
    return a.price < b.price;
}

}  // namespace detail

// Clearing price of the opening auction, or nullopt when the book does not
// cross. Volume and imbalance are step functions of price, so evaluating every
// breakpoint neighbour plus the clamped previous close covers all ticks.
inline std::optional<AuctionPrice> call_auction_price(const OrderBook& book, Ticks prev_close) {
    const auto best_bid = book.best_bid();
    const auto best_ask = book.best_ask();
    if (!best_bid || !best_ask || *best_bid < *best_ask) return std::nullopt;
    const Ticks lo = *best_ask;  // lowest ask
    const Ticks hi = *best_bid;  // highest bid

    std::vector<Ticks> candidates;
    auto consider = [&](Ticks p) {
        if (p >= lo && p <= hi) candidates.push_back(p);
    };
    for (const auto& [price, q] : book.bids()) {
        consider(price);
        consider(price + 1);
    }
    for (const auto& [price, q] : book.asks()) {
        consider(price);
        consider(price - 1);
    }
    consider(std::clamp(prev_close, lo, hi));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Sweep with running sums: cumulative asks grow with price, cumulative bids shrink.
    std::vector<std::pair<Ticks, Shares>> bid_levels, ask_levels;
    Shares total_bids = 0;
    for (const auto& [price, q] : book.bids()) {
        Shares s = 0;
        for (const auto& o : q) s += o.remaining;
        bid_levels.emplace_back(price, s);
        total_bids += s;
    }
    std::reverse(bid_levels.begin(), bid_levels.end());  // ascending
    for (const auto& [price, q] : book.asks()) {
        Shares s = 0;
        for (const auto& o : q) s += o.remaining;
        ask_levels.emplace_back(price, s);
    }

    std::optional<AuctionPrice> best;
    std::size_t bi = 0, ai = 0;
    Shares bids_below = 0, asks_at_or_below = 0;
    for (const Ticks p : candidates) {
        while (bi < bid_levels.size() && bid_levels[bi].first < p) bids_below += bid_levels[bi++].second;
        while (ai < ask_levels.size() && ask_levels[ai].first <= p) asks_at_or_below += ask_levels[ai++].second;
        const Shares bids = total_bids - bids_below;
        const Shares asks = asks_at_or_below;
        const AuctionPrice cand{p, std::min(bids, asks), bids > asks ? bids - asks : asks - bids};
        if (!best || detail::better_auction_price(cand, *best, prev_close)) best = cand;
    }
    if (!best || best->volume == 0) return std::nullopt;
    return best;
}

// Pairs eligible bids (>= price) and asks (<= price) head-to-head in
// price-time priority; each pairing is one bilateral trade at `price`.
inline AuctionResult execute_call_auction(OrderBook& book, Ticks price, Centis at = clock::kAuctionMatch) {
    AuctionResult result{price, 0, {}};
    while (!book.empty(Side::Bid) && !book.empty(Side::Ask) && *book.best_bid() >= price &&
           *book.best_ask() <= price) {
        auto& bid = book.head(Side::Bid);
        auto& ask = book.head(Side::Ask);
        const Shares v = std::min(bid.remaining, ask.remaining);
        Trade t;
        t.timestamp = at;
        t.seller_id = ask.trader_id;
        t.buyer_id = bid.trader_id;
        t.price = price;
        t.size = v;
        t.phase = SessionPhase::OpenCallAuction;
        t.aggressor = Aggressor::Auction;
        t.sell_order = ask.order_id;
        t.buy_order = bid.order_id;
        result.trades.push_back(std::move(t));
        result.executed_volume += v;
        book.fill_head(Side::Bid, v);
        book.fill_head(Side::Ask, v);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Continuous matching and cancels
// ---------------------------------------------------------------------------

// Executes the marketable part of `incoming` against the opposite queue heads
// (each fill priced at the resting order) and rests any remainder.
inline std::vector<Trade> match_continuous(OrderBook& book, const OrderEvent& incoming,
                                           SessionPhase phase = SessionPhase::MorningContinuous) {
    std::vector<Trade> trades;
    const bool is_bid = incoming.action == Action::SubmitBid;
    const Side opposite = is_bid ? Side::Ask : Side::Bid;
    Shares remaining = incoming.size;
    auto marketable = [&] {
        if (book.empty(opposite)) return false;
        return is_bid ? incoming.price >= *book.best_ask() : incoming.price <= *book.best_bid();
    };
    while (remaining > 0 && marketable()) {
        auto& resting = book.head(opposite);
        const Shares v = std::min(remaining, resting.remaining);
        Trade t;
        t.timestamp = incoming.timestamp;
        t.price = resting.price;
        t.size = v;
        t.phase = phase;
        t.aggressor = is_bid ? Aggressor::Buy : Aggressor::Sell;
        if (is_bid) {
            t.seller_id = resting.trader_id;
            t.buyer_id = incoming.trader_id;
            t.sell_order = resting.order_id;
            t.buy_order = incoming.order_id;
        } else {
            t.seller_id = incoming.trader_id;
            t.buyer_id = resting.trader_id;
            t.sell_order = incoming.order_id;
            t.buy_order = resting.order_id;
        }
        trades.push_back(std::move(t));
        remaining -= v;
        book.fill_head(opposite, v);
    }
    if (remaining > 0) {
        book.add({incoming.order_id, incoming.trader_id, incoming.side(), incoming.price, remaining,
                  incoming.timestamp});
    }
    return trades;
}

struct CancelOutcome {
    bool canceled = false;
    Shares shares = 0;
    std::optional<OrderId> target;
};

// Untargeted cancels fall back to the trader's oldest open order.
inline CancelOutcome apply_cancel(OrderBook& book, const OrderEvent& cancel) {
    std::optional<OrderId> target = cancel.cancel_target;
    if (!target) target = book.oldest_open_order(cancel.trader_id);
    if (!target) return {};
    const Shares removed = book.cancel(*target);
    return {removed > 0, removed, target};
}

// ---------------------------------------------------------------------------
// Day replay
// ---------------------------------------------------------------------------

struct ReplayOptions {
    double limit_fraction = kDefaultLimitFraction;
    std::vector<Centis> snapshot_times;
};

struct DayReplay {
    std::string date;
    std::vector<Trade> trades;
    TransactionRatios ratios;
    std::optional<AuctionPrice> auction;
    std::size_t invalid_orders = 0;
    std::size_t canceled_at_close = 0;
    std::vector<std::string> warnings;
    std::vector<BookSnapshot> snapshots;
};

namespace detail {

class DayReplayer {
  public:
    DayReplayer(const DayStream& day, const ReplayOptions& opts) : day_(day), opts_(opts) {
        out_.date = day.date;
        snapshot_times_ = opts.snapshot_times;
        std::sort(snapshot_times_.begin(), snapshot_times_.end());
        for (const auto& e : day.events)
            if (e.is_submission()) submitted_.insert(e.order_id);
    }

    DayReplay run() {
        Centis last_ts = -1;
        OrderId last_id = 0;
        for (const auto& e : day_.events) {
            if (e.timestamp < last_ts || (e.timestamp == last_ts && e.order_id <= last_id))
                throw ReplayError("event " + std::to_string(e.order_id) + " out of order");
            last_ts = e.timestamp;
            last_id = e.order_id;

            take_snapshots_before(e.timestamp);
            advance_clock(e.timestamp);

            const auto admit = admission_check(e, day_.prev_close, opts_.limit_fraction);
            if (!admit.valid) {
                ++out_.invalid_orders;
                continue;
            }
            process(e);
        }
        take_snapshots_before(clock::kEndOfDay);
        advance_clock(clock::kMarketClose);
        out_.ratios = transaction_ratios(day_, out_.trades, opts_.limit_fraction);
        return std::move(out_);
    }

  private:
    void process(const OrderEvent& e) {
        const auto phase = classify_phase(e.timestamp);
        if (e.action == Action::Cancel) {
            if (phase == SessionPhase::OpenCallAuction && in_frozen_cancel_window(e.timestamp)) {
                frozen_.push_back(e);
            } else if (phase == SessionPhase::CoolPeriod) {
                cool_.push_back(e);
            } else {
                cancel_now(e);
            }
            return;
        }
        if (phase == SessionPhase::OpenCallAuction) {
            book_.add({e.order_id, e.trader_id, e.side(), e.price, e.size, e.timestamp});
            return;
        }
        append(match_continuous(book_, e, phase));
    }

    void cancel_now(const OrderEvent& e) {
        const auto outcome = apply_cancel(book_, e);
        if (!outcome.target) {
            out_.warnings.push_back("cancel " + std::to_string(e.order_id) + ": no open order for trader " +
                                    e.trader_id);
        } else if (!outcome.canceled && !submitted_.contains(*outcome.target)) {
            out_.warnings.push_back("cancel " + std::to_string(e.order_id) + ": unknown target " +
                                    std::to_string(*outcome.target));
        }
    }

    // Runs every scheduled transition with boundary <= ts exactly once.
    void advance_clock(Centis ts) {
        if (!auction_done_ && ts >= clock::kAuctionMatch) {
            auction_done_ = true;
            out_.auction = call_auction_price(book_, day_.prev_close);
            if (out_.auction) append(execute_call_auction(book_, out_.auction->price).trades);
            for (const auto& c : frozen_) cancel_now(c);
            frozen_.clear();
        }
        if (!cool_done_ && ts >= clock::kContinuousOpen) {
            cool_done_ = true;
            for (const auto& c : cool_) cancel_now(c);
            cool_.clear();
        }
        if (!closed_ && ts >= clock::kMarketClose) {
            closed_ = true;
            out_.canceled_at_close = book_.clear().size();
        }
    }

    void take_snapshots_before(Centis ts) {
        while (next_snapshot_ < snapshot_times_.size() && snapshot_times_[next_snapshot_] < ts) {
            const Centis at = snapshot_times_[next_snapshot_++];
            advance_clock(at);
            out_.snapshots.push_back(book_.snapshot(at));
        }
    }

    void append(std::vector<Trade>&& trades) {
        for (auto& t : trades) {
            t.trade_id = static_cast<std::int64_t>(out_.trades.size()) + 1;
            out_.trades.push_back(std::move(t));
        }
    }

    const DayStream& day_;
    const ReplayOptions& opts_;
    DayReplay out_;
    OrderBook book_;
    std::vector<OrderEvent> frozen_;
    std::vector<OrderEvent> cool_;
    std::vector<Centis> snapshot_times_;
    std::size_t next_snapshot_ = 0;
    bool auction_done_ = false;
    bool cool_done_ = false;
    bool closed_ = false;
    std::unordered_set<OrderId> submitted_;
};

}  // namespace detail

inline DayReplay run_day(const DayStream& day, const ReplayOptions& opts = {}) {
    return detail::DayReplayer(day, opts).run();
}

}  // namespace lobnet

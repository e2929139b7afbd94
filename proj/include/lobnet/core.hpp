#pragma once

// Shared domain vocabulary for order-flow replay and trading-network analysis.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lobnet {

inline constexpr std::string_view kToolVersion = "lobnet 0.1.0";

using Ticks = std::int64_t;       // price in 0.01 currency units
using Shares = std::int64_t;
using OrderId = std::int64_t;
using Centis = std::int64_t;      // centiseconds since midnight
using TraderId = std::string;

enum class Action : std::uint8_t { SubmitBid, SubmitAsk, Cancel };
enum class Side : std::uint8_t { Bid, Ask };
enum class Aggressor : std::uint8_t { Buy, Sell, Auction };

enum class SessionPhase : std::uint8_t {
    Closed,
    OpenCallAuction,
    CoolPeriod,
    MorningContinuous,
    Lunch,
    AfternoonContinuous,
};

constexpr Centis hms(int h, int m, int s = 0, int cs = 0) {
    return ((static_cast<Centis>(h) * 60 + m) * 60 + s) * 100 + cs;
}

namespace clock {
inline constexpr Centis kAuctionOpen = hms(9, 15);
inline constexpr Centis kCancelFreeze = hms(9, 20);
inline constexpr Centis kAuctionMatch = hms(9, 25);
inline constexpr Centis kContinuousOpen = hms(9, 30);
inline constexpr Centis kLunchStart = hms(11, 30);
inline constexpr Centis kLunchEnd = hms(13, 0);
inline constexpr Centis kMarketClose = hms(15, 0);
inline constexpr Centis kEndOfDay = hms(24, 0);
}  // namespace clock

struct Trade {
    std::int64_t trade_id = 0;
    Centis timestamp = 0;
    TraderId seller_id;
    TraderId buyer_id;
    Ticks price = 0;
    Shares size = 0;
    SessionPhase phase = SessionPhase::Closed;
    Aggressor aggressor = Aggressor::Auction;
    // Parent orders; not part of the ledger file format.
    OrderId sell_order = 0;
    OrderId buy_order = 0;

    bool operator==(const Trade&) const = default;
};

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ReplayError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline std::string_view to_string(SessionPhase p) {
    switch (p) {
        case SessionPhase::Closed: return "Closed";
        case SessionPhase::OpenCallAuction: return "OpenCallAuction";
        case SessionPhase::CoolPeriod: return "CoolPeriod";
        case SessionPhase::MorningContinuous: return "MorningContinuous";
        case SessionPhase::Lunch: return "Lunch";
        case SessionPhase::AfternoonContinuous: return "AfternoonContinuous";
    }
    return "Closed";
}

inline std::string_view to_string(Aggressor a) {
    switch (a) {
        case Aggressor::Buy: return "Buy";
        case Aggressor::Sell: return "Sell";
        case Aggressor::Auction: return "Auction";
    }
    return "Auction";
}

inline SessionPhase phase_from_string(std::string_view s) {
    for (auto p : {SessionPhase::Closed, SessionPhase::OpenCallAuction, SessionPhase::CoolPeriod,
                   SessionPhase::MorningContinuous, SessionPhase::Lunch,
                   SessionPhase::AfternoonContinuous}) {
        if (to_string(p) == s) return p;
    }
    throw ParseError("unknown session phase '" + std::string(s) + "'");
}

inline Aggressor aggressor_from_string(std::string_view s) {
    for (auto a : {Aggressor::Buy, Aggressor::Sell, Aggressor::Auction}) {
        if (to_string(a) == s) return a;
    }
    throw ParseError("unknown aggressor '" + std::string(s) + "'");
}

}  // namespace lobnet

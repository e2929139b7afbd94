#pragma once

// Order-flow ingestion: the canonical `#lobnet-orderflow v1` text format,
// session-phase classification and price-limit validation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "lobnet/core.hpp"

namespace lobnet {

struct OrderEvent {
    OrderId order_id = 0;
    Centis timestamp = 0;
    TraderId trader_id;
    Action action = Action::SubmitBid;
    Ticks price = 0;
    Shares size = 0;
    std::optional<OrderId> cancel_target;

    bool is_submission() const { return action != Action::Cancel; }
    Side side() const { return action == Action::SubmitAsk ? Side::Ask : Side::Bid; }

    bool operator==(const OrderEvent&) const = default;
};

struct DayStream {
    std::string date;  // YYYYMMDD
    std::vector<OrderEvent> events;
    Ticks prev_close = 0;

    bool operator==(const DayStream&) const = default;
};

enum class TimestampEncoding : std::uint8_t {
    PackedHmmsscc,  // 9342152 == 09:34:21.52
    Centiseconds,
};

struct FormatSpec {
    TimestampEncoding timestamps = TimestampEncoding::PackedHmmsscc;
    // Indicator code -> action. Vendors with numeric indicators supply their own map.
    std::map<std::string, Action, std::less<>> action_codes = {
        {"B", Action::SubmitBid}, {"S", Action::SubmitAsk}, {"C", Action::Cancel}};
    // When false, cancels without a target resolve to the trader's oldest open order.
    bool require_cancel_target = true;
    std::string default_date = "00000000";
    Ticks default_prev_close = 0;
};

struct Reject {
    std::size_t line = 0;
    std::string reason;
    std::string text;
};

struct ParseResult {
    std::vector<DayStream> days;
    std::vector<Reject> rejects;
    std::size_t rows = 0;  // data rows seen, excluding header/directives/comments
    std::size_t parsed_events() const {
        std::size_t n = 0;
        for (const auto& d : days) n += d.events.size();
        return n;
    }
};

inline constexpr std::string_view kOrderFlowHeader = "#lobnet-orderflow v1";

// ---------------------------------------------------------------------------
// Session phases
// ---------------------------------------------------------------------------

inline SessionPhase classify_phase(Centis ts) {
    using namespace clock;
    if (ts < 0 || ts >= kEndOfDay) throw std::out_of_range("timestamp outside [0, 24h)");
    if (ts < kAuctionOpen) return SessionPhase::Closed;
    if (ts < kAuctionMatch) return SessionPhase::OpenCallAuction;
    if (ts < kContinuousOpen) return SessionPhase::CoolPeriod;
    if (ts < kLunchStart) return SessionPhase::MorningContinuous;
    if (ts < kLunchEnd) return SessionPhase::Lunch;
    if (ts < kMarketClose) return SessionPhase::AfternoonContinuous;
    return SessionPhase::Closed;
}

// Cancels in [9:20, 9:25) wait for the auction.
inline bool in_frozen_cancel_window(Centis ts) {
    return ts >= clock::kCancelFreeze && ts < clock::kAuctionMatch;
}

inline bool accepts_orders(SessionPhase p) {
    return p == SessionPhase::OpenCallAuction || p == SessionPhase::CoolPeriod ||
           p == SessionPhase::MorningContinuous || p == SessionPhase::AfternoonContinuous;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline constexpr double kDefaultLimitFraction = 0.10;

struct Validation {
    bool valid = true;
    std::string reason;

    static Validation ok() { return {}; }
    static Validation invalid(std::string why) { return {false, std::move(why)}; }
};

struct PriceBand {
    Ticks low = 0;
    Ticks high = 0;
};

inline PriceBand price_band(Ticks prev_close, double limit_fraction) {
    return {std::llround(static_cast<double>(prev_close) * (1.0 - limit_fraction)),
            std::llround(static_cast<double>(prev_close) * (1.0 + limit_fraction))};
}

inline Validation validate_event(const OrderEvent& e, Ticks prev_close, double limit_fraction) {
    if (!e.is_submission()) return Validation::ok();
    if (e.size <= 0) return Validation::invalid("nonpositive size");
    if (e.price <= 0) return Validation::invalid("nonpositive price");
    if (prev_close > 0) {
        const auto band = price_band(prev_close, limit_fraction);
        if (e.price < band.low || e.price > band.high) return Validation::invalid("price limit");
    }
    return Validation::ok();
}

// Everything the replay engine refuses: out-of-session events and
// submissions failing validate_event.
inline Validation admission_check(const OrderEvent& e, Ticks prev_close, double limit_fraction) {
    if (!accepts_orders(classify_phase(e.timestamp))) return Validation::invalid("outside session");
    return validate_event(e, prev_close, limit_fraction);
}

// ---------------------------------------------------------------------------
// Field codecs
// ---------------------------------------------------------------------------

namespace detail {

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
    Int v{};
    if (s.empty()) return std::nullopt;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim_cr(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    return s;
}

inline bool valid_date(std::string_view d) {
    return d.size() == 8 && std::all_of(d.begin(), d.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace detail

// "10.20" -> 1020. Exactly two fraction digits.
inline std::optional<Ticks> parse_price(std::string_view s) {
    const auto dot = s.find('.');
    if (dot == std::string_view::npos || dot == 0 || s.size() - dot != 3) return std::nullopt;
    const auto whole = s.substr(0, dot);
    const auto frac = s.substr(dot + 1);
    if (!std::all_of(whole.begin(), whole.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        !std::all_of(frac.begin(), frac.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
    const auto w = detail::parse_int<Ticks>(whole);
    const auto f = detail::parse_int<Ticks>(frac);
    if (!w || !f) return std::nullopt;
    return *w * 100 + *f;
}

inline std::string format_price(Ticks t) {
    std::string frac = std::to_string(t % 100);
    if (frac.size() < 2) frac.insert(0, "0");
    return std::to_string(t / 100) + "." + frac;
}

inline std::optional<Centis> decode_timestamp(std::string_view s, TimestampEncoding enc) {
    const auto v = detail::parse_int<std::int64_t>(s);
    if (!v || *v < 0) return std::nullopt;
    if (enc == TimestampEncoding::Centiseconds) {
        if (*v >= clock::kEndOfDay) return std::nullopt;
        return *v;
    }
    const std::int64_t cc = *v % 100;
    const std::int64_t ss = (*v / 100) % 100;
    const std::int64_t mm = (*v / 10000) % 100;
    const std::int64_t hh = *v / 1000000;
    if (ss >= 60 || mm >= 60 || hh >= 24) return std::nullopt;
    return hms(static_cast<int>(hh), static_cast<int>(mm), static_cast<int>(ss), static_cast<int>(cc));
}

inline std::string encode_timestamp(Centis ts, TimestampEncoding enc) {
    if (enc == TimestampEncoding::Centiseconds) return std::to_string(ts);
    const std::int64_t cc = ts % 100;
    const std::int64_t secs = ts / 100;
    const std::int64_t packed = (secs / 3600) * 1000000 + (secs / 60 % 60) * 10000 + (secs % 60) * 100 + cc;
    return std::to_string(packed);
}

inline std::string action_code(Action a, const FormatSpec& fmt) {
    for (const auto& [code, act] : fmt.action_codes) {
        if (act == a) return code;
    }
    throw ConfigError("format has no code for action");
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

struct DayBuilder {
    DayStream day;
    std::vector<std::pair<std::size_t, std::string>> lines;  // source of each event
    std::unordered_set<OrderId> ids;
    Centis last_ts = -1;
    std::optional<std::size_t> fatal_line;
};

inline std::optional<std::string> parse_row(std::string_view line, const FormatSpec& fmt, OrderEvent& out) {
    const auto f = split(line, ',');
    if (f.size() != 6 && f.size() != 7) return "expected 6 or 7 fields";
    const auto ts = decode_timestamp(f[0], fmt.timestamps);
    if (!ts) return "bad timestamp";
    if (f[1].empty()) return "empty trader_id";
    const auto code = fmt.action_codes.find(f[2]);
    if (code == fmt.action_codes.end()) return "unknown action code";
    const auto price = parse_price(f[3]);
    if (!price) return "bad price";
    const auto size = parse_int<Shares>(f[4]);
    if (!size) return "bad size";
    const auto id = parse_int<OrderId>(f[5]);
    if (!id) return "bad order_id";
    out = OrderEvent{};
    out.order_id = *id;
    out.timestamp = *ts;
    out.trader_id = std::string(f[1]);
    out.action = code->second;
    out.price = *price;
    out.size = *size;
    const bool has_target = f.size() == 7 && !f[6].empty();
    if (out.action == Action::Cancel) {
        if (has_target) {
            const auto target = parse_int<OrderId>(f[6]);
            if (!target) return "bad cancel_target";
            out.cancel_target = *target;
        } else if (fmt.require_cancel_target) {
            return "missing cancel_target";
        }
        if (out.size < 0) return "negative size";
    } else {
        if (has_target) return "cancel_target on submission";
        if (out.size <= 0) return "nonpositive size";
        if (out.price <= 0) return "nonpositive price";
    }
    return std::nullopt;
}

}  // namespace detail

// Parses a stream holding one or more days. `#date=YYYYMMDD` starts a new
// day and `#prev_close=D.DD` sets the current day's previous close; lines
// starting with "# " are comments. Malformed rows are reported in `rejects`.
// A day whose timestamps go backwards is dropped and its rows rejected.
inline ParseResult parse_stream(std::istream& in, const FormatSpec& fmt = {}) {
    ParseResult result;
    std::vector<detail::DayBuilder> days;
    std::string raw;
    std::size_t lineno = 0;
    bool header_seen = false;

    auto current = [&]() -> detail::DayBuilder& {
        if (days.empty()) {
            days.emplace_back();
            days.back().day.date = fmt.default_date;
            days.back().day.prev_close = fmt.default_prev_close;
        }
        return days.back();
    };

    while (std::getline(in, raw)) {
        ++lineno;
        const std::string_view line = detail::trim_cr(raw);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kOrderFlowHeader)
                throw ParseError("line " + std::to_string(lineno) + ": unrecognised header '" + std::string(line) + "'");
            header_seen = true;
            continue;
        }
        if (line.starts_with("#date=")) {
            const auto d = line.substr(6);
            if (!detail::valid_date(d)) throw ParseError("line " + std::to_string(lineno) + ": bad date directive");
            days.emplace_back();
            days.back().day.date = std::string(d);
            days.back().day.prev_close = fmt.default_prev_close;
            continue;
        }
        if (line.starts_with("#prev_close=")) {
            const auto p = parse_price(line.substr(12));
            if (!p) throw ParseError("line " + std::to_string(lineno) + ": bad prev_close directive");
            current().day.prev_close = *p;
            continue;
        }
        if (line.starts_with('#')) continue;

        ++result.rows;
        auto& day = current();
        OrderEvent ev;
        if (auto err = detail::parse_row(line, fmt, ev)) {
            result.rejects.push_back({lineno, *err, std::string(line)});
            continue;
        }
        if (day.ids.contains(ev.order_id)) {
            result.rejects.push_back({lineno, "duplicate order_id", std::string(line)});
            continue;
        }
        if (ev.timestamp < day.last_ts && !day.fatal_line) day.fatal_line = lineno;
        day.last_ts = std::max(day.last_ts, ev.timestamp);
        day.ids.insert(ev.order_id);
        day.day.events.push_back(std::move(ev));
        day.lines.emplace_back(lineno, std::string(line));
    }

    for (auto& b : days) {
        if (b.fatal_line) {
            const std::string why = "day " + b.day.date + " aborted: non-monotone timestamp at line " +
                                    std::to_string(*b.fatal_line);
            for (auto& [n, text] : b.lines) result.rejects.push_back({n, why, std::move(text)});
            continue;
        }
        std::stable_sort(b.day.events.begin(), b.day.events.end(), [](const OrderEvent& a, const OrderEvent& c) {
            return a.timestamp != c.timestamp ? a.timestamp < c.timestamp : a.order_id < c.order_id;
        });
        result.days.push_back(std::move(b.day));
    }
    std::sort(result.rejects.begin(), result.rejects.end(),
              [](const Reject& a, const Reject& b) { return a.line < b.line; });
    return result;
}

inline ParseResult parse_stream(std::string_view text, const FormatSpec& fmt = {}) {
    std::istringstream in{std::string(text)};
    return parse_stream(in, fmt);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void write_event(std::ostream& out, const OrderEvent& e, const FormatSpec& fmt) {
    out << encode_timestamp(e.timestamp, fmt.timestamps) << ',' << e.trader_id << ',' << action_code(e.action, fmt)
        << ',' << format_price(e.price) << ',' << e.size << ',' << e.order_id;
    if (e.cancel_target) out << ',' << *e.cancel_target;
    out << '\n';
}

// Writes a self-describing stream (header plus #date/#prev_close directives).
// `banner` lines, if any, are emitted as "# " comments after the header.
inline void write_day(std::ostream& out, const DayStream& day, const FormatSpec& fmt = {},
                      std::string_view banner = {}) {
    out << kOrderFlowHeader << '\n';
    if (!banner.empty()) out << "# " << banner << '\n';
    out << "#date=" << day.date << '\n';
    out << "#prev_close=" << format_price(day.prev_close) << '\n';
    for (const auto& e : day.events) write_event(out, e, fmt);
}

inline std::string serialize_day(const DayStream& day, const FormatSpec& fmt = {}) {
    std::ostringstream out;
    write_day(out, day, fmt);
    return out.str();
}

// ---------------------------------------------------------------------------
// Day files: YYYYMMDD.csv plus a companion YYYYMMDD.meta (key=value lines)
// ---------------------------------------------------------------------------

struct DayMetadata {
    std::string date;
    Ticks prev_close = 0;
};

inline std::string format_metadata(const DayMetadata& m, std::string_view banner = {}) {
    std::string s;
    if (!banner.empty()) s += "# " + std::string(banner) + "\n";
    s += "date=" + m.date + "\nprev_close=" + format_price(m.prev_close) + "\n";
    return s;
}

inline DayMetadata parse_metadata(std::istream& in) {
    DayMetadata m;
    std::string raw;
    while (std::getline(in, raw)) {
        const auto line = detail::trim_cr(raw);
        if (line.empty() || line.starts_with('#')) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("metadata line without '='");
        const auto key = line.substr(0, eq);
        const auto value = line.substr(eq + 1);
        if (key == "date") {
            if (!detail::valid_date(value)) throw ParseError("bad metadata date");
            m.date = std::string(value);
        } else if (key == "prev_close") {
            const auto p = parse_price(value);
            if (!p) throw ParseError("bad metadata prev_close");
            m.prev_close = *p;
        }
    }
    return m;
}

// Loads one day file. The date comes from the file stem unless the stream or
// metadata says otherwise; prev_close from the companion .meta file.
inline ParseResult load_day_file(const std::filesystem::path& csv, FormatSpec fmt = {}) {
    std::ifstream in(csv);
    if (!in) throw ParseError("cannot open " + csv.string());
    const auto stem = csv.stem().string();
    if (detail::valid_date(stem)) fmt.default_date = stem;
    auto meta_path = csv;
    meta_path.replace_extension(".meta");
    std::optional<DayMetadata> meta;
    if (std::ifstream mf(meta_path); mf) {
        meta = parse_metadata(mf);
        fmt.default_prev_close = meta->prev_close;
        if (!meta->date.empty()) fmt.default_date = meta->date;
    }
    auto result = parse_stream(in, fmt);
    if (meta) {
        for (auto& d : result.days) {
            if (d.prev_close == 0) d.prev_close = meta->prev_close;
        }
    }
    return result;
}

}  // namespace lobnet

#pragma once

// File plumbing shared by the command-line pipeline: trade-ledger CSV,
// atomic writes, run manifests and number formatting.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lobnet/core.hpp"
#include "lobnet/orderflow.hpp"

namespace lobnet {

namespace fs = std::filesystem;

// Writes via a sibling temp file and rename, so readers never see partial output.
inline void atomic_write(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Shortest round-trippable-enough text for plot data; locale independent.
inline std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); }

// ---------------------------------------------------------------------------
// Manifest: "key = value" lines, '#' comments
// ---------------------------------------------------------------------------

struct Manifest {
    std::map<std::string, std::string> values;

    static Manifest parse(std::string_view text) {
        Manifest m;
        std::istringstream in{std::string(text)};
        std::string raw;
        std::size_t lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string line = trim(raw);
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("manifest line " + std::to_string(lineno) + ": expected key = value");
            m.values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        return m;
    }

    static Manifest load(const fs::path& path) {
        if (!fs::exists(path)) throw ConfigError("manifest not found: " + path.string());
        return parse(read_file(path));
    }

    std::optional<std::string> get(const std::string& key) const {
        const auto it = values.find(key);
        if (it == values.end()) return std::nullopt;
        return it->second;
    }

    std::string canonical() const {
        std::string s;
        for (const auto& [k, v] : values) s += k + "=" + v + "\n";
        return s;
    }

    std::string hash() const { return hex64(fnv1a64(canonical())); }
};

inline std::string banner_line(const std::string& manifest_hash) {
    return std::string(kToolVersion) + " manifest=" + manifest_hash;
}

// ---------------------------------------------------------------------------
// Trade ledger CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kLedgerColumns = "trade_id,timestamp,seller_id,buyer_id,price,size,phase,aggressor";

inline std::string format_ledger(const std::vector<Trade>& trades, const std::string& banner) {
    std::ostringstream out;
    out << "# " << banner << '\n' << kLedgerColumns << '\n';
    for (const auto& t : trades) {
        out << t.trade_id << ',' << encode_timestamp(t.timestamp, TimestampEncoding::PackedHmmsscc) << ','
            << t.seller_id << ',' << t.buyer_id << ',' << format_price(t.price) << ',' << t.size << ','
            << to_string(t.phase) << ',' << to_string(t.aggressor) << '\n';
    }
    return out.str();
}

inline std::vector<Trade> parse_ledger(std::string_view text) {
    std::vector<Trade> trades;
    std::istringstream in{std::string(text)};
    std::string raw;
    bool columns_seen = false;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = detail::trim_cr(raw);
        if (line.empty() || line.starts_with('#')) continue;
        if (!columns_seen) {
            if (line != kLedgerColumns) throw ParseError("ledger: unexpected column header");
            columns_seen = true;
            continue;
        }
        const auto f = detail::split(line, ',');
        const auto where = "ledger line " + std::to_string(lineno);
        if (f.size() != 8) throw ParseError(where + ": expected 8 fields");
        Trade t;
        const auto id = detail::parse_int<std::int64_t>(f[0]);
        const auto ts = decode_timestamp(f[1], TimestampEncoding::PackedHmmsscc);
        const auto price = parse_price(f[4]);
        const auto size = detail::parse_int<Shares>(f[5]);
        if (!id || !ts || !price || !size || f[2].empty() || f[3].empty()) throw ParseError(where + ": bad field");
        t.trade_id = *id;
        t.timestamp = *ts;
        t.seller_id = std::string(f[2]);
        t.buyer_id = std::string(f[3]);
        t.price = *price;
        t.size = *size;
        t.phase = phase_from_string(f[6]);
        t.aggressor = aggressor_from_string(f[7]);
        trades.push_back(std::move(t));
    }
    return trades;
}

// Days in a directory, identified by YYYYMMDD<suffix> files, in date order.
inline std::vector<std::pair<std::string, fs::path>> list_day_files(const fs::path& dir, std::string_view suffix) {
    std::vector<std::pair<std::string, fs::path>> out;
    if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() != 8 + suffix.size() || !name.ends_with(suffix)) continue;
        const auto date = name.substr(0, 8);
        if (!detail::valid_date(date)) continue;
        out.emplace_back(date, entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace lobnet

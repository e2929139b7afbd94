#pragma once

// Batch pipeline behind the lobnet tool: synthetic corpora, replay into trade
// ledgers, and the analysis stages that turn ledgers into plot data and
// reports. Every artifact starts with a banner naming the tool version and
// the hash of the effective settings.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lobnet/core.hpp"
#include "lobnet/fitnessmodel.hpp"
#include "lobnet/io.hpp"
#include "lobnet/matchengine.hpp"
#include "lobnet/orderflow.hpp"
#include "lobnet/parallel.hpp"
#include "lobnet/plfit.hpp"
#include "lobnet/synthgen.hpp"
#include "lobnet/tradenet.hpp"
#include "lobnet/tradestats.hpp"

namespace lobnet {

using Json = nlohmann::ordered_json;

// Manifest keys naming locations or stage choices; they never enter the hash.
inline const std::set<std::string>& path_keys() {
    static const std::set<std::string> keys{"data", "ledgers", "out", "reference", "stages", "analysis", "jobs"};
    return keys;
}

namespace detail {

template <class T>
T parse_setting(const std::string& key, const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError("setting " + key + ": cannot parse '" + v + "'");
    return out;
}

}  // namespace detail

struct PipelineSettings {
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    double significance = 0.01;
    int bootstrap = 1000;  // goodness-of-fit replicas per power-law fit
    int replicas = 1000;   // fitness-model networks per day
    double limit_fraction = kDefaultLimitFraction;
    std::size_t knn_bins = 18;
    std::size_t size_bins = 24;
    double size_threshold = 3000.0;
    std::size_t days = 0;  // synth only
    std::string size_basis = "auto";          // auto | submitted | executed; auto = submitted when order flow is given
    std::string fitness_pools = "executed";   // executed | submitted
    GenConfig gen;

    void apply(const Manifest& m) {
        using detail::parse_setting;
        for (const auto& [k, v] : m.values) {
            if (k == "seed") seed = parse_setting<std::uint64_t>(k, v);
            else if (k == "jobs") jobs = parse_setting<unsigned>(k, v);
            else if (k == "significance") significance = parse_setting<double>(k, v);
            else if (k == "bootstrap") bootstrap = parse_setting<int>(k, v);
            else if (k == "replicas") replicas = parse_setting<int>(k, v);
            else if (k == "limit_fraction") limit_fraction = parse_setting<double>(k, v);
            else if (k == "knn_bins") knn_bins = parse_setting<std::size_t>(k, v);
            else if (k == "size_bins") size_bins = parse_setting<std::size_t>(k, v);
            else if (k == "size_threshold") size_threshold = parse_setting<double>(k, v);
            else if (k == "days") days = parse_setting<std::size_t>(k, v);
            else if (k == "size_basis") size_basis = v;
            else if (k == "fitness_pools") fitness_pools = v;
            else if (k == "start_date") gen.date = v;
            else if (k == "prev_close") {
                const auto p = parse_price(v);
                if (!p) throw ConfigError("setting prev_close: expected a price like 10.00");
                gen.prev_close = *p;
            }
            else if (k == "traders") gen.traders = parse_setting<std::size_t>(k, v);
            else if (k == "events") gen.events = parse_setting<std::size_t>(k, v);
            else if (k == "size_exponent") gen.size_exponent = parse_setting<double>(k, v);
            else if (k == "size_xmin_lots") gen.size_xmin_lots = parse_setting<std::int64_t>(k, v);
            else if (k == "lot") gen.lot = parse_setting<Shares>(k, v);
            else if (k == "max_lots") gen.max_lots = parse_setting<std::int64_t>(k, v);
            else if (k == "marketable_prob") gen.marketable_prob = parse_setting<double>(k, v);
            else if (k == "cancel_prob") gen.cancel_prob = parse_setting<double>(k, v);
            else if (k == "walk_prob") gen.walk_prob = parse_setting<double>(k, v);
            else if (k == "passive_depth") gen.passive_depth = parse_setting<int>(k, v);
            else if (k == "cross_ticks") gen.cross_ticks = parse_setting<int>(k, v);
            else if (!path_keys().contains(k)) throw ConfigError("unknown manifest key: " + k);
        }
    }

    void validate() const {
        fit_config(0).validate();
        if (replicas < 1) throw ConfigError("replicas must be positive");
        if (jobs < 1) throw ConfigError("jobs must be positive");
        if (knn_bins < 1 || size_bins < 1) throw ConfigError("bin counts must be positive");
        if (size_basis != "auto" && size_basis != "submitted" && size_basis != "executed")
            throw ConfigError("size_basis must be auto, submitted or executed");
        if (fitness_pools != "executed" && fitness_pools != "submitted")
            throw ConfigError("fitness_pools must be executed or submitted");
        if (!(limit_fraction > 0.0 && limit_fraction < 1.0)) throw ConfigError("limit_fraction must lie in (0,1)");
        GenConfig g = gen;
        g.limit_fraction = limit_fraction;
        g.validate();
    }

    FitConfig fit_config(std::uint64_t fit_seed) const {
        FitConfig c;
        c.significance = significance;
        c.bootstrap_replicas = bootstrap;
        c.rng_seed = fit_seed;
        c.jobs = jobs;
        return c;
    }

    GenConfig gen_config() const {
        GenConfig g = gen;
        g.limit_fraction = limit_fraction;
        g.rng_seed = seed;
        return g;
    }

    // Every setting that can change an output byte.
    Manifest effective() const {
        Manifest m;
        auto& v = m.values;
        v["seed"] = std::to_string(seed);
        v["significance"] = fmt_num(significance);
        v["bootstrap"] = std::to_string(bootstrap);
        v["replicas"] = std::to_string(replicas);
        v["limit_fraction"] = fmt_num(limit_fraction);
        v["knn_bins"] = std::to_string(knn_bins);
        v["size_bins"] = std::to_string(size_bins);
        v["size_threshold"] = fmt_num(size_threshold);
        v["size_basis"] = size_basis;
        v["fitness_pools"] = fitness_pools;
        v["days"] = std::to_string(days);
        v["start_date"] = gen.date;
        v["prev_close"] = format_price(gen.prev_close);
        v["traders"] = std::to_string(gen.traders);
        v["events"] = std::to_string(gen.events);
        v["size_exponent"] = fmt_num(gen.size_exponent);
        v["size_xmin_lots"] = std::to_string(gen.size_xmin_lots);
        v["lot"] = std::to_string(gen.lot);
        v["max_lots"] = std::to_string(gen.max_lots);
        v["marketable_prob"] = fmt_num(gen.marketable_prob);
        v["cancel_prob"] = fmt_num(gen.cancel_prob);
        v["walk_prob"] = fmt_num(gen.walk_prob);
        v["passive_depth"] = std::to_string(gen.passive_depth);
        v["cross_ticks"] = std::to_string(gen.cross_ticks);
        return m;
    }

    std::string hash() const { return effective().hash(); }
    std::string banner() const { return banner_line(hash()); }
};

// ---------------------------------------------------------------------------
// Small CSV helpers
// ---------------------------------------------------------------------------

class CsvWriter {
  public:
    CsvWriter(const std::string& banner, std::string_view columns) { out_ << "# " << banner << '\n' << columns << '\n'; }

    CsvWriter& row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
        out_ << '\n';
        return *this;
    }

    std::string str() const { return out_.str(); }

  private:
    std::ostringstream out_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw ParseError("missing column " + name);
        return static_cast<std::size_t>(it - columns.begin());
    }
};

inline CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        const auto line = detail::trim_cr(raw);
        if (line.empty() || line.starts_with('#')) continue;
        std::vector<std::string> fields;
        for (const auto f : detail::split(line, ',')) fields.emplace_back(f);
        if (t.columns.empty()) {
            t.columns = std::move(fields);
        } else {
            if (fields.size() != t.columns.size()) throw ParseError("csv row with " + std::to_string(fields.size()) + " fields");
            t.rows.push_back(std::move(fields));
        }
    }
    return t;
}

inline std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

inline Json json_header(const PipelineSettings& s) {
    return Json{{"tool", std::string(kToolVersion)}, {"manifest", s.hash()}};
}

inline Json json_opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json fit_json(const PowerLawFit& f) {
    return Json{{"xmin", f.xmin},          {"gamma", f.gamma},
                {"alpha", f.alpha},        {"ks", f.ks_distance},
                {"p", f.p_value},          {"n", f.n},
                {"n_tail", f.n_tail},      {"max", f.max_value},
                {"sr", f.scaling_range},   {"sr_class", std::string(to_string(classify_scaling_range(f)))},
                {"passes", f.passes}};
}

inline Json outcome_json(const FitOutcome& o) { return o.fit ? fit_json(*o.fit) : Json{{"error", o.error}}; }

// Distinct values with the fraction of the sample at or above each.
inline std::vector<std::pair<double, double>> empirical_ccdf(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (i == 0 || xs[i] != xs[i - 1]) out.emplace_back(xs[i], static_cast<double>(xs.size() - i) / n);
    return out;
}

// Density on logarithmic bins: (geometric bin centre, count / (n * width)).
inline std::vector<std::pair<double, double>> log_binned_pdf(const std::vector<double>& xs, std::size_t bins) {
    std::vector<std::pair<double, double>> out;
    std::vector<double> pos;
    for (const double x : xs)
        if (x > 0) pos.push_back(x);
    if (pos.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(pos.begin(), pos.end());
    const double lo = std::log(*lo_it), hi = std::log(*hi_it);
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    std::vector<std::size_t> counts(bins, 0);
    for (const double x : pos) ++counts[std::min(bins - 1, static_cast<std::size_t>((std::log(x) - lo) / width))];
    const double n = static_cast<double>(pos.size());
    for (std::size_t b = 0; b < bins; ++b) {
        if (counts[b] == 0) continue;
        const double a = std::exp(lo + width * static_cast<double>(b)), z = std::exp(lo + width * static_cast<double>(b + 1));
        out.emplace_back(std::sqrt(a * z), static_cast<double>(counts[b]) / (n * (z - a)));
    }
    return out;
}

// Stage tags keep the random streams of different stages apart.
namespace stage_seed {
inline constexpr std::uint64_t kTradeSize = 1;
inline constexpr std::uint64_t kDegree = 2;
inline constexpr std::uint64_t kFitness = 3;
}  // namespace stage_seed

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

inline void write_manifest_copy(const fs::path& out, const PipelineSettings& s) {
    atomic_write(out / "manifest.txt", "# " + s.banner() + "\n" + s.effective().canonical());
}

inline std::vector<std::string> synth_corpus(const PipelineSettings& s, const fs::path& out) {
    if (s.days == 0) throw ConfigError("synth needs a positive day count (--days or days = N)");
    const auto days = generate_days(s.gen_config(), s.days);
    const auto banner = s.banner();
    std::vector<std::string> written;
    for (const auto& d : days) {
        std::ostringstream csv;
        write_day(csv, d, {}, banner);
        atomic_write(out / (d.date + ".csv"), csv.str());
        atomic_write(out / (d.date + ".meta"), format_metadata({d.date, d.prev_close}, banner));
        written.push_back(d.date);
    }
    write_manifest_copy(out, s);
    return written;
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

struct ReplaySummary {
    std::size_t days = 0, trades = 0, rejected_rows = 0, invalid_orders = 0, discrepancies = 0;
};

struct ReferenceRow {
    Ticks close = 0;
    Shares volume = 0;
};

inline std::map<std::string, ReferenceRow> load_reference(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("reference file not found: " + path.string());
    const auto t = parse_csv(read_file(path));
    const auto cd = t.col("date"), cc = t.col("close"), cv = t.col("volume");
    std::map<std::string, ReferenceRow> out;
    for (const auto& r : t.rows) {
        const auto close = parse_price(r[cc]);
        const auto vol = detail::parse_int<Shares>(r[cv]);
        if (!close || !vol) throw ParseError("reference row for " + r[cd] + " is malformed");
        out[r[cd]] = {*close, *vol};
    }
    return out;
}

inline ReplaySummary replay_corpus(const fs::path& data, const fs::path& out, const PipelineSettings& s,
                                   const std::optional<fs::path>& reference = std::nullopt) {
    const auto files = list_day_files(data, ".csv");
    if (files.empty()) throw ConfigError("no YYYYMMDD.csv day files in " + data.string());
    std::optional<std::map<std::string, ReferenceRow>> ref;
    if (reference) ref = load_reference(*reference);

    struct DayOut {
        DayStream day;
        DayReplay replay;
    };
    std::vector<ParseResult> parsed(files.size());
    parallel_for(files.size(), s.jobs, [&](std::size_t i) { parsed[i] = load_day_file(files[i].second); });

    std::vector<DayStream> days;
    std::vector<std::pair<std::string, Reject>> rejects;
    for (std::size_t i = 0; i < files.size(); ++i) {
        for (auto& d : parsed[i].days) days.push_back(std::move(d));
        for (auto& r : parsed[i].rejects) rejects.emplace_back(files[i].first, std::move(r));
    }
    std::stable_sort(days.begin(), days.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < days.size(); ++i)
        if (days[i].date == days[i - 1].date) throw ParseError("day " + days[i].date + " appears twice");

    std::vector<DayReplay> replays(days.size());
    ReplayOptions opts;
    opts.limit_fraction = s.limit_fraction;
    parallel_for(days.size(), s.jobs, [&](std::size_t i) { replays[i] = run_day(days[i], opts); });

    const auto banner = s.banner();
    ReplaySummary sum;
    sum.days = days.size();
    sum.rejected_rows = rejects.size();
    CsvWriter ratios(banner,
                     "date,prev_close,placed,placed_ask,placed_bid,executed,executed_ask,executed_bid,r,r_ask,r_bid,"
                     "invalid,canceled_at_close,trades,volume");
    CsvWriter disc(banner, "date,close_ref,close,price_diff,volume_ref,volume,volume_diff");
    for (std::size_t i = 0; i < days.size(); ++i) {
        const auto& d = days[i];
        const auto& r = replays[i];
        atomic_write(out / (d.date + ".trades.csv"), format_ledger(r.trades, banner));
        const auto stats = daily_market_stats(d.date, r.trades, d.prev_close);
        const auto& q = r.ratios;
        ratios.row({d.date, format_price(d.prev_close), std::to_string(q.placed), std::to_string(q.placed_ask),
                    std::to_string(q.placed_bid), std::to_string(q.executed), std::to_string(q.executed_ask),
                    std::to_string(q.executed_bid), fmt_opt(q.r), fmt_opt(q.r_ask), fmt_opt(q.r_bid),
                    std::to_string(r.invalid_orders), std::to_string(r.canceled_at_close),
                    std::to_string(r.trades.size()), std::to_string(stats.total_volume)});
        sum.trades += r.trades.size();
        sum.invalid_orders += r.invalid_orders;
        if (ref) {
            const auto it = ref->find(d.date);
            if (it == ref->end()) continue;
            const Ticks dp = stats.close - it->second.close;
            const Shares dv = stats.total_volume - it->second.volume;
            sum.discrepancies += dp != 0 || dv != 0;
            disc.row({d.date, format_price(it->second.close), format_price(stats.close),
                      (dp < 0 ? "-" : "") + format_price(dp < 0 ? -dp : dp), std::to_string(it->second.volume),
                      std::to_string(stats.total_volume), std::to_string(dv)});
        }
    }
    atomic_write(out / "ratios.csv", ratios.str());
    if (ref) atomic_write(out / "discrepancies.csv", disc.str());

    CsvWriter rej(banner, "date,line,reason");
    for (const auto& [date, r] : rejects) rej.row({date, std::to_string(r.line), r.reason});
    atomic_write(out / "rejects.csv", rej.str());
    write_manifest_copy(out, s);
    return sum;
}

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

struct LedgerDay {
    std::string date;
    std::vector<Trade> trades;
    Ticks prev_close = 0;
    std::optional<double> r, r_ask, r_bid;
    std::optional<DayStream> flow;  // present when the order flow was supplied
};

struct Corpus {
    std::vector<LedgerDay> days;
    bool has_flow = false;
};

inline Corpus load_corpus(const fs::path& ledgers, const std::optional<fs::path>& data, unsigned jobs = 1) {
    const auto files = list_day_files(ledgers, ".trades.csv");
    if (files.empty()) throw ConfigError("no YYYYMMDD.trades.csv ledgers in " + ledgers.string());
    Corpus c;
    c.days.resize(files.size());
    c.has_flow = data.has_value();
    parallel_for(files.size(), jobs, [&](std::size_t i) {
        auto& d = c.days[i];
        d.date = files[i].first;
        d.trades = parse_ledger(read_file(files[i].second));
        if (data) {
            const auto csv = *data / (d.date + ".csv");
            if (!fs::exists(csv)) throw ConfigError("order flow for " + d.date + " not found in " + data->string());
            auto parsed = load_day_file(csv);
            for (auto& day : parsed.days)
                if (day.date == d.date) d.flow = std::move(day);
            if (!d.flow) throw ParseError(csv.string() + " holds no day " + d.date);
            d.prev_close = d.flow->prev_close;
        }
    });
    if (const auto ratios = ledgers / "ratios.csv"; fs::exists(ratios)) {
        const auto t = parse_csv(read_file(ratios));
        const auto cd = t.col("date"), cp = t.col("prev_close"), cr = t.col("r"), ca = t.col("r_ask"), cb = t.col("r_bid");
        auto num = [](const std::string& f) -> std::optional<double> {
            if (f.empty()) return std::nullopt;
            return detail::parse_setting<double>("ratio", f);
        };
        for (auto& d : c.days) {
            for (const auto& row : t.rows) {
                if (row[cd] != d.date) continue;
                if (const auto p = parse_price(row[cp]); p && !d.flow) d.prev_close = *p;
                d.r = num(row[cr]);
                d.r_ask = num(row[ca]);
                d.r_bid = num(row[cb]);
            }
        }
    }
    return c;
}

inline const std::vector<std::string>& all_stages() {
    static const std::vector<std::string> s{"fit", "network", "knn", "corr", "fitness"};
    return s;
}

class Analysis {
  public:
    Analysis(const Corpus& corpus, PipelineSettings settings, fs::path out)
        : corpus_(corpus), s_(std::move(settings)), out_(std::move(out)), banner_(s_.banner()) {}

    const std::vector<std::string>& written() const { return written_; }

    void run(const std::vector<std::string>& stages) {
        for (const auto& st : stages) {
            if (st == "fit") trade_sizes();
            else if (st == "network") networks();
            else if (st == "knn") knn();
            else if (st == "corr") correlations();
            else if (st == "fitness") fitness();
            else throw ConfigError("unknown stage: " + st);
        }
        write_manifest_copy(out_, s_);
    }

    // Trade-size distributions: per-day fits, pooled fit, CCDFs and pooled density.
    void trade_sizes() {
        const auto& days = corpus_.days;
        const std::uint64_t base = derive_seed(s_.seed, stage_seed::kTradeSize);
        std::vector<std::vector<double>> samples(days.size());
        std::vector<double> pooled;
        for (std::size_t d = 0; d < days.size(); ++d) {
            samples[d] = to_doubles(trade_size_sample(days[d].trades));
            pooled.insert(pooled.end(), samples[d].begin(), samples[d].end());
        }
        std::vector<FitOutcome> fits(days.size());
        parallel_for(days.size(), s_.jobs, [&](std::size_t d) {
            auto cfg = s_.fit_config(derive_seed(base, d));
            cfg.jobs = 1;
            fits[d] = try_fit(samples[d], cfg);
        });
        const auto pooled_fit = try_fit(pooled, s_.fit_config(derive_seed(base, days.size())));

        CsvWriter batch(banner_, "date,xmin,gamma,sr_class,passes");
        std::vector<const FitOutcome*> ptrs;
        for (std::size_t d = 0; d < days.size(); ++d) {
            ptrs.push_back(&fits[d]);
            Json j = json_header(s_);
            j["date"] = days[d].date;
            j["sample"] = "trade_size";
            j["fit"] = outcome_json(fits[d]);
            write("fits/" + days[d].date + ".trade_size.json", json_text(j));
            if (const auto& f = fits[d].fit)
                batch.row({days[d].date, fmt_num(f->xmin), fmt_num(f->gamma),
                           std::string(to_string(classify_scaling_range(*f))), f->passes ? "1" : "0"});
            CsvWriter cc(banner_, "v,ccdf");
            for (const auto& [x, p] : empirical_ccdf(samples[d])) cc.row({fmt_num(x), fmt_num(p)});
            write("trade_size_ccdf/" + days[d].date + ".csv", cc.str());
        }
        write("trade_size_fits.csv", batch.str());

        CsvWriter pdf(banner_, "v,pdf");
        for (const auto& [x, p] : log_binned_pdf(pooled, 40)) pdf.row({fmt_num(x), fmt_num(p)});
        write("trade_size_pdf_pooled.csv", pdf.str());

        const auto sum = summarize_fits(ptrs);
        Json j = json_header(s_);
        j["days"] = days.size();
        j["summary"] = summary_json(sum);
        j["pooled"] = outcome_json(pooled_fit);
        write("trade_size_fits.json", json_text(j));
    }

    // Networks: edge lists, size metrics, average degrees, degree CCDFs and fits.
    void networks() {
        const auto& nets = network_list();
        const auto& recs = records();
        CsvWriter metrics(banner_, "date,N,N_ask,N_bid,N_e,r_LC,r_2LC,mean_k_ask,mean_k_bid,mean_k");
        CsvWriter avg(banner_, "date,mean_k_ask,mean_k_bid,mean_k,mean_s_ask,mean_s_bid");
        for (std::size_t d = 0; d < nets.size(); ++d) {
            const auto& net = nets[d];
            CsvWriter edges(banner_, "seller,buyer,weight");
            for (const auto& [e, w] : net.weights) edges.row({net.nodes[e.first], net.nodes[e.second], std::to_string(w)});
            write("edges/" + net.date + ".csv", edges.str());

            const auto m = network_metrics(net);
            metrics.row({m.date, std::to_string(m.N), std::to_string(m.N_ask), std::to_string(m.N_bid),
                         std::to_string(m.N_e), fmt_num(m.r_lc), fmt_num(m.r_2lc), fmt_num(m.mean_k_ask),
                         fmt_num(m.mean_k_bid), fmt_num(m.mean_k)});
            double sa = 0, sb = 0;
            std::size_t na = 0, nb = 0;
            for (const auto& r : recs[d]) {
                if (r.s_ask > 0) sa += static_cast<double>(r.s_ask), ++na;
                if (r.s_bid > 0) sb += static_cast<double>(r.s_bid), ++nb;
            }
            avg.row({m.date, fmt_num(m.mean_k_ask), fmt_num(m.mean_k_bid), fmt_num(m.mean_k),
                     na ? fmt_num(sa / static_cast<double>(na)) : "", nb ? fmt_num(sb / static_cast<double>(nb)) : ""});
            for (auto kind : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total}) {
                CsvWriter cc(banner_, "k,ccdf");
                for (const auto& [x, p] : empirical_ccdf(degree_sample(recs[d], kind))) cc.row({fmt_num(x), fmt_num(p)});
                write("degree_ccdf/" + net.date + "." + std::string(to_string(kind)) + ".csv", cc.str());
            }
        }
        write("network_metrics.csv", metrics.str());
        write("average_degrees.csv", avg.str());

        const auto& batch = degree_fits();
        Json summary = json_header(s_);
        summary["days"] = batch.days.size();
        for (auto kind : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total}) {
            const std::string name(to_string(kind));
            CsvWriter csv(banner_, "date,xmin,gamma,sr_class,passes");
            Json flagged = Json::array();
            for (const auto& day : batch.days) {
                const auto& o = day.get(kind);
                if (o.fit)
                    csv.row({day.date, fmt_num(o.fit->xmin), fmt_num(o.fit->gamma),
                             std::string(to_string(classify_scaling_range(*o.fit))), o.fit->passes ? "1" : "0"});
                else
                    flagged.push_back(Json{{"date", day.date}, {"error", o.error}});
            }
            write("degree_fits_" + name + ".csv", csv.str());
            const auto& sum = kind == DegreeKind::Ask ? batch.ask : kind == DegreeKind::Bid ? batch.bid : batch.total;
            summary[name] = summary_json(sum);
            summary[name]["flagged_days"] = flagged;
        }
        for (const auto& day : batch.days) {
            Json j = json_header(s_);
            j["date"] = day.date;
            for (auto kind : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total})
                j[std::string(to_string(kind))] = outcome_json(day.get(kind));
            write("fits/" + day.date + ".degree.json", json_text(j));
        }
        write("degree_fits.json", json_text(summary));
    }

    void knn() {
        const auto& nets = network_list();
        for (const auto side : {KnnSide::AskSide, KnnSide::BidSide}) {
            CsvWriter csv(banner_, "k_mean,knn_mean");
            for (const auto& b : knn_profile(nets, side, s_.knn_bins)) csv.row({fmt_num(b.k_mean), fmt_num(b.knn_mean)});
            write(side == KnnSide::AskSide ? "knn_ask.csv" : "knn_bid.csv", csv.str());
        }
    }

    // Daily series with their cross-correlations, and the size-degree scaling.
    void correlations() {
        const auto& nets = network_list();
        const auto& days = corpus_.days;
        CsvWriter series(banner_, "date,N,N_ask,N_bid,N_e,r,r_ask,r_bid,close,volatility,volume");
        std::map<std::string, std::vector<double>> col;
        for (std::size_t d = 0; d < days.size(); ++d) {
            const auto m = network_metrics(nets[d]);
            const auto st = daily_market_stats(days[d].date, days[d].trades, days[d].prev_close);
            series.row({days[d].date, std::to_string(m.N), std::to_string(m.N_ask), std::to_string(m.N_bid),
                        std::to_string(m.N_e), fmt_opt(days[d].r), fmt_opt(days[d].r_ask), fmt_opt(days[d].r_bid),
                        format_price(st.close), fmt_num(st.volatility), std::to_string(st.total_volume)});
            col["price"].push_back(static_cast<double>(st.close) / 100.0);
            col["N"].push_back(static_cast<double>(m.N));
            col["N_ask"].push_back(static_cast<double>(m.N_ask));
            col["N_bid"].push_back(static_cast<double>(m.N_bid));
            col["N_e"].push_back(static_cast<double>(m.N_e));
            col["r_LC"].push_back(m.r_lc);
            col["r_2LC"].push_back(m.r_2lc);
            col["volatility"].push_back(st.volatility);
            col["volume"].push_back(static_cast<double>(st.total_volume));
        }
        write("daily_series.csv", series.str());

        Json corr = json_header(s_);
        corr["days"] = days.size();
        Json pairs = Json::array();
        const std::pair<const char*, const char*> wanted[] = {
            {"price", "N"},           {"price", "N_ask"},       {"price", "N_bid"},  {"price", "N_e"},
            {"r_LC", "volatility"},   {"r_2LC", "volatility"},  {"r_LC", "volume"},  {"r_2LC", "volume"},
        };
        for (const auto& [a, b] : wanted) {
            Json p{{"x", a}, {"y", b}};
            try {
                p["pearson"] = pearson(col[a], col[b]);
            } catch (const std::invalid_argument& e) {
                p["pearson"] = nullptr;
                p["note"] = e.what();
            }
            pairs.push_back(p);
        }
        corr["pairs"] = pairs;
        write("correlations.json", json_text(corr));

        std::vector<DegreeRecord> pooled;
        for (const auto& r : records()) pooled.insert(pooled.end(), r.begin(), r.end());
        Json sd = json_header(s_);
        sd["size_basis"] = size_basis() == SizeBasis::Submitted ? "submitted" : "executed";
        sd["fit_threshold"] = s_.size_threshold;
        for (const auto side : {TradeSide::Ask, TradeSide::Bid}) {
            const std::string name = side == TradeSide::Ask ? "ask" : "bid";
            std::vector<SizeDegreeBin> bins;
            Json fit;
            try {
                const auto prof = degree_size_correlation(pooled, side, s_.size_bins, s_.size_threshold);
                bins = prof.bins;
                fit = Json{{"beta", prof.beta}, {"beta_stderr", prof.beta_stderr}, {"fit_points", prof.fit_points}};
            } catch (const FitError& e) {
                bins = size_degree_bins(pooled, side, s_.size_bins);
                fit = Json{{"beta", nullptr}, {"error", e.what()}};
            }
            CsvWriter csv(banner_, "s_mean,s_std,k_mean,k_std");
            for (const auto& b : bins) csv.row({fmt_num(b.s_mean), fmt_num(b.s_std), fmt_num(b.k_mean), fmt_num(b.k_std)});
            write("size_degree_" + name + ".csv", csv.str());
            sd[name] = fit;
        }
        write("size_degree.json", json_text(sd));
    }

    // Fitness-model ensembles, one per day. Pools come from executed volumes
    // unless the settings ask for submitted ones.
    void fitness() {
        const auto& days = corpus_.days;
        const auto& real = degree_fits();
        const std::uint64_t base = derive_seed(s_.seed, stage_seed::kFitness);
        const bool submitted_pools = s_.fitness_pools == "submitted";
        if (submitted_pools && !corpus_.has_flow) throw ConfigError("fitness_pools = submitted needs --data");
        std::vector<EnsembleReport> reports;
        CsvWriter pm(banner_, "date,p_model_ask,p_model_bid,p_model_total");
        for (std::size_t d = 0; d < days.size(); ++d) {
            EnsembleInput in{days[d].date,
                             submitted_pools ? pools_from_submissions(*days[d].flow, s_.limit_fraction)
                                             : pools_from_trades(days[d].trades),
                             real.days[d]};
            Json j = json_header(s_);
            j["date"] = days[d].date;
            if (in.pools.sellers.empty() || in.pools.buyers.empty()) {
                j["skipped"] = "no trades";
                write("fitness/" + days[d].date + ".json", json_text(j));
                continue;
            }
            EnsembleConfig cfg;
            cfg.replicas = s_.replicas;
            cfg.fit = s_.fit_config(0);
            cfg.rng_seed = derive_seed(base, d);
            cfg.jobs = s_.jobs;
            auto rep = run_ensemble(in, cfg);
            j["replicas"] = rep.replicas;
            for (auto kind : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total}) {
                const auto& e = rep.get(kind);
                j[std::string(to_string(kind))] = Json{{"p_model", e.p_model},
                                                       {"gamma_model_mean", e.gamma_model_mean},
                                                       {"gamma_model_std", e.gamma_model_std},
                                                       {"fitted", e.fitted},
                                                       {"gamma_real", json_opt(e.gamma_real)},
                                                       {"real_passes", e.real_passes ? Json(*e.real_passes) : Json(nullptr)}};
            }
            write("fitness/" + days[d].date + ".json", json_text(j));
            pm.row({rep.date, fmt_num(rep.ask.p_model), fmt_num(rep.bid.p_model), fmt_num(rep.total.p_model)});
            reports.push_back(std::move(rep));
        }
        write("fitness_p_model.csv", pm.str());
        Json cmp = json_header(s_);
        for (auto kind : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total}) {
            const auto c = compare_exponents(reports, kind);
            CsvWriter csv(banner_, "gamma_real,gamma_model_mean,gamma_model_std");
            for (const auto& r : c.rows)
                csv.row({fmt_num(r.gamma_real), fmt_num(r.gamma_model_mean), fmt_num(r.gamma_model_std)});
            write("fitness_gamma_" + std::string(to_string(kind)) + ".csv", csv.str());
            cmp[std::string(to_string(kind))] =
                Json{{"days_compared", c.rows.size()}, {"fraction_model_above", json_opt(c.fraction_model_above)}};
        }
        write("fitness_comparison.json", json_text(cmp));
    }

  private:
    static Json summary_json(const ExponentSummary& s) {
        return Json{{"fitted", s.fitted},         {"flagged", s.flagged},   {"pass_rate", s.pass_rate},
                    {"gamma_mean", s.gamma_mean}, {"gamma_std", s.gamma_std}};
    }

    void write(const std::string& rel, const std::string& content) {
        atomic_write(out_ / rel, content);
        written_.push_back(rel);
    }

    const std::vector<TradingNetwork>& network_list() {
        if (!nets_) {
            nets_.emplace(corpus_.days.size());
            parallel_for(corpus_.days.size(), s_.jobs,
                         [&](std::size_t d) { (*nets_)[d] = build_network(corpus_.days[d].trades, corpus_.days[d].date); });
        }
        return *nets_;
    }

    SizeBasis size_basis() const {
        if (s_.size_basis == "executed") return SizeBasis::Executed;
        if (s_.size_basis == "submitted") {
            if (!corpus_.has_flow) throw ConfigError("size_basis = submitted needs --data");
            return SizeBasis::Submitted;
        }
        return corpus_.has_flow ? SizeBasis::Submitted : SizeBasis::Executed;
    }

    const std::vector<std::vector<DegreeRecord>>& records() {
        if (!records_) {
            const auto& nets = network_list();
            records_.emplace(nets.size());
            for (std::size_t d = 0; d < nets.size(); ++d) {
                auto& r = (*records_)[d];
                r = degrees(nets[d]);
                const auto& flow = corpus_.days[d].flow;
                attach_order_sizes(r, nets[d], flow ? &*flow : nullptr, size_basis(), s_.limit_fraction);
            }
        }
        return *records_;
    }

    const DegreeFitBatch& degree_fits() {
        if (!fits_) fits_ = degree_distribution_fits(network_list(), s_.fit_config(derive_seed(s_.seed, stage_seed::kDegree)));
        return *fits_;
    }

    const Corpus& corpus_;
    PipelineSettings s_;
    fs::path out_;
    std::string banner_;
    std::vector<std::string> written_;
    std::optional<std::vector<TradingNetwork>> nets_;
    std::optional<std::vector<std::vector<DegreeRecord>>> records_;
    std::optional<DegreeFitBatch> fits_;
};

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

// Human-readable digest of the JSON summaries found in an analysis directory.
inline std::string analysis_report(const fs::path& dir) {
    std::ostringstream out;
    std::size_t found = 0;
    auto load = [&](const char* name) -> std::optional<Json> {
        const auto p = dir / name;
        if (!fs::exists(p)) return std::nullopt;
        ++found;
        return Json::parse(read_file(p));
    };
    auto num = [](const Json& j) { return j.is_number() ? fmt_num(j.get<double>()) : std::string("n/a"); };
    auto summary = [&](const std::string& label, const Json& s) {
        out << "  " << label << ": fitted " << s["fitted"] << ", flagged " << s["flagged"] << ", pass rate "
            << num(s["pass_rate"]) << ", gamma " << num(s["gamma_mean"]) << " +- " << num(s["gamma_std"]) << '\n';
    };
    if (auto j = load("trade_size_fits.json")) {
        out << "trade sizes (" << (*j)["days"] << " days)\n";
        summary("daily", (*j)["summary"]);
        const auto& p = (*j)["pooled"];
        if (p.contains("gamma"))
            out << "  pooled: gamma " << num(p["gamma"]) << ", xmin " << num(p["xmin"]) << ", p " << num(p["p"]) << '\n';
        else
            out << "  pooled: " << p["error"].get<std::string>() << '\n';
    }
    if (auto j = load("degree_fits.json")) {
        out << "degree distributions (" << (*j)["days"] << " days)\n";
        for (const char* k : {"ask", "bid", "total"}) summary(k, (*j)[k]);
    }
    if (auto j = load("correlations.json")) {
        out << "daily correlations\n";
        for (const auto& p : (*j)["pairs"])
            out << "  " << p["x"].get<std::string>() << " vs " << p["y"].get<std::string>() << ": " << num(p["pearson"])
                << '\n';
    }
    if (auto j = load("size_degree.json")) {
        out << "size-degree scaling (" << (*j)["size_basis"].get<std::string>() << " sizes)\n";
        for (const char* k : {"ask", "bid"}) out << "  beta_" << k << ": " << num((*j)[k]["beta"]) << '\n';
    }
    if (auto j = load("fitness_comparison.json")) {
        out << "fitness model\n";
        for (const char* k : {"ask", "bid", "total"})
            out << "  " << k << ": " << (*j)[k]["days_compared"] << " days compared, model above real "
                << num((*j)[k]["fraction_model_above"]) << '\n';
    }
    if (found == 0) throw ConfigError("no analysis summaries in " + dir.string());
    return out.str();
}

}  // namespace lobnet

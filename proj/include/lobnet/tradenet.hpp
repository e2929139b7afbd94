#pragma once

// Daily directed trading networks (seller -> buyer, weighted by traded
// shares) and their observables: degrees, weak components, nearest-neighbour
// degree profiles, size-degree scaling and degree-distribution fits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lobnet/core.hpp"
#include "lobnet/orderflow.hpp"
#include "lobnet/parallel.hpp"
#include "lobnet/plfit.hpp"

namespace lobnet {

using NodeIndex = std::size_t;

struct TradingNetwork {
    std::string date;
    std::vector<TraderId> nodes;  // sorted; index = NodeIndex
    std::map<std::pair<NodeIndex, NodeIndex>, Shares> weights;  // (seller, buyer) -> v_ij, self-loops included
    std::vector<bool> sold, bought;  // per node

    std::size_t size() const { return nodes.size(); }

    // Edges between distinct traders (a_ij = 1, i != j).
    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& [e, w] : weights) n += e.first != e.second;
        return n;
    }

    Shares total_volume() const {
        Shares v = 0;
        for (const auto& [e, w] : weights) v += w;
        return v;
    }

    std::optional<NodeIndex> find(const TraderId& id) const {
        const auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
        if (it == nodes.end() || *it != id) return std::nullopt;
        return static_cast<NodeIndex>(it - nodes.begin());
    }

    std::optional<Shares> weight(const TraderId& seller, const TraderId& buyer) const {
        const auto s = find(seller), b = find(buyer);
        if (!s || !b) return std::nullopt;
        const auto it = weights.find({*s, *b});
        if (it == weights.end()) return std::nullopt;
        return it->second;
    }
};

// Accumulates seller -> buyer flows; node order in the result is sorted by
// trader id, so the network does not depend on the order flows arrive in.
class NetworkBuilder {
  public:
    explicit NetworkBuilder(std::string date = {}) : date_(std::move(date)) {}

    void add_flow(const TraderId& seller, const TraderId& buyer, Shares v) {
        const auto s = intern(seller), b = intern(buyer);
        flows_[{s, b}] += v;
    }

    TradingNetwork build() const {
        TradingNetwork net;
        net.date = date_;
        std::vector<std::size_t> order(names_.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return names_[a] < names_[b]; });
        std::vector<NodeIndex> remap(names_.size());
        net.nodes.reserve(names_.size());
        for (std::size_t r = 0; r < order.size(); ++r) {
            remap[order[r]] = r;
            net.nodes.push_back(names_[order[r]]);
        }
        net.sold.assign(net.nodes.size(), false);
        net.bought.assign(net.nodes.size(), false);
        for (const auto& [e, w] : flows_) {
            const NodeIndex s = remap[e.first], b = remap[e.second];
            net.weights[{s, b}] += w;
            net.sold[s] = true;
            net.bought[b] = true;
        }
        return net;
    }

  private:
    std::size_t intern(const TraderId& id) {
        const auto [it, inserted] = ids_.try_emplace(id, names_.size());
        if (inserted) names_.push_back(id);
        return it->second;
    }

    std::string date_;
    std::unordered_map<TraderId, std::size_t> ids_;
    std::vector<TraderId> names_;
    std::map<std::pair<std::size_t, std::size_t>, Shares> flows_;
};

inline TradingNetwork build_network(std::span<const Trade> trades, std::string date = {}) {
    NetworkBuilder b(std::move(date));
    for (const auto& t : trades) b.add_flow(t.seller_id, t.buyer_id, t.size);
    return b.build();
}

// Distinct counterparties, self-loops excluded.
struct Adjacency {
    std::vector<std::vector<NodeIndex>> buyers_of;   // out-neighbours
    std::vector<std::vector<NodeIndex>> sellers_of;  // in-neighbours
};

inline Adjacency adjacency(const TradingNetwork& net) {
    Adjacency adj;
    adj.buyers_of.resize(net.size());
    adj.sellers_of.resize(net.size());
    for (const auto& [e, w] : net.weights) {
        if (e.first == e.second || w <= 0) continue;
        adj.buyers_of[e.first].push_back(e.second);
        adj.sellers_of[e.second].push_back(e.first);
    }
    return adj;
}

// ---------------------------------------------------------------------------
// Degrees
// ---------------------------------------------------------------------------

struct DegreeRecord {
    TraderId trader_id;
    std::size_t k_ask = 0;  // distinct buyers sold to
    std::size_t k_bid = 0;  // distinct sellers bought from
    std::size_t k = 0;
    Shares s_ask = 0;
    Shares s_bid = 0;
};

inline std::vector<DegreeRecord> degrees(const TradingNetwork& net) {
    std::vector<DegreeRecord> out(net.size());
    for (NodeIndex i = 0; i < net.size(); ++i) out[i].trader_id = net.nodes[i];
    for (const auto& [e, w] : net.weights) {
        if (e.first == e.second || w <= 0) continue;
        ++out[e.first].k_ask;
        ++out[e.second].k_bid;
    }
    for (auto& r : out) r.k = r.k_ask + r.k_bid;
    return out;
}

enum class SizeBasis : std::uint8_t { Submitted, Executed };

// Per-side order sizes s for each record. Submitted sums every admitted
// submission of the day; Executed sums the trader's traded shares.
inline void attach_order_sizes(std::vector<DegreeRecord>& records, const TradingNetwork& net, const DayStream* day,
                               SizeBasis basis, double limit_fraction = kDefaultLimitFraction) {
    std::unordered_map<TraderId, std::pair<Shares, Shares>> sizes;  // ask, bid
    if (basis == SizeBasis::Submitted) {
        if (!day) throw std::invalid_argument("submitted order sizes need the day's order flow");
        for (const auto& e : day->events) {
            if (!e.is_submission() || !admission_check(e, day->prev_close, limit_fraction).valid) continue;
            auto& s = sizes[e.trader_id];
            (e.side() == Side::Ask ? s.first : s.second) += e.size;
        }
    } else {
        for (const auto& [e, w] : net.weights) {
            sizes[net.nodes[e.first]].first += w;
            sizes[net.nodes[e.second]].second += w;
        }
    }
    for (auto& r : records) {
        const auto it = sizes.find(r.trader_id);
        if (it == sizes.end()) continue;
        r.s_ask = it->second.first;
        r.s_bid = it->second.second;
    }
}

// ---------------------------------------------------------------------------
// Size metrics and components
// ---------------------------------------------------------------------------

struct ComponentSummary {
    std::vector<std::size_t> labels;  // per node; components numbered by smallest member
    std::vector<std::size_t> sizes;   // per label
    double r_lc = 0.0;
    double r_2lc = 0.0;
};

// Weakly connected components (edge direction ignored).
inline ComponentSummary components(const TradingNetwork& net) {
    const std::size_t n = net.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& [e, w] : net.weights) {
        const auto a = root(e.first), b = root(e.second);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    ComponentSummary out;
    out.labels.resize(n);
    std::unordered_map<std::size_t, std::size_t> label_of_root;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = root(i);
        const auto [it, inserted] = label_of_root.try_emplace(r, out.sizes.size());
        if (inserted) out.sizes.push_back(0);
        out.labels[i] = it->second;
        ++out.sizes[it->second];
    }
    if (n > 0) {
        std::vector<std::size_t> sorted = out.sizes;
        std::sort(sorted.rbegin(), sorted.rend());
        out.r_lc = static_cast<double>(sorted[0]) / static_cast<double>(n);
        out.r_2lc = sorted.size() > 1 ? static_cast<double>(sorted[1]) / static_cast<double>(n) : 0.0;
    }
    return out;
}

struct NetworkSizeMetrics {
    std::string date;
    std::size_t N = 0, N_ask = 0, N_bid = 0, N_e = 0;
    double r_lc = 0.0, r_2lc = 0.0;
    double mean_k_ask = 0.0, mean_k_bid = 0.0, mean_k = 0.0;
};

// N_ask / N_bid count traders who sold / bought that day.
inline NetworkSizeMetrics network_metrics(const TradingNetwork& net) {
    NetworkSizeMetrics m;
    m.date = net.date;
    m.N = net.size();
    m.N_ask = static_cast<std::size_t>(std::count(net.sold.begin(), net.sold.end(), true));
    m.N_bid = static_cast<std::size_t>(std::count(net.bought.begin(), net.bought.end(), true));
    m.N_e = net.edge_count();
    if (m.N == 0) return m;
    const auto comp = components(net);
    m.r_lc = comp.r_lc;
    m.r_2lc = comp.r_2lc;
    const double n = static_cast<double>(m.N);
    m.mean_k_ask = static_cast<double>(m.N_e) / n;
    m.mean_k_bid = static_cast<double>(m.N_e) / n;
    m.mean_k = 2.0 * static_cast<double>(m.N_e) / n;
    return m;
}

// ---------------------------------------------------------------------------
// Nearest-neighbour degree
// ---------------------------------------------------------------------------

enum class KnnSide : std::uint8_t { AskSide, BidSide };

struct NodeKnn {
    double k = 0;
    double knn = 0;
};

// AskSide: every seller's k_ask paired with the mean k_bid of the buyers it
// sold to. BidSide mirrors it.
inline std::vector<NodeKnn> knn_values(const TradingNetwork& net, KnnSide side) {
    const auto adj = adjacency(net);
    std::vector<NodeKnn> out;
    for (NodeIndex i = 0; i < net.size(); ++i) {
        const auto& nbrs = side == KnnSide::AskSide ? adj.buyers_of[i] : adj.sellers_of[i];
        if (nbrs.empty()) continue;
        double sum = 0;
        for (const auto j : nbrs)
            sum += static_cast<double>(side == KnnSide::AskSide ? adj.sellers_of[j].size() : adj.buyers_of[j].size());
        out.push_back({static_cast<double>(nbrs.size()), sum / static_cast<double>(nbrs.size())});
    }
    return out;
}

struct KnnBin {
    double k_mean = 0;
    double knn_mean = 0;
    std::size_t count = 0;
};

// Assigns values to `bins` equal divisions of [ln min k, ln max k]; returns
// the bin index of each value. All-equal degrees collapse to one bin.
inline std::vector<std::size_t> log_bin_indices(std::span<const double> values, std::size_t bins) {
    std::vector<std::size_t> idx(values.size(), 0);
    if (values.empty()) return idx;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = std::log(*lo_it), hi = std::log(*hi_it);
    const double width = (hi - lo) / static_cast<double>(bins);
    if (!(width > 0.0)) return idx;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto b = static_cast<std::size_t>(std::floor((std::log(values[i]) - lo) / width));
        idx[i] = std::min(b, bins - 1);
    }
    return idx;
}

inline std::vector<KnnBin> knn_profile(std::span<const TradingNetwork> ensemble, KnnSide side,
                                       std::size_t bins = 18) {
    if (ensemble.empty()) throw std::invalid_argument("knn_profile: empty ensemble");
    std::vector<NodeKnn> pooled;
    for (const auto& net : ensemble) {
        auto v = knn_values(net, side);
        pooled.insert(pooled.end(), v.begin(), v.end());
    }
    std::vector<double> ks;
    ks.reserve(pooled.size());
    for (const auto& p : pooled) ks.push_back(p.k);
    const auto idx = log_bin_indices(ks, bins);
    std::vector<KnnBin> acc(bins);
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        acc[idx[i]].k_mean += pooled[i].k;
        acc[idx[i]].knn_mean += pooled[i].knn;
        ++acc[idx[i]].count;
    }
    std::vector<KnnBin> out;
    for (auto& b : acc) {
        if (b.count == 0) continue;
        b.k_mean /= static_cast<double>(b.count);
        b.knn_mean /= static_cast<double>(b.count);
        out.push_back(b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Size-degree scaling, k ~ s^beta
// ---------------------------------------------------------------------------

struct SizeDegreeBin {
    double s_mean = 0, s_std = 0;
    double k_mean = 0, k_std = 0;
    std::size_t count = 0;
};

struct SizeDegreeProfile {
    std::vector<SizeDegreeBin> bins;  // nonempty bins, ascending s
    double beta = 0;
    double beta_stderr = 0;
    std::size_t fit_points = 0;
};

enum class TradeSide : std::uint8_t { Ask, Bid };

// Log-binned (s, k) means and sample deviations over records with s > 0.
inline std::vector<SizeDegreeBin> size_degree_bins(std::span<const DegreeRecord> records, TradeSide side,
                                                   std::size_t bins = 24) {
    std::vector<double> s, k;
    for (const auto& r : records) {
        const double sv = static_cast<double>(side == TradeSide::Ask ? r.s_ask : r.s_bid);
        if (!(sv > 0)) continue;
        s.push_back(sv);
        k.push_back(static_cast<double>(side == TradeSide::Ask ? r.k_ask : r.k_bid));
    }
    std::vector<SizeDegreeBin> out;
    if (s.empty()) return out;
    const auto idx = log_bin_indices(s, bins);
    struct Acc {
        double s = 0, ss = 0, k = 0, kk = 0;
        std::size_t n = 0;
    };
    std::vector<Acc> acc(bins);
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto& a = acc[idx[i]];
        a.s += s[i];
        a.ss += s[i] * s[i];
        a.k += k[i];
        a.kk += k[i] * k[i];
        ++a.n;
    }
    for (const auto& a : acc) {
        if (a.n == 0) continue;
        const double n = static_cast<double>(a.n);
        SizeDegreeBin b;
        b.count = a.n;
        b.s_mean = a.s / n;
        b.k_mean = a.k / n;
        if (a.n > 1) {
            b.s_std = std::sqrt(std::max(0.0, (a.ss - n * b.s_mean * b.s_mean) / (n - 1)));
            b.k_std = std::sqrt(std::max(0.0, (a.kk - n * b.k_mean * b.k_mean) / (n - 1)));
        }
        out.push_back(b);
    }
    return out;
}

// OLS of ln k_mean on ln s_mean over bins with s_mean above the threshold.
inline SizeDegreeProfile degree_size_correlation(std::span<const DegreeRecord> records, TradeSide side,
                                                 std::size_t bins = 24, double fit_threshold = 3000.0) {
    SizeDegreeProfile out;
    out.bins = size_degree_bins(records, side, bins);
    if (out.bins.empty()) throw FitError("no records with positive order size");
    std::vector<double> xs, ys;
    for (const auto& b : out.bins) {
        if (b.s_mean > fit_threshold && b.k_mean > 0) {
            xs.push_back(std::log(b.s_mean));
            ys.push_back(std::log(b.k_mean));
        }
    }
    out.fit_points = xs.size();
    if (xs.size() < 2) throw FitError("fewer than two bins above the size threshold");
    const double m = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    out.beta = sxy / sxx;
    if (xs.size() > 2) {
        const double a = my - out.beta * mx;
        double ssr = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = ys[i] - a - out.beta * xs[i];
            ssr += r * r;
        }
        out.beta_stderr = std::sqrt(ssr / (m - 2.0) / sxx);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Degree distribution fits
// ---------------------------------------------------------------------------

enum class DegreeKind : std::uint8_t { Ask, Bid, Total };

inline std::string_view to_string(DegreeKind k) {
    switch (k) {
        case DegreeKind::Ask: return "ask";
        case DegreeKind::Bid: return "bid";
        case DegreeKind::Total: return "total";
    }
    return "total";
}

// Positive degrees of the requested kind.
inline std::vector<double> degree_sample(std::span<const DegreeRecord> records, DegreeKind kind) {
    std::vector<double> out;
    for (const auto& r : records) {
        const std::size_t k = kind == DegreeKind::Ask ? r.k_ask : kind == DegreeKind::Bid ? r.k_bid : r.k;
        if (k > 0) out.push_back(static_cast<double>(k));
    }
    return out;
}

struct FitOutcome {
    std::optional<PowerLawFit> fit;
    std::string error;  // set when the fit could not be made; the day is flagged
};

inline FitOutcome try_fit(std::span<const double> sample, const FitConfig& cfg) {
    try {
        return {fit_power_law(sample, cfg), {}};
    } catch (const FitError& e) {
        return {std::nullopt, e.what()};
    }
}

struct DayDegreeFits {
    std::string date;
    FitOutcome ask, bid, total;

    const FitOutcome& get(DegreeKind k) const {
        return k == DegreeKind::Ask ? ask : k == DegreeKind::Bid ? bid : total;
    }
};

struct ExponentSummary {
    double gamma_mean = 0, gamma_std = 0;
    double pass_rate = 0;     // over days with a fit
    std::size_t fitted = 0;
    std::size_t flagged = 0;  // days without a fit
};

struct DegreeFitBatch {
    std::vector<DayDegreeFits> days;
    ExponentSummary ask, bid, total;
};

inline ExponentSummary summarize_fits(std::span<const FitOutcome* const> outcomes) {
    ExponentSummary s;
    std::vector<double> gammas;
    std::size_t passed = 0;
    for (const auto* o : outcomes) {
        if (!o->fit) {
            ++s.flagged;
            continue;
        }
        gammas.push_back(o->fit->gamma);
        passed += o->fit->passes;
    }
    s.fitted = gammas.size();
    if (gammas.empty()) return s;
    const double n = static_cast<double>(gammas.size());
    s.gamma_mean = std::accumulate(gammas.begin(), gammas.end(), 0.0) / n;
    double var = 0;
    for (const double g : gammas) var += (g - s.gamma_mean) * (g - s.gamma_mean);
    s.gamma_std = gammas.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    s.pass_rate = static_cast<double>(passed) / n;
    return s;
}

// Three fits per day (ask, bid, total degree), days in parallel. Each day's
// fits use seeds derived from the config seed and the day's position.
inline DegreeFitBatch degree_distribution_fits(std::span<const TradingNetwork> networks, const FitConfig& cfg) {
    DegreeFitBatch batch;
    batch.days.resize(networks.size());
    parallel_for(networks.size(), cfg.jobs, [&](std::size_t d) {
        const auto recs = degrees(networks[d]);
        auto& day = batch.days[d];
        day.date = networks[d].date;
        for (auto kind : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total}) {
            FitConfig c = cfg;
            c.jobs = 1;
            c.rng_seed = derive_seed(cfg.rng_seed, d * 3 + static_cast<std::size_t>(kind));
            const auto sample = degree_sample(recs, kind);
            FitOutcome o = try_fit(sample, c);
            (kind == DegreeKind::Ask ? day.ask : kind == DegreeKind::Bid ? day.bid : day.total) = std::move(o);
        }
    });
    for (auto kind : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total}) {
        std::vector<const FitOutcome*> os;
        for (const auto& d : batch.days) os.push_back(&d.get(kind));
        (kind == DegreeKind::Ask ? batch.ask : kind == DegreeKind::Bid ? batch.bid : batch.total) = summarize_fits(os);
    }
    return batch;
}

}  // namespace lobnet

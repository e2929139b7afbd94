#pragma once

// Fitness-model synthetic trading networks: each trader's order size is its
// fitness; random seller/buyer pairs trade min(remaining) until a pool empties.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>
#include <utility>

#include "lobnet/core.hpp"
#include "lobnet/orderflow.hpp"
#include "lobnet/parallel.hpp"
#include "lobnet/plfit.hpp"
#include "lobnet/random.hpp"
#include "lobnet/tradenet.hpp"

namespace lobnet {

struct FitnessAgent {
    TraderId trader_id;
    Shares remaining = 0;
};

struct FitnessPools {
    std::vector<FitnessAgent> sellers;
    std::vector<FitnessAgent> buyers;
};

// Executed volume per trader and side. Both pools carry the day's total
// traded volume, so the simulation exhausts them together.
inline FitnessPools pools_from_trades(std::span<const Trade> trades) {
    std::map<TraderId, Shares> sold, bought;
    for (const auto& t : trades) {
        sold[t.seller_id] += t.size;
        bought[t.buyer_id] += t.size;
    }
    FitnessPools p;
    for (auto& [id, v] : sold) p.sellers.push_back({id, v});
    for (auto& [id, v] : bought) p.buyers.push_back({id, v});
    return p;
}

// Submitted volume per trader and side; the pools generally differ in total
// and the simulation stops when the smaller one empties.
inline FitnessPools pools_from_submissions(const DayStream& day, double limit_fraction = kDefaultLimitFraction) {
    std::map<TraderId, Shares> asks, bids;
    for (const auto& e : day.events) {
        if (!e.is_submission() || !admission_check(e, day.prev_close, limit_fraction).valid) continue;
        (e.side() == Side::Ask ? asks : bids)[e.trader_id] += e.size;
    }
    FitnessPools p;
    for (auto& [id, v] : asks) p.sellers.push_back({id, v});
    for (auto& [id, v] : bids) p.buyers.push_back({id, v});
    return p;
}

struct FitnessMatch {
    std::size_t seller = 0;  // index into the initial seller pool
    std::size_t buyer = 0;
    Shares size = 0;
};

// The raw match sequence. Agents are drawn uniformly from the live pools and
// removed when their remaining size hits zero.
inline std::vector<FitnessMatch> simulate_matches(std::span<const FitnessAgent> sellers,
                                                  std::span<const FitnessAgent> buyers, Rng& rng) {
    if (sellers.empty() || buyers.empty()) throw std::invalid_argument("fitness pools must be nonempty");
    struct Live {
        std::size_t origin;
        Shares remaining;
    };
    auto load = [](std::span<const FitnessAgent> pool) {
        std::vector<Live> live;
        live.reserve(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (pool[i].remaining <= 0) throw std::invalid_argument("fitness must be positive");
            live.push_back({i, pool[i].remaining});
        }
        return live;
    };
    auto live_sellers = load(sellers);
    auto live_buyers = load(buyers);
    std::vector<FitnessMatch> matches;
    while (!live_sellers.empty() && !live_buyers.empty()) {
        const auto si = rng.below(live_sellers.size());
        const auto bi = rng.below(live_buyers.size());
        auto& s = live_sellers[si];
        auto& b = live_buyers[bi];
        const Shares v = std::min(s.remaining, b.remaining);
        matches.push_back({s.origin, b.origin, v});
        s.remaining -= v;
        b.remaining -= v;
        if (s.remaining == 0) {
            live_sellers[si] = live_sellers.back();
            live_sellers.pop_back();
        }
        if (b.remaining == 0) {
            live_buyers[bi] = live_buyers.back();
            live_buyers.pop_back();
        }
    }
    return matches;
}

// Repeated pairings of one seller and buyer accumulate on a single edge.
inline TradingNetwork simulate_day(std::span<const FitnessAgent> sellers, std::span<const FitnessAgent> buyers, Rng& rng,
                                   std::string date = {}) {
    const auto matches = simulate_matches(sellers, buyers, rng);
    NetworkBuilder b(std::move(date));
    for (const auto& m : matches) b.add_flow(sellers[m.seller].trader_id, buyers[m.buyer].trader_id, m.size);
    return b.build();
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

struct EnsembleInput {
    std::string date;
    FitnessPools pools;
    std::optional<DayDegreeFits> real;  // fits of the empirical network, when available
};

struct EnsembleConfig {
    int replicas = 1000;
    FitConfig fit;
    std::uint64_t rng_seed = 0;
    unsigned jobs = 1;
};

struct DegreeEnsemble {
    double p_model = 0;  // fraction of replicas whose fit passes
    double gamma_model_mean = 0;
    double gamma_model_std = 0;
    std::size_t fitted = 0;
    std::optional<double> gamma_real;
    std::optional<bool> real_passes;
};

struct EnsembleReport {
    std::string date;
    int replicas = 0;
    DegreeEnsemble ask, bid, total;

    const DegreeEnsemble& get(DegreeKind k) const {
        return k == DegreeKind::Ask ? ask : k == DegreeKind::Bid ? bid : total;
    }
    DegreeEnsemble& get(DegreeKind k) { return k == DegreeKind::Ask ? ask : k == DegreeKind::Bid ? bid : total; }
};

inline EnsembleReport run_ensemble(const EnsembleInput& input, const EnsembleConfig& cfg) {
    if (cfg.replicas < 1) throw ConfigError("ensemble needs at least one replica");
    cfg.fit.validate();
    const std::size_t R = static_cast<std::size_t>(cfg.replicas);
    struct ReplicaFits {
        std::optional<PowerLawFit> fits[3];
    };
    std::vector<ReplicaFits> results(R);
    parallel_for(R, cfg.jobs, [&](std::size_t r) {
        const std::uint64_t seed = derive_seed(cfg.rng_seed, r);
        Rng rng(seed);
        const auto net = simulate_day(input.pools.sellers, input.pools.buyers, rng, input.date);
        const auto recs = degrees(net);
        for (auto kind : {DegreeKind::Ask, DegreeKind::Bid, DegreeKind::Total}) {
            FitConfig fc = cfg.fit;
            fc.jobs = 1;
            fc.rng_seed = derive_seed(seed, 1 + static_cast<std::uint64_t>(kind));
            const auto sample = degree_sample(recs, kind);
            auto outcome = try_fit(sample, fc);
            results[r].fits[static_cast<int>(kind)] = std::move(outcome.fit);
        }
    });

    EnsembleReport rep;
    rep.date = input.date;
    rep.replicas = cfg.replicas;
    const std::pair<DegreeKind, DegreeEnsemble*> slots[] = {
        {DegreeKind::Ask, &rep.ask}, {DegreeKind::Bid, &rep.bid}, {DegreeKind::Total, &rep.total}};
    for (const auto& [kind, slot] : slots) {
        auto& e = *slot;
        std::vector<double> gammas;
        std::size_t passed = 0;
        for (const auto& rf : results) {
            const auto& f = rf.fits[static_cast<int>(kind)];
            if (!f) continue;
            gammas.push_back(f->gamma);
            passed += f->passes;
        }
        e.fitted = gammas.size();
        e.p_model = static_cast<double>(passed) / static_cast<double>(R);
        if (!gammas.empty()) {
            const double n = static_cast<double>(gammas.size());
            double sum = 0;
            for (const double g : gammas) sum += g;
            e.gamma_model_mean = sum / n;
            double var = 0;
            for (const double g : gammas) var += (g - e.gamma_model_mean) * (g - e.gamma_model_mean);
            e.gamma_model_std = gammas.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        }
        if (input.real) {
            const auto& o = input.real->get(kind);
            if (o.fit) {
                e.gamma_real = o.fit->gamma;
                e.real_passes = o.fit->passes;
            }
        }
    }
    return rep;
}

struct ExponentComparisonRow {
    std::string date;
    double gamma_real = 0;
    double gamma_model_mean = 0;
    double gamma_model_std = 0;
};

struct ExponentComparison {
    std::vector<ExponentComparisonRow> rows;
    std::optional<double> fraction_model_above;  // ties at two decimals count one half
};

// Days enter the comparison when both the empirical fit and the model fits passed.
inline ExponentComparison compare_exponents(std::span<const EnsembleReport> reports, DegreeKind kind) {
    ExponentComparison out;
    double above = 0;
    for (const auto& r : reports) {
        const auto& e = r.get(kind);
        if (!e.gamma_real || !e.real_passes.value_or(false) || e.fitted == 0 || e.p_model <= 0) continue;
        out.rows.push_back({r.date, *e.gamma_real, e.gamma_model_mean, e.gamma_model_std});
        const auto model = std::llround(e.gamma_model_mean * 100.0);
        const auto real = std::llround(*e.gamma_real * 100.0);
        above += model > real ? 1.0 : model == real ? 0.5 : 0.0;
    }
    if (!out.rows.empty()) out.fraction_model_above = above / static_cast<double>(out.rows.size());
    return out;
}

}  // namespace lobnet

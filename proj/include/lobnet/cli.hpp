#pragma once

// Command-line front end. Exit codes: 0 ok, 1 runtime failure, 2 usage or
// configuration error.

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lobnet/pipeline.hpp"

namespace lobnet {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline std::vector<std::string> parse_stage_list(const std::string& text) {
    std::vector<std::string> wanted;
    for (const auto part : split(text, ',')) {
        const std::string st(part);
        if (st.empty()) continue;
        if (std::find(all_stages().begin(), all_stages().end(), st) == all_stages().end())
            throw ConfigError("unknown stage: " + st);
        wanted.push_back(st);
    }
    if (wanted.empty()) throw ConfigError("empty stage list");
    // Run in pipeline order regardless of how they were listed.
    std::vector<std::string> ordered;
    for (const auto& st : all_stages())
        if (std::find(wanted.begin(), wanted.end(), st) != wanted.end()) ordered.push_back(st);
    return ordered;
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Order-book replay, daily trading networks and power-law statistics.", "lobnet"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string config;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    double significance = 0.01;
    int replicas = 1000, bootstrap = 1000;
    app.add_option("--config", config, "manifest file of key = value settings");
    app.add_option("--seed", seed, "master seed; 0 when omitted");
    app.add_option("--jobs", jobs, "worker threads");
    app.add_option("--significance", significance, "KS-test significance level");
    app.add_option("--replicas", replicas, "fitness-model networks per day");
    app.add_option("--bootstrap", bootstrap, "goodness-of-fit bootstrap replicas per fit");

    std::map<std::string, std::string> val;
    std::size_t days = 0, events = 0, traders = 0;

    auto sub = [&](const char* name, const char* help) {
        auto* s = app.add_subcommand(name, help);
        s->fallthrough();
        return s;
    };
    auto* synth = sub("synth", "generate synthetic order-flow day files");
    synth->add_option("--days", days, "number of trading days");
    synth->add_option("--events", events, "events per day");
    synth->add_option("--traders", traders, "trader population");
    synth->add_option("--out", val["out"], "output directory");

    auto* replay = sub("replay", "replay day files into trade ledgers and ratios");
    replay->add_option("--data", val["data"], "directory of YYYYMMDD.csv day files");
    replay->add_option("--out", val["out"], "output directory");
    replay->add_option("--reference", val["reference"], "date,close,volume series to cross-check against");

    auto add_analysis = [&](CLI::App* s) {
        s->add_option("--ledgers", val["ledgers"], "directory written by replay");
        s->add_option("--data", val["data"], "day files, for submitted order sizes");
        s->add_option("--out", val["out"], "output directory");
    };
    auto* analyze = sub("analyze", "run every analysis stage");
    add_analysis(analyze);
    analyze->add_option("--stages", val["stages"], "comma-separated subset of fit,network,knn,corr,fitness");
    std::map<std::string, CLI::App*> stage_cmds;
    for (const auto& [name, help] : std::vector<std::pair<const char*, const char*>>{
             {"fit", "trade-size power-law fits"},
             {"network", "edge lists, size metrics and degree fits"},
             {"knn", "nearest-neighbour degree profiles"},
             {"corr", "daily series, correlations and size-degree scaling"},
             {"fitness", "fitness-model ensembles"}}) {
        stage_cmds[name] = sub(name, help);
        add_analysis(stage_cmds[name]);
    }
    auto* report = sub("report", "summarize an analysis directory");
    report->add_option("--analysis", val["analysis"], "directory written by analyze");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    auto given = [&](const std::string& flag) {
        const auto* o = cmd->get_option_no_throw(flag);
        return o != nullptr && o->count() > 0;
    };
    try {
        Manifest manifest;
        if (app.count("--config")) manifest = Manifest::load(config);
        PipelineSettings s;
        s.apply(manifest);
        if (app.count("--seed")) s.seed = seed;
        if (app.count("--jobs")) s.jobs = jobs;
        if (app.count("--significance")) s.significance = significance;
        if (app.count("--replicas")) s.replicas = replicas;
        if (app.count("--bootstrap")) s.bootstrap = bootstrap;
        if (given("--days")) s.days = days;
        if (given("--events")) s.gen.events = events;
        if (given("--traders")) s.gen.traders = traders;
        s.validate();

        auto path = [&](const std::string& key) -> std::optional<fs::path> {
            if (given("--" + key)) return fs::path(val[key]);
            if (const auto v = manifest.get(key)) return fs::path(*v);
            return std::nullopt;
        };
        auto need = [&](const std::string& key) {
            const auto p = path(key);
            if (!p) throw ConfigError(name + " needs --" + key);
            return *p;
        };

        if (name == "synth") {
            const auto dates = synth_corpus(s, need("out"));
            out << "wrote " << dates.size() << " day files to " << need("out").string() << '\n';
        } else if (name == "replay") {
            const auto r = replay_corpus(need("data"), need("out"), s, path("reference"));
            out << "replayed " << r.days << " days: " << r.trades << " trades, " << r.rejected_rows << " rejected rows, "
                << r.invalid_orders << " invalid orders";
            if (path("reference")) out << ", " << r.discrepancies << " days differ from the reference";
            out << '\n';
        } else if (name == "report") {
            out << analysis_report(need("analysis"));
        } else {
            std::vector<std::string> stages{name};
            if (name == "analyze") {
                const auto listed = given("--stages") ? std::optional<std::string>(val["stages"]) : manifest.get("stages");
                stages = listed ? detail::parse_stage_list(*listed) : all_stages();
            }
            const auto corpus = load_corpus(need("ledgers"), path("data"), s.jobs);
            Analysis a(corpus, s, need("out"));
            a.run(stages);
            out << "wrote " << a.written().size() << " files to " << need("out").string() << '\n';
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n\n" << cmd->help();
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

inline int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    return run_cli(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace lobnet

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lobnet/cli.hpp"
#include "lobnet/matchengine.hpp"
#include "fixtures.hpp"
#include "random_days.hpp"
#include "reference_matcher.hpp"

using namespace lobnet;
namespace fs = std::filesystem;

namespace {

class TempDir {
  public:
    explicit TempDir(const std::string& tag)
        : path_(fs::temp_directory_path() / ("lobnet_cli_" + tag + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string operator/(const std::string& sub) const { return (path_ / sub).string(); }

  private:
    fs::path path_;
};

struct Run {
    int code;
    std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
    return files;
}

void write_day(const fs::path& dir, const DayStream& d) {
    fs::create_directories(dir);
    atomic_write(dir / (d.date + ".csv"), serialize_day(d));
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

// Synthesizes and replays a small corpus; returns (data, ledgers) paths.
std::pair<std::string, std::string> corpus(const TempDir& t, int days, int events, const std::string& seed = "3") {
    const auto data = t / "data", led = t / "ledgers";
    EXPECT_EQ(cli({"--seed", seed, "synth", "--days", std::to_string(days), "--events", std::to_string(events),
                   "--traders", "300", "--out", data})
                  .code,
              0);
    EXPECT_EQ(cli({"replay", "--data", data, "--out", led}).code, 0);
    return {data, led};
}

}  // namespace

TEST(Cli, SynthFiveDaysDeterministic) {
    TempDir t("synth");
    ASSERT_EQ(cli({"synth", "--days", "5", "--seed", "7", "--events", "2000", "--out", t / "a"}).code, 0);
    ASSERT_EQ(cli({"--seed", "7", "synth", "--days", "5", "--events", "2000", "--out", t / "b"}).code, 0);
    const auto a = tree(t.path() / "a"), b = tree(t.path() / "b");
    std::size_t csv = 0;
    for (const auto& [name, body] : a) csv += name.ends_with(".csv");
    EXPECT_EQ(csv, 5u);
    EXPECT_EQ(a, b);
    ASSERT_EQ(cli({"synth", "--days", "5", "--seed", "8", "--events", "2000", "--out", t / "c"}).code, 0);
    EXPECT_NE(tree(t.path() / "c"), a);
}

TEST(Cli, SameManifestSameChecksums) {
    TempDir t("manifest");
    std::ofstream(t / "m.txt") << "# small corpus\nseed = 11\ndays = 2\nevents = 1500\ntraders = 100\n";
    ASSERT_EQ(cli({"--config", t / "m.txt", "synth", "--out", t / "a"}).code, 0);
    ASSERT_EQ(cli({"--config", t / "m.txt", "synth", "--out", t / "b"}).code, 0);
    const auto a = tree(t.path() / "a");
    EXPECT_EQ(a, tree(t.path() / "b"));
    // The copied manifest reproduces the run on its own.
    ASSERT_EQ(cli({"--config", (t.path() / "a" / "manifest.txt").string(), "synth", "--out", t / "c"}).code, 0);
    EXPECT_EQ(a, tree(t.path() / "c"));
}

TEST(Cli, UsageErrorsExitTwo) {
    auto r = cli({"--config", "/nonexistent/lobnet.conf", "synth", "--out", "/tmp/unused"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    r = cli({});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_EQ(cli({"synth", "--bogus"}).code, 2);
    EXPECT_EQ(cli({"synth"}).code, 2);  // no --out
    EXPECT_EQ(cli({"--bootstrap", "10", "synth", "--out", "/tmp/unused"}).code, 2);
    EXPECT_EQ(cli({"analyze", "--ledgers", "/nonexistent", "--out", "/tmp/unused", "--stages", "fit,nope"}).code, 2);
}

TEST(Cli, ToolBinaryExitCodes) {
    auto status = [](const std::string& args) {
        const int s = std::system((std::string(LOBNET_TOOL_PATH) + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    EXPECT_EQ(status("--version"), 0);
    EXPECT_EQ(status("--config /nonexistent/lobnet.conf synth --out /tmp/unused"), 2);
    EXPECT_EQ(status("report --analysis /nonexistent/dir"), 2);
}

TEST(Cli, ReplayThreeAskDay) {
    TempDir t("three");
    write_day(t.path() / "data", fixtures::five_ask_day());
    const auto r = cli({"replay", "--data", t / "data", "--out", t / "led"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ledger = parse_ledger(read_file(t.path() / "led" / "20030102.trades.csv"));
    ASSERT_EQ(ledger.size(), 3u);
    EXPECT_EQ(ledger[0].seller_id, "h");
    EXPECT_EQ(ledger[1].seller_id, "i");
    EXPECT_EQ(ledger[2].seller_id, "j");
    EXPECT_EQ(ledger[0].size, 200);
    EXPECT_EQ(ledger[1].size, 100);
    EXPECT_EQ(ledger[2].size, 200);
    for (const auto& tr : ledger) EXPECT_EQ(tr.buyer_id, "x");
}

TEST(Cli, NoCrossingDay) {
    TempDir t("nocross");
    DayStream d;
    d.date = "20030102";
    d.prev_close = 1000;
    d.events.push_back(fixtures::submit(1, hms(10, 0, 0, 0), "a", Action::SubmitAsk, 1010, 100));
    d.events.push_back(fixtures::submit(2, hms(10, 0, 1, 0), "b", Action::SubmitBid, 1000, 100));
    write_day(t.path() / "data", d);
    ASSERT_EQ(cli({"replay", "--data", t / "data", "--out", t / "led"}).code, 0);
    EXPECT_TRUE(parse_ledger(read_file(t.path() / "led" / "20030102.trades.csv")).empty());
    const auto ratios = parse_csv(read_file(t.path() / "led" / "ratios.csv"));
    ASSERT_EQ(ratios.rows.size(), 1u);
    EXPECT_EQ(ratios.rows[0][ratios.col("r")], "0");
}

TEST(Cli, ReferenceFromOracleHasNoDiscrepancies) {
    TempDir t("reference");
    const auto data = t.path() / "data";
    std::ostringstream ref;
    ref << "date,close,volume\n";
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        auto d = testdata::random_day(seed, 200);
        d.date = "200301" + std::string(seed < 9 ? "0" : "") + std::to_string(seed + 1);
        write_day(data, d);
        // The oracle sees what survives parsing, as the tool does.
        const auto parsed = parse_stream(serialize_day(d));
        const auto o = parsed.days.empty() ? refmatch::Result{} : refmatch::replay(parsed.days[0]);
        Shares vol = 0;
        for (const auto& tr : o.trades) vol += tr.size;
        ref << d.date << "," << format_price(o.trades.empty() ? d.prev_close : o.trades.back().price) << "," << vol << "\n";
    }
    std::ofstream(t / "ref.csv") << ref.str();
    const auto r = cli({"replay", "--data", data.string(), "--out", t / "led", "--reference", t / "ref.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find(", 0 days differ"), std::string::npos) << r.out;
    const auto disc = parse_csv(read_file(t.path() / "led" / "discrepancies.csv"));
    EXPECT_EQ(disc.rows.size(), 12u);
    for (const auto& row : disc.rows) {
        EXPECT_EQ(row[disc.col("price_diff")], "0.00");
        EXPECT_EQ(row[disc.col("volume_diff")], "0");
    }
}

TEST(Cli, AnalyzeIsIdempotent) {
    TempDir t("idem");
    const auto [data, led] = corpus(t, 3, 2500);
    const std::vector<std::string> base{"--bootstrap", "100", "--replicas", "3", "--seed", "5"};
    auto args = base;
    for (const auto& a : {"analyze", "--ledgers", led.c_str(), "--data", data.c_str()}) args.push_back(a);
    auto a1 = args, a2 = args;
    a1.insert(a1.end(), {"--out", t / "x"});
    a2.insert(a2.end(), {"--out", t / "y", "--jobs", "3"});
    ASSERT_EQ(cli(a1).code, 0);
    ASSERT_EQ(cli(a2).code, 0);
    EXPECT_EQ(tree(t.path() / "x"), tree(t.path() / "y"));
    ASSERT_EQ(cli(a1).code, 0);  // rerun over the previous output
    EXPECT_EQ(tree(t.path() / "x"), tree(t.path() / "y"));
}

TEST(Cli, SingleDayGivesSingleRowBatches) {
    TempDir t("single");
    const auto [data, led] = corpus(t, 1, 3000);
    ASSERT_EQ(cli({"--bootstrap", "100", "--replicas", "3", "analyze", "--ledgers", led, "--data", data, "--out", t / "a"}).code, 0);
    for (const char* f : {"trade_size_fits.csv", "network_metrics.csv", "average_degrees.csv", "degree_fits_total.csv",
                          "daily_series.csv", "fitness_p_model.csv"}) {
        const auto tab = parse_csv(read_file(t.path() / "a" / f));
        EXPECT_EQ(tab.rows.size(), 1u) << f;
    }
}

TEST(Cli, FullCorpusWritesEveryPlotFile) {
    TempDir t("full");
    const auto [data, led] = corpus(t, 20, 3000);
    const auto r = cli({"--bootstrap", "100", "--replicas", "3", "analyze", "--ledgers", led, "--data", data, "--out", t / "a"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto a = t.path() / "a";
    std::vector<std::string> want{"daily_series.csv",        "trade_size_fits.csv",     "trade_size_pdf_pooled.csv",
                                  "trade_size_fits.json",    "network_metrics.csv",     "average_degrees.csv",
                                  "degree_fits_ask.csv",     "degree_fits_bid.csv",     "degree_fits_total.csv",
                                  "degree_fits.json",        "knn_ask.csv",             "knn_bid.csv",
                                  "size_degree_ask.csv",     "size_degree_bid.csv",     "size_degree.json",
                                  "correlations.json",       "fitness_p_model.csv",     "fitness_gamma_ask.csv",
                                  "fitness_gamma_bid.csv",   "fitness_gamma_total.csv", "fitness_comparison.json"};
    const auto dates = list_day_files(led, ".trades.csv");
    ASSERT_EQ(dates.size(), 20u);
    for (const auto& [date, path] : dates) {
        want.push_back("trade_size_ccdf/" + date + ".csv");
        want.push_back("edges/" + date + ".csv");
        want.push_back("fitness/" + date + ".json");
        for (const char* k : {"ask", "bid", "total"}) want.push_back("degree_ccdf/" + date + "." + k + ".csv");
    }
    for (const auto& f : want) EXPECT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(parse_csv(read_file(a / "daily_series.csv")).rows.size(), 20u);
    const auto cols = parse_csv(read_file(a / "daily_series.csv")).columns;
    EXPECT_EQ(cols, (std::vector<std::string>{"date", "N", "N_ask", "N_bid", "N_e", "r", "r_ask", "r_bid", "close",
                                              "volatility", "volume"}));
    EXPECT_EQ(parse_csv(read_file(a / "fitness_gamma_total.csv")).columns,
              (std::vector<std::string>{"gamma_real", "gamma_model_mean", "gamma_model_std"}));
    EXPECT_EQ(parse_csv(read_file(a / "fitness_p_model.csv")).columns,
              (std::vector<std::string>{"date", "p_model_ask", "p_model_bid", "p_model_total"}));

    // Every artifact, including the replay outputs, carries the banner.
    for (const auto& dir : {a, fs::path(led)}) {
        for (const auto& [name, body] : tree(dir)) {
            if (name.ends_with(".json")) {
                const auto j = Json::parse(body);
                EXPECT_EQ(j.at("tool").get<std::string>(), std::string(kToolVersion)) << name;
                EXPECT_TRUE(j.contains("manifest")) << name;
            } else {
                EXPECT_TRUE(first_line(body).starts_with("# " + std::string(kToolVersion) + " manifest="))
                    << name;
            }
        }
    }

    const auto rep = cli({"report", "--analysis", t / "a"});
    ASSERT_EQ(rep.code, 0) << rep.err;
    EXPECT_FALSE(rep.out.empty());
}

TEST(Cli, StageSubcommandsMatchAnalyze) {
    TempDir t("stages");
    const auto [data, led] = corpus(t, 2, 2500);
    const std::vector<std::string> common{"--bootstrap", "100", "--replicas", "3"};
    auto run = [&](const std::string& cmd, const std::string& out) {
        auto args = common;
        args.insert(args.end(), {cmd, "--ledgers", led, "--data", data, "--out", out});
        return cli(args).code;
    };
    ASSERT_EQ(run("analyze", t / "all"), 0);
    for (const char* st : {"fit", "network", "knn", "corr", "fitness"}) ASSERT_EQ(run(st, t / "parts"), 0) << st;
    EXPECT_EQ(tree(t.path() / "all"), tree(t.path() / "parts"));
}

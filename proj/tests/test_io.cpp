#include <doctest.h>

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evtrisk/errors.hpp"
#include "evtrisk/io.hpp"
#include "evtrisk/timeparse.hpp"

using namespace evtrisk;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "evtrisk_io_test";
    fs::create_directories(dir);
    return dir;
}

fs::path write_fixture(const std::string& name, const std::string& content) {
    const fs::path file = scratch_dir() / name;
    std::ofstream out(file, std::ios::binary);
    out << content;
    return file;
}

std::int64_t epoch(const char* iso) { return parse_iso8601(iso).epoch_sec; }

}  // namespace

TEST_SUITE("io") {

TEST_CASE("bar loader keeps good rows and reports the bad ones by line") {
    const fs::path file = write_fixture("bars.csv",
                                        "timestamp,price,volume\n"
                                        "2024-01-02T09:30:00+08:00,10.5,1000\n"
                                        "2024-01-02T09:40:00+08:00,10.6,900\n"
                                        "not-a-time,10.7,900\n"
                                        "2024-01-02T09:50:00+08:00,0,900\n"
                                        "2024-01-02T10:00:00+08:00,10.8,-1\n"
                                        "2024-01-02T10:10:00+08:00,10.8\n"
                                        "2024-01-02T09:35:00+08:00,10.9,100\n"
                                        "2024-01-02T10:10:00+08:00,11.0,50\n");
    const SessionSpec cn{{{570, 690}, {780, 900}}, 10};
    const BarCsvResult res = load_bars_csv(file.string(), cn, "SYM");

    CHECK(res.bars.symbol == "SYM");
    REQUIRE(res.bars.bars.size() == 3);
    CHECK(res.bars.bars[0].epoch_sec == epoch("2024-01-02T01:30:00Z"));
    CHECK(res.bars.bars[0].tz_offset_min == 480);
    CHECK(res.bars.bars[0].local_date == 20240102);
    CHECK(res.bars.bars[0].local_minute == 570);
    CHECK(res.bars.bars[0].price == doctest::Approx(10.5));
    CHECK(res.bars.bars[0].volume == doctest::Approx(1000.0));
    CHECK(res.bars.bars[2].price == doctest::Approx(11.0));

    REQUIRE(res.skipped.size() == 5);
    CHECK(res.skipped[0].line == 4);
    CHECK(res.skipped[0].reason == "bad timestamp");
    CHECK(res.skipped[1].line == 5);
    CHECK(res.skipped[1].reason == "bad price");
    CHECK(res.skipped[2].line == 6);
    CHECK(res.skipped[2].reason == "bad volume");
    CHECK(res.skipped[3].line == 7);
    CHECK(res.skipped[3].reason == "expected 3 fields");
    CHECK(res.skipped[4].line == 8);
    CHECK(res.skipped[4].reason == "timestamp not increasing");
}

TEST_CASE("bar loader accepts CRLF files and skips blank lines") {
    const fs::path file = write_fixture("bars_crlf.csv",
                                        "timestamp,price,volume\r\n"
                                        "2024-01-02T09:30:00+08:00,10.5,1000\r\n"
                                        "\r\n"
                                        "2024-01-02T09:40:00+08:00,10.6,900\r\n");
    const SessionSpec cn{{{570, 690}, {780, 900}}, 10};
    const BarCsvResult res = load_bars_csv(file.string(), cn, "SYM");
    CHECK(res.bars.bars.size() == 2);
    CHECK(res.skipped.empty());
}

TEST_CASE("bar loader hard errors: header, emptiness, unreadable path") {
    const SessionSpec cn{{{570, 690}, {780, 900}}, 10};
    const fs::path wrong = write_fixture("wrong_header.csv", "time,price,volume\n");
    CHECK_THROWS_AS((void)load_bars_csv(wrong.string(), cn, "S"), DataError);
    const fs::path empty = write_fixture("empty.csv", "");
    CHECK_THROWS_AS((void)load_bars_csv(empty.string(), cn, "S"), DataError);
    const fs::path headers_only = write_fixture("headers_only.csv", "timestamp,price,volume\n");
    CHECK_THROWS_AS((void)load_bars_csv(headers_only.string(), cn, "S"), DataError);
    const fs::path all_bad =
        write_fixture("all_bad.csv", "timestamp,price,volume\nx,1,1\ny,2,2\n");
    CHECK_THROWS_AS((void)load_bars_csv(all_bad.string(), cn, "S"), DataError);
    CHECK_THROWS_AS(
        (void)load_bars_csv((scratch_dir() / "missing.csv").string(), cn, "S"),
        DataError);
}

TEST_CASE("csv reports render frozen layouts in UTC") {
    SlrSeries s;
    s.points.push_back({epoch("2024-01-05T02:00:00Z"), 0, 0, 1, 1.5});
    s.points.push_back({epoch("2024-01-05T02:10:00Z"), 0, 0, 2, -2.25});
    CHECK(slr_csv(s) ==
          "timestamp,slr\n"
          "2024-01-05T02:00:00Z,1.5\n"
          "2024-01-05T02:10:00Z,-2.25\n");

    MaximaSeries ms;
    ms.maxima.push_back({1000, 2.5, false});
    ms.maxima.push_back({2000, 3.0, true});
    CHECK(maxima_csv(ms) ==
          "block_end,maximum\n"
          "1000,2.5\n"
          "2000,3\n");

    RiskTrajectory traj;
    RiskRecord ok;
    ok.t = 100;
    ok.params = {-0.125, 2.5, 0.5};
    ok.ks_pvalue = 0.75;
    ok.mpi = 0.0;
    ok.var99 = 3.5;
    ok.pass = true;
    RiskRecord gap;
    gap.t = 200;
    gap.missing = true;
    traj.records = {ok, gap};
    CHECK(trajectory_csv(traj) ==
          "t,xi,mu,sigma,ks_pvalue,mpi,var99,pass\n"
          "100,-0.125,2.5,0.5,0.75,0,3.5,1\n"
          "200,nan,nan,nan,nan,nan,nan,0\n");

    JumpReport jr;
    jr.symbol = "SYM";
    jr.jumps.push_back({epoch("2024-02-01T06:30:00Z"), -6.5, 3.25});
    CHECK(jumps_csv(jr) ==
          "timestamp,slr,threshold\n"
          "2024-02-01T06:30:00Z,-6.5,3.25\n");
}

TEST_CASE("backtest csv renders dates and strategy names") {
    BacktestResult res;
    res.strategy = Strategy::Gev;
    PortfolioState day1;
    day1.t = 20240115;
    day1.weights = {{"A", 1.0}};
    day1.value = 1.0;
    PortfolioState day2 = day1;
    day2.t = 20240116;
    day2.value = 1.01;
    res.states = {day1, day2};
    const std::vector<BacktestResult> runs = {res};
    CHECK(backtest_csv(runs) ==
          "date,strategy,value\n"
          "2024-01-15,gev,1\n"
          "2024-01-16,gev,1.01\n");
}

TEST_CASE("weights report snapshots only when targets change") {
    BacktestResult res;
    res.strategy = Strategy::Normal;
    res.redistributed_steps = 2;
    res.var_fallback_periods = 1;
    PortfolioState a;
    a.t = 20240115;
    a.weights = {{"A", 0.6}, {"B", 0.4}};
    PortfolioState b = a;
    b.t = 20240116;  // same targets: no new snapshot
    PortfolioState c = a;
    c.t = 20240117;
    c.weights = {{"A", 0.5}, {"B", 0.5}};
    res.states = {a, b, c};

    const std::vector<BacktestResult> runs = {res};
    const auto doc = nlohmann::json::parse(weights_json(runs));
    REQUIRE(doc.size() == 1);
    CHECK(doc[0]["strategy"] == "normal");
    CHECK(doc[0]["redistributed_steps"] == 2);
    CHECK(doc[0]["var_fallback_periods"] == 1);
    REQUIRE(doc[0]["snapshots"].size() == 2);
    CHECK(doc[0]["snapshots"][0]["date"] == "2024-01-15");
    CHECK(doc[0]["snapshots"][0]["weights"]["A"] == doctest::Approx(0.6));
    CHECK(doc[0]["snapshots"][1]["date"] == "2024-01-17");
    CHECK(doc[0]["snapshots"][1]["weights"]["B"] == doctest::Approx(0.5));
}

TEST_CASE("json reports parse back with their fields intact") {
    FilterReport rep;
    rep.days_in = 10;
    rep.days_kept = 8;
    rep.dropped = {{20240105, "flat"}, {20240108, "gap"}};
    const auto excl = nlohmann::json::parse(exclusion_json("SYM", rep));
    CHECK(excl["symbol"] == "SYM");
    CHECK(excl["days_in"] == 10);
    CHECK(excl["days_kept"] == 8);
    REQUIRE(excl["dropped"].size() == 2);
    CHECK(excl["dropped"][0]["date"] == 20240105);
    CHECK(excl["dropped"][0]["rule"] == "flat");

    JumpReport jr;
    jr.symbol = "SYM";
    jr.skipped_before_first_fit = 7;
    jr.jumps.push_back({epoch("2024-02-01T06:30:00Z"), -6.5, 3.25});
    const auto jumps = nlohmann::json::parse(jumps_json(jr));
    CHECK(jumps["symbol"] == "SYM");
    CHECK(jumps["skipped_before_first_fit"] == 7);
    REQUIRE(jumps["jumps"].size() == 1);
    CHECK(jumps["jumps"][0]["timestamp"] == "2024-02-01T06:30:00Z");
    CHECK(jumps["jumps"][0]["threshold"] == doctest::Approx(3.25));

    ChangepointReport cr;
    cr.series = "SYM";
    cr.hazard_lambda = 250.0;
    cr.changepoints.push_back({1500, 0.93});
    const auto cps = nlohmann::json::parse(changepoints_json(cr));
    CHECK(cps["series"] == "SYM");
    CHECK(cps["hazard_lambda"] == doctest::Approx(250.0));
    REQUIRE(cps["changepoints"].size() == 1);
    CHECK(cps["changepoints"][0]["t"] == 1500);
    CHECK(cps["changepoints"][0]["run_length_collapse_posterior"] ==
          doctest::Approx(0.93));

    RiskTrajectory traj;
    traj.symbol = "SYM";
    RiskRecord rec;
    rec.t = 100;
    rec.pass = true;
    traj.records = {rec};
    traj.has_stability = true;
    traj.mEVI = -0.11;
    traj.margin = 0.05;
    traj.sti = 0.92;
    traj.stable = true;
    const std::vector<RiskTrajectory> pool = {traj};
    CrossSectionRow row;
    row.evi = {100, -0.2, -0.1, 0.0};
    row.var = {100, 3.0, 3.5, 4.0};
    const std::vector<CrossSectionRow> sections = {row};
    const auto summary = nlohmann::json::parse(pool_summary_json(pool, sections));
    REQUIRE(summary["symbols"].size() == 1);
    CHECK(summary["symbols"][0]["symbol"] == "SYM");
    CHECK(summary["symbols"][0]["fits"] == 1);
    CHECK(summary["symbols"][0]["stable"] == true);
    CHECK(summary["symbols"][0]["mEVI"] == doctest::Approx(-0.11));
    REQUIRE(summary["cross_sections"].size() == 1);
    CHECK(summary["cross_sections"][0]["t"] == 100);
    CHECK(summary["cross_sections"][0]["evi"]["mid"] == doctest::Approx(-0.1));
    CHECK(summary["cross_sections"][0]["var"]["high"] == doctest::Approx(4.0));
}

TEST_CASE("run ids are deterministic 16-hex digests") {
    const std::string a = run_id("analyze\nconfig");
    const std::string b = run_id("analyze\nconfig");
    const std::string c = run_id("analyze\nconfig2");
    CHECK(a == b);
    CHECK(a != c);
    REQUIRE(a.size() == 16);
    for (char ch : a) CHECK(std::isxdigit(static_cast<unsigned char>(ch)));
    CHECK(content_digest("payload") == run_id("payload"));
}

TEST_CASE("manifest embeds the effective config and artifact list") {
    const std::vector<std::pair<std::string, std::string>> inputs = {
        {"data/SYM.csv", "00ff00ff00ff00ff"}};
    const std::vector<std::string> outputs = {"SYM/slr.csv", "pool_summary.json"};
    const auto doc = nlohmann::json::parse(
        manifest_json("analyze", "0123456789abcdef", R"({"seed": 42})", inputs, outputs));
    CHECK(doc["command"] == "analyze");
    CHECK(doc["run_id"] == "0123456789abcdef");
    CHECK(doc["config"]["seed"] == 42);
    REQUIRE(doc["inputs"].size() == 1);
    CHECK(doc["inputs"][0]["file"] == "data/SYM.csv");
    CHECK(doc["inputs"][0]["digest"] == "00ff00ff00ff00ff");
    REQUIRE(doc["outputs"].size() == 2);
    CHECK(doc["outputs"][1] == "pool_summary.json");
    CHECK_THROWS_AS((void)manifest_json("analyze", "id", "{bad", inputs, outputs),
                    ParamError);
}

TEST_CASE("write_file creates parents and read_file round-trips bytes") {
    const fs::path nested = scratch_dir() / "a" / "b" / "out.txt";
    fs::remove_all(scratch_dir() / "a");
    const std::string payload = "line1\nline2\x01\xff\n";
    write_file(nested.string(), payload);
    CHECK(read_file(nested.string()) == payload);
    CHECK_THROWS_AS((void)read_file((scratch_dir() / "nope.bin").string()), DataError);
    fs::remove_all(scratch_dir() / "a");
}

}  // TEST_SUITE

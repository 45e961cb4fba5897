#include "evtrisk/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evtrisk/errors.hpp"
#include "evtrisk/rng.hpp"
#include "evtrisk/timeparse.hpp"

namespace evtrisk {

namespace {

using nlohmann::json;

std::string fmt_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Strict finite-double field: the whole token must parse.
bool parse_double(const std::string& tok, double& out) {
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string civil_date(std::int64_t yyyymmdd) {
    const int y = static_cast<int>(yyyymmdd / 10000);
    const int m = static_cast<int>(yyyymmdd / 100 % 100);
    const int d = static_cast<int>(yyyymmdd % 100);
    if (y >= 1900 && y <= 2100 && m >= 1 && m <= 12 && d >= 1 && d <= 31) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
        return buf;
    }
    return std::to_string(yyyymmdd);
}

}  // namespace

BarCsvResult load_bars_csv(const std::string& path, const SessionSpec& spec,
                           std::string symbol) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("bars: cannot read " + path);

    BarCsvResult result;
    result.bars.symbol = std::move(symbol);
    result.bars.session_spec = spec;

    std::string line;
    if (!std::getline(in, line)) throw DataError("bars: empty file " + path);
    {
        const auto head = split_csv(line);
        if (head.size() != 3 || head[0] != "timestamp" || head[1] != "price" ||
            head[2] != "volume")
            throw DataError("bars: expected header timestamp,price,volume in " + path);
    }

    std::int64_t last_epoch = 0;
    bool have_last = false;
    for (int line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv(line);
        if (fields.size() != 3) {
            result.skipped.push_back({line_no, "expected 3 fields"});
            continue;
        }
        CivilTime ct;
        try {
            ct = parse_iso8601(fields[0]);
        } catch (const DataError&) {
            result.skipped.push_back({line_no, "bad timestamp"});
            continue;
        }
        double price = 0.0, volume = 0.0;
        if (!parse_double(fields[1], price) || !(price > 0.0)) {
            result.skipped.push_back({line_no, "bad price"});
            continue;
        }
        if (!parse_double(fields[2], volume) || volume < 0.0) {
            result.skipped.push_back({line_no, "bad volume"});
            continue;
        }
        if (have_last && ct.epoch_sec <= last_epoch) {
            result.skipped.push_back({line_no, "timestamp not increasing"});
            continue;
        }
        last_epoch = ct.epoch_sec;
        have_last = true;
        result.bars.bars.push_back({ct.epoch_sec, ct.tz_offset_min, ct.local_date,
                                    ct.local_minute, price, volume});
    }
    if (result.bars.bars.empty())
        throw DataError("bars: no valid rows in " + path);
    return result;
}

std::string slr_csv(const SlrSeries& s) {
    std::string out = "timestamp,slr\n";
    for (const SlrPoint& p : s.points)
        out += format_iso8601(p.t_epoch, 0) + "," + fmt_g(p.slr) + "\n";
    return out;
}

std::string maxima_csv(const MaximaSeries& ms) {
    std::string out = "block_end,maximum\n";
    for (const MaximaPoint& m : ms.maxima)
        out += std::to_string(m.block_end) + "," + fmt_g(m.y) + "\n";
    return out;
}

std::string trajectory_csv(const RiskTrajectory& traj) {
    std::string out = "t,xi,mu,sigma,ks_pvalue,mpi,var99,pass\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const RiskRecord& r : traj.records) {
        const bool m = r.missing;
        out += std::to_string(r.t) + "," + fmt_g(m ? nan : r.params.xi) + "," +
               fmt_g(m ? nan : r.params.mu) + "," + fmt_g(m ? nan : r.params.sigma) +
               "," + fmt_g(m ? nan : r.ks_pvalue) + "," + fmt_g(m ? nan : r.mpi) +
               "," + fmt_g(m ? nan : r.var99) + "," + (r.pass ? "1" : "0") + "\n";
    }
    return out;
}

std::string exclusion_json(const std::string& symbol, const FilterReport& report) {
    json doc;
    doc["symbol"] = symbol;
    doc["days_in"] = report.days_in;
    doc["days_kept"] = report.days_kept;
    json dropped = json::array();
    for (const DayExclusion& d : report.dropped)
        dropped.push_back({{"date", d.local_date}, {"rule", d.rule}});
    doc["dropped"] = dropped;
    return doc.dump(2) + "\n";
}

std::string pool_summary_json(std::span<const RiskTrajectory> pool,
                              std::span<const CrossSectionRow> sections) {
    json doc;
    json symbols = json::array();
    for (const RiskTrajectory& traj : pool) {
        std::size_t missing = 0;
        for (const RiskRecord& r : traj.records) missing += r.missing ? 1 : 0;
        json row = {{"symbol", traj.symbol},
                    {"fits", traj.records.size()},
                    {"missing_fits", missing},
                    {"has_stability", traj.has_stability}};
        if (traj.has_stability) {
            row["mEVI"] = traj.mEVI;
            row["margin"] = traj.margin;
            row["sti"] = traj.sti;
            row["stable"] = traj.stable;
        }
        symbols.push_back(row);
    }
    doc["symbols"] = symbols;
    json xs = json::array();
    for (const CrossSectionRow& row : sections) {
        xs.push_back({{"t", row.evi.t},
                      {"evi", {{"low", row.evi.low}, {"mid", row.evi.mid}, {"high", row.evi.high}}},
                      {"var", {{"low", row.var.low}, {"mid", row.var.mid}, {"high", row.var.high}}}});
    }
    doc["cross_sections"] = xs;
    return doc.dump(2) + "\n";
}

std::string backtest_csv(std::span<const BacktestResult> results) {
    std::string out = "date,strategy,value\n";
    for (const BacktestResult& res : results) {
        const char* name = strategy_name(res.strategy);
        for (const PortfolioState& st : res.states)
            out += civil_date(st.t) + "," + name + "," + fmt_g(st.value) + "\n";
    }
    return out;
}

std::string weights_json(std::span<const BacktestResult> results) {
    json doc = json::array();
    for (const BacktestResult& res : results) {
        json snaps = json::array();
        const std::map<std::string, double>* last = nullptr;
        for (const PortfolioState& st : res.states) {
            if (last != nullptr && *last == st.weights) continue;
            json weights;
            for (const auto& [sym, w] : st.weights) weights[sym] = w;
            snaps.push_back({{"date", civil_date(st.t)},
                             {"position_fraction", st.position_fraction},
                             {"weights", weights}});
            last = &st.weights;
        }
        doc.push_back({{"strategy", strategy_name(res.strategy)},
                       {"redistributed_steps", res.redistributed_steps},
                       {"var_fallback_periods", res.var_fallback_periods},
                       {"snapshots", snaps}});
    }
    return doc.dump(2) + "\n";
}

std::string jumps_csv(const JumpReport& rep) {
    std::string out = "timestamp,slr,threshold\n";
    for (const Jump& j : rep.jumps)
        out += format_iso8601(j.t, 0) + "," + fmt_g(j.slr) + "," + fmt_g(j.threshold) + "\n";
    return out;
}

std::string jumps_json(const JumpReport& rep) {
    json doc;
    doc["symbol"] = rep.symbol;
    doc["skipped_before_first_fit"] = rep.skipped_before_first_fit;
    json jumps = json::array();
    for (const Jump& j : rep.jumps)
        jumps.push_back({{"timestamp", format_iso8601(j.t, 0)},
                         {"slr", j.slr},
                         {"threshold", j.threshold}});
    doc["jumps"] = jumps;
    return doc.dump(2) + "\n";
}

std::string changepoints_json(const ChangepointReport& rep) {
    json doc;
    doc["series"] = rep.series;
    doc["hazard_lambda"] = rep.hazard_lambda;
    json cps = json::array();
    for (const Changepoint& cp : rep.changepoints)
        cps.push_back({{"t", cp.t},
                       {"run_length_collapse_posterior", cp.run_length_collapse_posterior}});
    doc["changepoints"] = cps;
    return doc.dump(2) + "\n";
}

std::string run_id(const std::string& canonical) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(hash_string(canonical)));
    return buf;
}

std::string content_digest(const std::string& bytes) { return run_id(bytes); }

std::string manifest_json(const std::string& command, const std::string& id,
                          const std::string& effective_config_json,
                          std::span<const std::pair<std::string, std::string>> inputs,
                          std::span<const std::string> outputs) {
    json doc;
    doc["command"] = command;
    doc["run_id"] = id;
    try {
        doc["config"] = json::parse(effective_config_json);
    } catch (const json::exception&) {
        throw ParamError("manifest: effective config is not valid JSON");
    }
    json ins = json::array();
    for (const auto& [name, digest] : inputs)
        ins.push_back({{"file", name}, {"digest", digest}});
    doc["inputs"] = ins;
    doc["outputs"] = std::vector<std::string>(outputs.begin(), outputs.end());
    return doc.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw DataError("write: cannot create " + p.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("write: cannot open " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write: failed writing " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("read: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace evtrisk

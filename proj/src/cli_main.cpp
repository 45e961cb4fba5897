#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "evtrisk/changepoint.hpp"
#include "evtrisk/config.hpp"
#include "evtrisk/errors.hpp"
#include "evtrisk/heston.hpp"
#include "evtrisk/io.hpp"
#include "evtrisk/maxima.hpp"
#include "evtrisk/monitor.hpp"
#include "evtrisk/returns.hpp"
#include "evtrisk/var.hpp"

namespace fs = std::filesystem;
using namespace evtrisk;

namespace {

// ---------------------------------------------------------------- shared --

struct RunContext {
    PipelineConfig cfg;
    std::string out_root = "out";
    ExecMode mode = ExecMode::OpenMP;
};

struct SymbolInput {
    std::string symbol;
    std::string path;
    std::string digest;
};

// Every *.csv in the data directory is one symbol, named by its file stem.
std::vector<SymbolInput> scan_symbols(const std::string& data_dir) {
    std::error_code ec;
    if (!fs::is_directory(data_dir, ec))
        throw DataError("no symbols: " + data_dir + " is not a directory");
    std::vector<SymbolInput> out;
    for (const auto& entry : fs::directory_iterator(data_dir, ec)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() != ".csv") continue;
        out.push_back({entry.path().stem().string(), entry.path().string(), ""});
    }
    if (ec) throw DataError("no symbols: cannot scan " + data_dir);
    if (out.empty()) throw DataError("no symbols: no *.csv files in " + data_dir);
    std::sort(out.begin(), out.end(),
              [](const SymbolInput& a, const SymbolInput& b) { return a.symbol < b.symbol; });
    for (SymbolInput& s : out) s.digest = content_digest(read_file(s.path));
    return out;
}

struct SymbolRun {
    std::string symbol;
    BarSeries bars;  // raw in-order bars, before day filtering
    PipelineResult pipeline;
    MaximaSeries maxima;
    RollingSamples samples;
    RiskTrajectory trajectory;
};

SymbolRun run_symbol(const SymbolInput& input, const RunContext& ctx) {
    BarCsvResult loaded = load_bars_csv(input.path, ctx.cfg.sessions, input.symbol);
    for (const SkippedRow& row : loaded.skipped)
        std::fprintf(stderr, "%s:%d: row skipped (%s)\n", input.path.c_str(), row.line,
                     row.reason.c_str());
    SymbolRun run;
    run.symbol = input.symbol;
    run.bars = std::move(loaded.bars);
    run.pipeline = build_slr_series(run.bars, ctx.cfg.filters, ctx.cfg.realized_std_lookback);
    run.maxima = extract_block_maxima(run.pipeline.slr, ctx.cfg.block_span_days);
    run.samples = rolling_samples(run.maxima, ctx.cfg.window);
    run.trajectory = monitor_symbol(run.samples, input.symbol, ctx.cfg.fit, ctx.cfg.gate,
                                    ctx.cfg.var.q, ctx.mode);
    return run;
}

std::string failures_json(const std::vector<std::pair<std::string, std::string>>& failures) {
    std::string out = "[\n";
    for (std::size_t i = 0; i < failures.size(); ++i) {
        std::string msg = failures[i].second;
        for (std::size_t pos = 0; (pos = msg.find('"', pos)) != std::string::npos; pos += 2)
            msg.replace(pos, 1, "\\\"");
        out += "  {\"symbol\": \"" + failures[i].first + "\", \"error\": \"" + msg + "\"}";
        out += i + 1 < failures.size() ? ",\n" : "\n";
    }
    return out + "]\n";
}

// Writes one artifact and records its run-relative path for the manifest.
struct RunWriter {
    std::string root;
    std::vector<std::string> outputs;

    void emit(const std::string& relative, const std::string& content) {
        write_file(root + "/" + relative, content);
        outputs.push_back(relative);
    }
};

void finish_run(RunWriter& writer, const std::string& command, const std::string& id,
                const std::string& effective,
                std::span<const std::pair<std::string, std::string>> inputs) {
    std::sort(writer.outputs.begin(), writer.outputs.end());
    write_file(writer.root + "/manifest.json",
               manifest_json(command, id, effective, inputs, writer.outputs));
    std::printf("%s: run %s -> %s (%zu artifacts)\n", command.c_str(), id.c_str(),
                writer.root.c_str(), writer.outputs.size() + 1);
}

std::string canonical_inputs(std::span<const SymbolInput> inputs) {
    std::string canon;
    for (const SymbolInput& s : inputs) canon += s.symbol + ":" + s.digest + "\n";
    return canon;
}

// ---------------------------------------------------------------- analyze --

int cmd_analyze(const RunContext& ctx, const std::string& data_dir) {
    const std::vector<SymbolInput> inputs = scan_symbols(data_dir);
    const std::string effective = config_json(ctx.cfg);
    const std::string id = run_id("analyze\n" + effective + canonical_inputs(inputs));
    RunWriter writer{ctx.out_root + "/analyze/" + id, {}};

    std::vector<RiskTrajectory> pool;
    std::vector<std::pair<std::string, std::string>> failures;
    for (const SymbolInput& input : inputs) {
        try {
            const SymbolRun run = run_symbol(input, ctx);
            writer.emit(run.symbol + "/slr.csv", slr_csv(run.pipeline.slr));
            writer.emit(run.symbol + "/maxima.csv", maxima_csv(run.maxima));
            writer.emit(run.symbol + "/trajectory.csv", trajectory_csv(run.trajectory));
            writer.emit(run.symbol + "/exclusions.json",
                        exclusion_json(run.symbol, run.pipeline.report));
            pool.push_back(run.trajectory);
        } catch (const Error& e) {
            failures.emplace_back(input.symbol, e.what());
            std::fprintf(stderr, "%s: symbol failed: %s\n", input.symbol.c_str(), e.what());
        }
    }
    if (pool.empty())
        throw DataError("analyze: every symbol failed; first: " + failures.front().second);

    std::set<std::int64_t> fit_times;
    for (const RiskTrajectory& traj : pool)
        for (const RiskRecord& rec : traj.records) fit_times.insert(rec.t);
    std::vector<CrossSectionRow> sections;
    for (std::int64_t t : fit_times)
        if (const auto row = cross_section(pool, t)) sections.push_back(*row);

    writer.emit("pool_summary.json", pool_summary_json(pool, sections));
    if (!failures.empty()) writer.emit("failures.json", failures_json(failures));
    writer.emit("effective_config.json", effective);

    std::vector<std::pair<std::string, std::string>> manifest_inputs;
    for (const SymbolInput& s : inputs) manifest_inputs.emplace_back(s.path, s.digest);
    finish_run(writer, "analyze", id, effective, manifest_inputs);
    return 0;
}

// --------------------------------------------------------------- simulate --

// Reference rows for the compact grid: per observation spacing, the expected
// long-run mean tail index and 0.99 VaR of the fitted maxima models.
struct ReferenceRow {
    double delta;
    double mEVI;
    double var99;
};
constexpr ReferenceRow kReferenceTable[] = {
    {1.0 / 240, -0.08, 4.23},
    {1.0 / 48, -0.10, 3.85},
    {1.0 / 24, -0.11, 3.67},
};

int cmd_simulate(const RunContext& ctx, bool full) {
    HestonExperimentConfig ec;
    ec.zs = full ? ctx.cfg.heston.full_zs : ctx.cfg.heston.zs;
    ec.reps = full ? ctx.cfg.heston.full_reps : ctx.cfg.heston.reps;
    ec.deltas = ctx.cfg.heston.deltas;
    ec.epsilon = ctx.cfg.heston.epsilon;
    ec.horizon_T = ctx.cfg.heston.horizon_T;
    ec.block_duration = ctx.cfg.heston.block_duration;
    ec.rho = ctx.cfg.heston.rho;
    ec.seed = ctx.cfg.seed;
    ec.window = ctx.cfg.window;
    ec.fit = ctx.cfg.fit;
    ec.gate = ctx.cfg.gate;
    ec.var_level = ctx.cfg.var.q;
    ec.mode = ctx.mode;

    const std::string effective = config_json(ctx.cfg);
    const std::string id =
        run_id("simulate\n" + effective + (full ? "grid=full\n" : "grid=compact\n"));
    RunWriter writer{ctx.out_root + "/simulate/" + id, {}};

    const HestonExperiment ex = heston_experiment(ec);
    for (const std::string& warning : ex.warnings)
        std::fprintf(stderr, "simulate: warning: %s\n", warning.c_str());
    for (const std::string& message : ex.failures)
        std::fprintf(stderr, "simulate: cell failed: %s\n", message.c_str());

    writer.emit("experiment.csv", experiment_csv(ex));

    // summary lines against the bundled reference values
    std::string summary;
    for (double delta : ec.deltas) {
        double evi_sum = 0.0, var_sum = 0.0;
        std::size_t n = 0;
        for (const HestonRow& row : ex.rows) {
            if (std::fabs(row.delta - delta) > 1e-12 * std::max(1.0, std::fabs(delta)))
                continue;
            evi_sum += row.mEVI;
            var_sum += row.var99;
            ++n;
        }
        if (n == 0) continue;
        const double evi = evi_sum / static_cast<double>(n);
        const double var = var_sum / static_cast<double>(n);
        const ReferenceRow* ref = nullptr;
        for (const ReferenceRow& r : kReferenceTable)
            if (std::fabs(r.delta - delta) < 1e-12) ref = &r;
        char line[256];
        if (ref != nullptr) {
            std::snprintf(line, sizeof line,
                          "delta=%g: mEVI=%+.4f (ref %+.2f, diff %+.4f), "
                          "var99=%.3f (ref %.2f, diff %+.3f), rows=%zu\n",
                          delta, evi, ref->mEVI, evi - ref->mEVI, var, ref->var99,
                          var - ref->var99, n);
        } else {
            std::snprintf(line, sizeof line,
                          "delta=%g: mEVI=%+.4f, var99=%.3f (no reference), rows=%zu\n",
                          delta, evi, var, n);
        }
        summary += line;
        std::fputs(line, stdout);
    }
    writer.emit("summary.txt", summary);
    writer.emit("effective_config.json", effective);
    finish_run(writer, "simulate", id, effective, {});
    return ex.failures.empty() ? 0 : 4;
}

// --------------------------------------------------------------- backtest --

int cmd_backtest(const RunContext& ctx, const std::string& data_dir) {
    const std::vector<SymbolInput> inputs = scan_symbols(data_dir);
    const std::string effective = config_json(ctx.cfg);
    const std::string id = run_id("backtest\n" + effective + canonical_inputs(inputs));
    RunWriter writer{ctx.out_root + "/backtest/" + id, {}};

    const double nan = std::numeric_limits<double>::quiet_NaN();
    struct SymbolData {
        std::string symbol;
        std::map<int, std::pair<double, std::int64_t>> day_close;  // date -> close, epoch
        std::vector<VarRecord> vars;                               // by fit time
    };
    std::vector<SymbolData> data;
    std::vector<std::pair<std::string, std::string>> failures;

    for (const SymbolInput& input : inputs) {
        try {
            const SymbolRun run = run_symbol(input, ctx);
            SymbolData sd;
            sd.symbol = run.symbol;

            // retained days only: the filtered series defines the tradable axis
            const FilteredBars filtered = filter_sessions(run.bars, ctx.cfg.filters);
            for (const Bar& bar : filtered.bars.bars)
                sd.day_close[bar.local_date] = {bar.price, bar.epoch_sec};

            // per-fit VaR records on the shared rolling window
            std::vector<double> abs_window;
            for (std::size_t i = 0; i < run.samples.count(); ++i) {
                const RiskRecord& rec = run.trajectory.records[i];
                if (rec.missing) continue;
                const std::size_t b0 =
                    i * static_cast<std::size_t>(run.samples.stride);
                const std::size_t b1 = b0 + static_cast<std::size_t>(run.samples.k);
                const std::int64_t lo =
                    b0 > 0 ? run.maxima.maxima[b0 - 1].block_end
                           : std::numeric_limits<std::int64_t>::min();
                const std::int64_t hi = run.maxima.maxima[b1 - 1].block_end;
                abs_window.clear();
                for (const SlrPoint& p : run.pipeline.slr.points)
                    if (p.t_epoch > lo && p.t_epoch <= hi)
                        abs_window.push_back(std::fabs(p.slr));
                try {
                    sd.vars.push_back(window_vars(run.symbol, rec.t, rec.params,
                                                  run.samples.sample(i), abs_window,
                                                  ctx.cfg.var));
                } catch (const Error&) {
                    // a window the measures cannot price is simply absent
                }
            }
            data.push_back(std::move(sd));
        } catch (const Error& e) {
            failures.emplace_back(input.symbol, e.what());
            std::fprintf(stderr, "%s: symbol failed: %s\n", input.symbol.c_str(), e.what());
        }
    }
    if (data.empty())
        throw DataError("backtest: every symbol failed; first: " + failures.front().second);

    // shared date axis: union of retained trading days
    std::set<int> axis;
    for (const SymbolData& sd : data)
        for (const auto& [date, close] : sd.day_close) axis.insert(date);

    BacktestInput bt;
    for (int date : axis) bt.dates.push_back(date);
    for (const SymbolData& sd : data) {
        SymbolPanel panel;
        panel.symbol = sd.symbol;
        panel.close.assign(bt.dates.size(), nan);
        panel.var_gev.assign(bt.dates.size(), nan);
        panel.var_normal.assign(bt.dates.size(), nan);
        std::size_t next_var = 0;
        double gev = nan, normal = nan;
        for (std::size_t i = 0; i < bt.dates.size(); ++i) {
            const auto it = sd.day_close.find(static_cast<int>(bt.dates[i]));
            if (it == sd.day_close.end()) {
                // no close today; the VaR step function still advances with time
                panel.var_gev[i] = gev;
                panel.var_normal[i] = normal;
                continue;
            }
            const auto [close, day_end] = it->second;
            while (next_var < sd.vars.size() && sd.vars[next_var].t <= day_end) {
                gev = sd.vars[next_var].gev_var;
                normal = sd.vars[next_var].normal_var;
                ++next_var;
            }
            panel.close[i] = close;
            panel.var_gev[i] = gev;
            panel.var_normal[i] = normal;
        }
        bt.symbols.push_back(std::move(panel));
    }

    std::vector<BacktestResult> results;
    for (Strategy strat : {Strategy::Gev, Strategy::Normal, Strategy::Equal}) {
        RebalancePlan plan = ctx.cfg.rebalance;
        plan.strategy = strat;
        results.push_back(backtest(bt, plan));
    }

    writer.emit("backtest.csv", backtest_csv(results));
    writer.emit("weights.json", weights_json(results));
    if (!failures.empty()) writer.emit("failures.json", failures_json(failures));
    writer.emit("effective_config.json", effective);

    std::vector<std::pair<std::string, std::string>> manifest_inputs;
    for (const SymbolInput& s : inputs) manifest_inputs.emplace_back(s.path, s.digest);
    finish_run(writer, "backtest", id, effective, manifest_inputs);
    return 0;
}

// ------------------------------------------------- jumps / changepoints --

int cmd_jumps(const RunContext& ctx, const std::string& data_dir) {
    const std::vector<SymbolInput> inputs = scan_symbols(data_dir);
    const std::string effective = config_json(ctx.cfg);
    const std::string id = run_id("jumps\n" + effective + canonical_inputs(inputs));
    RunWriter writer{ctx.out_root + "/jumps/" + id, {}};

    std::vector<std::pair<std::string, std::string>> failures;
    std::size_t succeeded = 0;
    for (const SymbolInput& input : inputs) {
        try {
            const SymbolRun run = run_symbol(input, ctx);
            const JumpReport rep = detect_jumps(run.pipeline.slr, run.trajectory);
            writer.emit(run.symbol + "/jumps.csv", jumps_csv(rep));
            writer.emit(run.symbol + "/jumps.json", jumps_json(rep));
            ++succeeded;
        } catch (const Error& e) {
            failures.emplace_back(input.symbol, e.what());
            std::fprintf(stderr, "%s: symbol failed: %s\n", input.symbol.c_str(), e.what());
        }
    }
    if (succeeded == 0)
        throw DataError("jumps: every symbol failed; first: " + failures.front().second);
    if (!failures.empty()) writer.emit("failures.json", failures_json(failures));
    writer.emit("effective_config.json", effective);

    std::vector<std::pair<std::string, std::string>> manifest_inputs;
    for (const SymbolInput& s : inputs) manifest_inputs.emplace_back(s.path, s.digest);
    finish_run(writer, "jumps", id, effective, manifest_inputs);
    return 0;
}

int cmd_changepoints(const RunContext& ctx, const std::string& data_dir) {
    const std::vector<SymbolInput> inputs = scan_symbols(data_dir);
    const std::string effective = config_json(ctx.cfg);
    const std::string id = run_id("changepoints\n" + effective + canonical_inputs(inputs));
    RunWriter writer{ctx.out_root + "/changepoints/" + id, {}};

    std::vector<std::pair<std::string, std::string>> failures;
    std::size_t succeeded = 0;
    for (const SymbolInput& input : inputs) {
        try {
            const SymbolRun run = run_symbol(input, ctx);
            const ChangepointReport rep = evi_changepoints(run.trajectory, ctx.cfg.bocd);
            writer.emit(run.symbol + "/changepoints.json", changepoints_json(rep));
            ++succeeded;
        } catch (const Error& e) {
            failures.emplace_back(input.symbol, e.what());
            std::fprintf(stderr, "%s: symbol failed: %s\n", input.symbol.c_str(), e.what());
        }
    }
    if (succeeded == 0)
        throw DataError("changepoints: every symbol failed; first: " +
                        failures.front().second);
    if (!failures.empty()) writer.emit("failures.json", failures_json(failures));
    writer.emit("effective_config.json", effective);

    std::vector<std::pair<std::string, std::string>> manifest_inputs;
    for (const SymbolInput& s : inputs) manifest_inputs.emplace_back(s.path, s.digest);
    finish_run(writer, "changepoints", id, effective, manifest_inputs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"extreme-value risk analysis toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_root = "out";
    int jobs = 0;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "config JSON file (defaults: cn profile)");
    app.add_option("--out", out_root, "output root directory")->capture_default_str();
    app.add_option("--jobs", jobs, "worker threads (1 = serial, 0 = all cores)")
        ->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");

    std::string data_dir;
    bool full = false;
    CLI::App* analyze = app.add_subcommand("analyze", "per-symbol risk trajectories");
    analyze->add_option("data_dir", data_dir, "directory of per-symbol bar CSVs")
        ->required();
    CLI::App* simulate = app.add_subcommand("simulate", "stochastic-volatility experiment");
    simulate->add_flag("--full", full, "run the full grid instead of the compact one");
    CLI::App* backtest_cmd = app.add_subcommand("backtest", "portfolio strategies");
    backtest_cmd->add_option("data_dir", data_dir, "directory of per-symbol bar CSVs")
        ->required();
    CLI::App* jumps = app.add_subcommand("jumps", "threshold exceedances");
    jumps->add_option("data_dir", data_dir, "directory of per-symbol bar CSVs")->required();
    CLI::App* changepoints = app.add_subcommand("changepoints", "tail-index shifts");
    changepoints->add_option("data_dir", data_dir, "directory of per-symbol bar CSVs")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunContext ctx;
        ctx.cfg = config_path.empty() ? default_config() : load_config(config_path);
        if (seed_opt->count() > 0) {
            ctx.cfg.seed = seed;
            ctx.cfg.gate.seed_base = seed;
        }
        ctx.out_root = out_root;
        if (jobs < 0) throw ParamError("--jobs must be nonnegative");
        ctx.mode = jobs == 1 ? ExecMode::Serial : ExecMode::OpenMP;
#ifdef _OPENMP
        if (jobs > 1) omp_set_num_threads(jobs);
#endif

        if (*analyze) return cmd_analyze(ctx, data_dir);
        if (*simulate) return cmd_simulate(ctx, full);
        if (*backtest_cmd) return cmd_backtest(ctx, data_dir);
        if (*jumps) return cmd_jumps(ctx, data_dir);
        if (*changepoints) return cmd_changepoints(ctx, data_dir);
        return 2;  // unreachable: a subcommand is required
    } catch (const ParamError& e) {
        std::fprintf(stderr, "{\"error\": \"param\", \"message\": \"%s\"}\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "{\"error\": \"data\", \"message\": \"%s\"}\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "{\"error\": \"numeric\", \"message\": \"%s\"}\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "{\"error\": \"internal\", \"message\": \"%s\"}\n", e.what());
        return 4;
    }
}

#include "evtrisk/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "evtrisk/errors.hpp"

namespace evtrisk {

namespace {

using nlohmann::json;

// Rejects keys that no reader claimed, so misspelled options fail loudly
// instead of silently keeping their defaults.
void expect_keys(const json& obj, const std::set<std::string>& known,
                 const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.contains(key))
            throw ParamError("config: unknown key \"" + key + "\" in " + where);
    }
}

template <class T>
void read_into(const json& obj, const char* key, T& out, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ParamError("config: bad value for \"" + std::string(key) + "\" in " + where);
    }
}

SessionSpec profile_sessions(const std::string& profile) {
    SessionSpec spec;
    if (profile == "cn") {
        spec.sessions = {{9 * 60 + 30, 11 * 60 + 30}, {13 * 60, 15 * 60}};
    } else if (profile == "us") {
        spec.sessions = {{9 * 60 + 30, 16 * 60}};
    }
    return spec;
}

}  // namespace

void PipelineConfig::validate() const {
    if (schema_version != 1)
        throw ParamError("config: unsupported schema_version " +
                         std::to_string(schema_version));
    if (profile != "cn" && profile != "us" && profile != "custom")
        throw ParamError("config: profile must be cn, us or custom");
    sessions.validate();
    if (filters.max_consecutive_missing < 0 || filters.max_flat_minutes < 0 ||
        filters.min_active_minutes < 0)
        throw ParamError("config: filter thresholds must be nonnegative");
    if (realized_std_lookback < 1)
        throw ParamError("config: realized_std_lookback must be positive");
    if (block_span_days < 1)
        throw ParamError("config: block_span_days must be positive");
    if (window.window_maxima_count_k < 30)
        throw ParamError("config: window k must be at least 30 maxima per fit");
    if (window.step_days < 1)
        throw ParamError("config: window step must be positive");
    if (window.step_days % block_span_days != 0)
        throw ParamError("config: window step must be a multiple of the block span");
    fit.validate();
    if (!(gate.ks_level > 0.0 && gate.ks_level < 1.0))
        throw ParamError("config: gate ks_level outside (0, 1)");
    if (!(gate.mpi_limit > 0.0))
        throw ParamError("config: gate mpi_limit must be positive");
    if (gate.ks_reference_multiple < 1)
        throw ParamError("config: gate ks_reference_multiple must be positive");
    if (!(var.q > 0.0 && var.q < 1.0))
        throw ParamError("config: var level outside (0, 1)");
    if (!(var.gp_threshold_quantile > 0.0 && var.gp_threshold_quantile < 1.0))
        throw ParamError("config: gp threshold quantile outside (0, 1)");
    if (rebalance.period_days < 1)
        throw ParamError("config: rebalance period must be positive");
    if (rebalance.fixed_position_fraction &&
        !(*rebalance.fixed_position_fraction >= 0.0 &&
          *rebalance.fixed_position_fraction <= 1.0))
        throw ParamError("config: fixed position fraction outside [0, 1]");
    if (rebalance.transaction_cost < 0.0)
        throw ParamError("config: transaction cost must be nonnegative");
    bocd.validate();
    if (heston.zs.empty() || heston.deltas.empty() || heston.full_zs.empty())
        throw ParamError("config: heston grid must not be empty");
    for (double z : heston.zs)
        if (!(z > 0.5))
            throw ParamError("config: heston z must exceed 1/2 "
                             "(Feller positive-variance condition)");
    for (double z : heston.full_zs)
        if (!(z > 0.5))
            throw ParamError("config: heston z must exceed 1/2 "
                             "(Feller positive-variance condition)");
    if (heston.reps < 1 || heston.full_reps < 1)
        throw ParamError("config: heston reps must be positive");
    HestonConfig probe;
    probe.epsilon = heston.epsilon;
    probe.horizon_T = heston.horizon_T;
    probe.rho = heston.rho;
    for (double d : heston.deltas) {
        probe.delta = d;
        heston_validate(probe);
        observations_per_block(probe, heston.block_duration);
    }
}

PipelineConfig default_config(const std::string& profile) {
    PipelineConfig c;
    if (profile != "cn" && profile != "us")
        throw ParamError("config: no default profile named \"" + profile + "\"");
    c.profile = profile;
    c.sessions = profile_sessions(profile);
    c.window.window_maxima_count_k = profile == "us" ? 126 : 123;
    c.bocd.thin = 10;
    c.gate.seed_base = c.seed;
    return c;
}

PipelineConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParamError(std::string("config: not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParamError("config: top level must be an object");

    expect_keys(doc,
                {"schema_version", "seed", "profile", "sessions", "bar_minutes",
                 "filters", "realized_std_lookback", "block_span_days", "window",
                 "fit", "gate", "var", "rebalance", "bocd", "heston"},
                "top level");

    std::string profile = "cn";
    read_into(doc, "profile", profile, "top level");
    PipelineConfig c =
        profile == "custom" ? default_config("cn") : default_config(profile);
    c.profile = profile;

    read_into(doc, "schema_version", c.schema_version, "top level");
    read_into(doc, "seed", c.seed, "top level");
    c.gate.seed_base = c.seed;

    if (doc.contains("sessions")) {
        if (profile != "custom")
            throw ParamError("config: explicit sessions require profile \"custom\"");
        std::vector<std::vector<int>> spans;
        read_into(doc, "sessions", spans, "top level");
        c.sessions.sessions.clear();
        for (const auto& s : spans) {
            if (s.size() != 2)
                throw ParamError("config: each session is [open_minute, close_minute]");
            c.sessions.sessions.emplace_back(s[0], s[1]);
        }
    } else if (profile == "custom") {
        throw ParamError("config: profile \"custom\" needs a sessions array");
    }
    read_into(doc, "bar_minutes", c.sessions.bar_minutes, "top level");
    read_into(doc, "realized_std_lookback", c.realized_std_lookback, "top level");
    read_into(doc, "block_span_days", c.block_span_days, "top level");

    if (doc.contains("filters")) {
        const json& f = doc["filters"];
        expect_keys(f, {"max_consecutive_missing", "max_flat_minutes", "min_active_minutes"},
                    "filters");
        read_into(f, "max_consecutive_missing", c.filters.max_consecutive_missing, "filters");
        read_into(f, "max_flat_minutes", c.filters.max_flat_minutes, "filters");
        read_into(f, "min_active_minutes", c.filters.min_active_minutes, "filters");
    }
    if (doc.contains("window")) {
        const json& w = doc["window"];
        expect_keys(w, {"k", "step_days"}, "window");
        read_into(w, "k", c.window.window_maxima_count_k, "window");
        read_into(w, "step_days", c.window.step_days, "window");
    }
    if (doc.contains("fit")) {
        const json& f = doc["fit"];
        expect_keys(f, {"triples", "weight_mode"}, "fit");
        if (f.contains("triples")) {
            std::vector<std::vector<double>> raw;
            read_into(f, "triples", raw, "fit");
            c.fit.triples.clear();
            for (const auto& t : raw) {
                if (t.size() != 3)
                    throw ParamError("config: each quantile triple is [q1, q2, q3]");
                c.fit.triples.push_back({t[0], t[1], t[2]});
            }
        }
        std::string mode = c.fit.weight_mode == WeightMode::Uniform ? "uniform" : "optimized";
        read_into(f, "weight_mode", mode, "fit");
        if (mode == "uniform")
            c.fit.weight_mode = WeightMode::Uniform;
        else if (mode == "optimized")
            c.fit.weight_mode = WeightMode::Optimized;
        else
            throw ParamError("config: fit weight_mode must be optimized or uniform");
    }
    if (doc.contains("gate")) {
        const json& g = doc["gate"];
        expect_keys(g, {"ks_level", "mpi_limit", "ks_reference_multiple", "one_sample_ks"},
                    "gate");
        read_into(g, "ks_level", c.gate.ks_level, "gate");
        read_into(g, "mpi_limit", c.gate.mpi_limit, "gate");
        read_into(g, "ks_reference_multiple", c.gate.ks_reference_multiple, "gate");
        read_into(g, "one_sample_ks", c.gate.one_sample_ks, "gate");
    }
    if (doc.contains("var")) {
        const json& v = doc["var"];
        expect_keys(v, {"level", "gp_threshold_quantile", "gp_min_exceedances", "normal_input"},
                    "var");
        read_into(v, "level", c.var.q, "var");
        read_into(v, "gp_threshold_quantile", c.var.gp_threshold_quantile, "var");
        read_into(v, "gp_min_exceedances", c.var.gp_min_exceedances, "var");
        std::string input = c.var.normal_input == NormalVarInput::Slr ? "slr" : "maxima";
        read_into(v, "normal_input", input, "var");
        if (input == "maxima")
            c.var.normal_input = NormalVarInput::Maxima;
        else if (input == "slr")
            c.var.normal_input = NormalVarInput::Slr;
        else
            throw ParamError("config: var normal_input must be maxima or slr");
    }
    if (doc.contains("rebalance")) {
        const json& r = doc["rebalance"];
        expect_keys(r,
                    {"period_days", "position_reduction", "fixed_position_fraction",
                     "transaction_cost"},
                    "rebalance");
        read_into(r, "period_days", c.rebalance.period_days, "rebalance");
        read_into(r, "position_reduction", c.rebalance.position_reduction, "rebalance");
        if (r.contains("fixed_position_fraction") && !r["fixed_position_fraction"].is_null()) {
            double f = 0.0;
            read_into(r, "fixed_position_fraction", f, "rebalance");
            c.rebalance.fixed_position_fraction = f;
        }
        read_into(r, "transaction_cost", c.rebalance.transaction_cost, "rebalance");
    }
    if (doc.contains("bocd")) {
        const json& b = doc["bocd"];
        expect_keys(b, {"hazard_lambda", "thin", "min_collapse_posterior"}, "bocd");
        read_into(b, "hazard_lambda", c.bocd.hazard_lambda, "bocd");
        read_into(b, "thin", c.bocd.thin, "bocd");
        read_into(b, "min_collapse_posterior", c.bocd.min_collapse_posterior, "bocd");
    }
    if (doc.contains("heston")) {
        const json& h = doc["heston"];
        expect_keys(h,
                    {"zs", "full_zs", "deltas", "reps", "full_reps", "epsilon",
                     "horizon_T", "block_duration", "rho"},
                    "heston");
        read_into(h, "zs", c.heston.zs, "heston");
        read_into(h, "full_zs", c.heston.full_zs, "heston");
        read_into(h, "deltas", c.heston.deltas, "heston");
        read_into(h, "reps", c.heston.reps, "heston");
        read_into(h, "full_reps", c.heston.full_reps, "heston");
        read_into(h, "epsilon", c.heston.epsilon, "heston");
        read_into(h, "horizon_T", c.heston.horizon_T, "heston");
        read_into(h, "block_duration", c.heston.block_duration, "heston");
        read_into(h, "rho", c.heston.rho, "heston");
    }

    c.validate();
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("config: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_json(const PipelineConfig& c) {
    json doc;
    doc["schema_version"] = c.schema_version;
    doc["seed"] = c.seed;
    doc["profile"] = c.profile;
    if (c.profile == "custom") {
        json spans = json::array();
        for (const auto& [open, close] : c.sessions.sessions)
            spans.push_back(json::array({open, close}));
        doc["sessions"] = spans;
    }
    doc["bar_minutes"] = c.sessions.bar_minutes;
    doc["filters"] = {{"max_consecutive_missing", c.filters.max_consecutive_missing},
                      {"max_flat_minutes", c.filters.max_flat_minutes},
                      {"min_active_minutes", c.filters.min_active_minutes}};
    doc["realized_std_lookback"] = c.realized_std_lookback;
    doc["block_span_days"] = c.block_span_days;
    doc["window"] = {{"k", c.window.window_maxima_count_k},
                     {"step_days", c.window.step_days}};
    json triples = json::array();
    for (const QuantileTriple& t : c.fit.triples)
        triples.push_back(json::array({t.q1, t.q2, t.q3}));
    doc["fit"] = {
        {"triples", triples},
        {"weight_mode", c.fit.weight_mode == WeightMode::Uniform ? "uniform" : "optimized"}};
    doc["gate"] = {{"ks_level", c.gate.ks_level},
                   {"mpi_limit", c.gate.mpi_limit},
                   {"ks_reference_multiple", c.gate.ks_reference_multiple},
                   {"one_sample_ks", c.gate.one_sample_ks}};
    doc["var"] = {
        {"level", c.var.q},
        {"gp_threshold_quantile", c.var.gp_threshold_quantile},
        {"gp_min_exceedances", c.var.gp_min_exceedances},
        {"normal_input", c.var.normal_input == NormalVarInput::Slr ? "slr" : "maxima"}};
    doc["rebalance"] = {{"period_days", c.rebalance.period_days},
                        {"position_reduction", c.rebalance.position_reduction},
                        {"transaction_cost", c.rebalance.transaction_cost}};
    if (c.rebalance.fixed_position_fraction)
        doc["rebalance"]["fixed_position_fraction"] = *c.rebalance.fixed_position_fraction;
    else
        doc["rebalance"]["fixed_position_fraction"] = nullptr;
    doc["bocd"] = {{"hazard_lambda", c.bocd.hazard_lambda},
                   {"thin", c.bocd.thin},
                   {"min_collapse_posterior", c.bocd.min_collapse_posterior}};
    doc["heston"] = {{"zs", c.heston.zs},
                     {"full_zs", c.heston.full_zs},
                     {"deltas", c.heston.deltas},
                     {"reps", c.heston.reps},
                     {"full_reps", c.heston.full_reps},
                     {"epsilon", c.heston.epsilon},
                     {"horizon_T", c.heston.horizon_T},
                     {"block_duration", c.heston.block_duration},
                     {"rho", c.heston.rho}};
    return doc.dump(2) + "\n";
}

}  // namespace evtrisk

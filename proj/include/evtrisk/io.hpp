#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evtrisk/changepoint.hpp"
#include "evtrisk/maxima.hpp"
#include "evtrisk/monitor.hpp"
#include "evtrisk/returns.hpp"
#include "evtrisk/var.hpp"

namespace evtrisk {

// ----------------------------------------------------------------- input --

struct SkippedRow {
  int line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct BarCsvResult {
  BarSeries bars;
  std::vector<SkippedRow> skipped;
};

// Reads a per-symbol bar file: header `timestamp,price,volume`, ISO-8601
// timestamps with an explicit zone.  Malformed rows are skipped and reported
// with their line numbers; an unreadable file, a wrong header or zero valid
// rows is a DataError.  Rows must keep strictly increasing timestamps (the
// offending row is skipped, not fatal).
BarCsvResult load_bars_csv(const std::string& path, const SessionSpec& spec,
                           std::string symbol);

// ------------------------------------------------------------- reports --

// All report timestamps are rendered in UTC; doubles carry full precision
// so replays are byte-comparable.
std::string slr_csv(const SlrSeries& s);                 // timestamp,slr
std::string maxima_csv(const MaximaSeries& ms);          // block_end,maximum
std::string trajectory_csv(const RiskTrajectory& traj);  // t,xi,...,pass
std::string exclusion_json(const std::string& symbol, const FilterReport& report);
std::string pool_summary_json(std::span<const RiskTrajectory> pool,
                              std::span<const CrossSectionRow> sections);

// date,strategy,value with one row per day per strategy; dates that look
// like yyyymmdd are rendered as YYYY-MM-DD.
std::string backtest_csv(std::span<const BacktestResult> results);
// Target weights at each rebalance, one snapshot per change.
std::string weights_json(std::span<const BacktestResult> results);

std::string jumps_csv(const JumpReport& rep);  // timestamp,slr,threshold
std::string jumps_json(const JumpReport& rep);
std::string changepoints_json(const ChangepointReport& rep);

// --------------------------------------------------------- run plumbing --

// Deterministic run identifier: a 16-hex-digit digest of the canonical
// run description (command, effective config, input digests, flags).
std::string run_id(const std::string& canonical);

// Digest of arbitrary bytes in the same format, for manifest input entries.
std::string content_digest(const std::string& bytes);

std::string manifest_json(const std::string& command, const std::string& id,
                          const std::string& effective_config_json,
                          std::span<const std::pair<std::string, std::string>> inputs,
                          std::span<const std::string> outputs);

// Creates parent directories and writes the full content (DataError on any
// filesystem failure).
void write_file(const std::string& path, const std::string& content);

// Whole file as bytes (DataError when unreadable).
std::string read_file(const std::string& path);

}  // namespace evtrisk

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace evtrisk {

// ---------------------------------------------------------------------------
// Bar data and session calendar
// ---------------------------------------------------------------------------

struct Bar {
  std::int64_t epoch_sec = 0;
  int tz_offset_min = 0;
  int local_date = 0;    // yyyymmdd on the exchange clock
  int local_minute = 0;  // minute of local day
  double price = 0.0;
  double volume = 0.0;
};

// Trading sessions on the local clock, as [open, close] minutes of day, plus
// the sampling grid spacing. The day's price grid has one mark every
// bar_minutes inside each session; the day-open mark carries no return, so a
// Chinese day (09:30-11:30, 13:00-15:00) yields 23 ten-minute returns and a
// U.S. day (09:30-16:00) 38.
struct SessionSpec {
  std::vector<std::pair<int, int>> sessions;  // minutes of day, open < close
  int bar_minutes = 10;

  int returns_per_day() const;
  // Grid marks of one day excluding the day-open mark, as minutes of day.
  std::vector<int> day_marks() const;
  // Session index of each entry of day_marks(); a return exists between
  // consecutive marks of the same session.
  std::vector<int> mark_sessions() const;
  void validate() const;  // throws ParamError
};

struct BarSeries {
  std::string symbol;
  std::vector<Bar> bars;
  SessionSpec session_spec;
};

// Throws DataError unless timestamps are strictly increasing, prices are
// positive and volumes nonnegative.
void validate_bars(const BarSeries& b);

// ---------------------------------------------------------------------------
// Session-quality filters
// ---------------------------------------------------------------------------

struct FilterRules {
  int max_consecutive_missing = 3;  // grid marks without a trade
  int max_flat_minutes = 30;        // trading minutes without price movement
  int min_active_minutes = 90;      // trading minutes with price movement
};

struct DayExclusion {
  int local_date = 0;
  std::string rule;  // "consecutive_missing", "flat_minutes" or "active_minutes"
};

struct FilterReport {
  std::vector<DayExclusion> dropped;
  std::vector<int> calendar;  // every pre-filter trading day, yyyymmdd, in order
  int days_in = 0;
  int days_kept = 0;
};

struct FilteredBars {
  BarSeries bars;  // in-session, volume > 0, retained days only
  FilterReport report;
};

// Drops whole days that violate any rule. A day enters the calendar when it
// has at least one in-session bar; zero-volume bars are discarded before the
// rules run. Rules are checked in the order consecutive_missing (a run of
// more than max_consecutive_missing grid marks with no trade in their
// look-back window), flat_minutes (a run of more than max_flat_minutes
// trading minutes without a price change; runs may span the lunch break) and
// active_minutes (fewer than min_active_minutes minutes showing a price
// change), and the first hit is reported. Idempotent. Throws DataError when
// the input is empty or every day is dropped.
FilteredBars filter_sessions(const BarSeries& raw, const FilterRules& rules);

// ---------------------------------------------------------------------------
// Log-returns on the grid
// ---------------------------------------------------------------------------

struct Return {
  std::int64_t t_epoch = 0;  // time of the return's end mark
  int tz_offset_min = 0;
  int local_date = 0;
  int slot = 0;  // intraday return slot, 0..returns_per_day()-1
  double lr = 0.0;
};

// Samples each grid mark with the last traded price in (mark - bar, mark]
// and emits log-returns between consecutive available marks of the same
// session. Nothing spans a session boundary or a day boundary; a return may
// span up to max_consecutive_missing missing marks inside a retained day and
// is attributed to the slot of its end mark. delta_minutes == 0 uses the
// series' own grid spacing.
std::vector<Return> log_returns(const BarSeries& b, int delta_minutes = 0);

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

// Realized standard deviation of the return at index i from the K most
// recent bipower products: sqrt(pi/(2K) * sum_{j=1..K} |lr[i-j]||lr[i-j+1]|).
// Requires i >= K+1 (throws DataError otherwise); returns 0 when the window
// is entirely flat.
double realized_std(std::span<const double> lr, std::size_t i, std::size_t K);

// Per-slot periodicity factors: median |LR| of each intraday slot divided by
// the grand median, normalized to mean 1, then floored at 0.1. Needs at
// least 20 distinct days (DataError); a single-slot layout returns {1}.
std::vector<double> periodicity_factor(std::span<const Return> lr, int slots);

struct SlrPoint {
  std::int64_t t_epoch = 0;
  int tz_offset_min = 0;
  int day_index = 0;  // index into SlrSeries::calendar
  int slot = 0;
  double slr = 0.0;
};

struct SlrSeries {
  std::string symbol;
  std::vector<SlrPoint> points;
  int bars_per_day = 0;  // return observations per full day
  int bar_minutes = 0;
  std::vector<int> calendar;  // pre-filter trading days, yyyymmdd (empty ok
                              // for synthetic series indexed by day_index)
  int n_calendar_days = 0;
  std::vector<double> periodicity;
  int skipped_zero_std = 0;
  double decorrelation_minutes = 0.0;  // filled by decorrelation_time
  bool decorrelation_capped = false;
};

// SLR_i = LR_i / (realized_std_i * f_slot(i)). The first K+1 returns are
// warm-up; points with zero realized std are skipped and counted. `calendar`
// must contain every return's day (it is the pre-filter day list, so block
// extraction can see filtered holes).
SlrSeries standardize(std::span<const Return> lr, const SessionSpec& spec, int K,
                      std::string symbol, std::vector<int> calendar);

// ---------------------------------------------------------------------------
// Decorrelation time
// ---------------------------------------------------------------------------

struct Decorrelation {
  int lag = 0;
  double minutes = 0.0;
  bool capped = false;  // nothing qualified within 10 days of lags
};

// Smallest lag L >= 1 such that the autocorrelation of |SLR| at every lag in
// [L, L+5] lies inside +-1.96/sqrt(n). Lags are capped at 10 days' worth of
// observations. Needs >= 500 points (DataError).
Decorrelation decorrelation_time(const SlrSeries& s);

// Convenience driver: filter, difference, standardize and stamp the
// decorrelation fields in one call.
struct PipelineResult {
  SlrSeries slr;
  FilterReport report;
};
PipelineResult build_slr_series(const BarSeries& raw, const FilterRules& rules, int K);

}  // namespace evtrisk

#include "evtrisk/returns.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "evtrisk/errors.hpp"
#include "evtrisk/stats.hpp"

namespace evtrisk {

// ------------------------------------------------------------ session spec --

void SessionSpec::validate() const {
  if (bar_minutes < 1) throw ParamError("bar_minutes must be positive");
  if (sessions.empty()) throw ParamError("session spec needs at least one session");
  int prev_close = -1;
  for (auto [open, close] : sessions) {
    if (open <= prev_close) throw ParamError("sessions must be increasing and disjoint");
    if (close <= open) throw ParamError("session close must follow its open");
    if (open < 0 || close >= 24 * 60) throw ParamError("session outside the day");
    if ((close - open) % bar_minutes != 0)
      throw ParamError("session length not divisible by bar_minutes");
    prev_close = close;
  }
  if (returns_per_day() < 1) throw ParamError("day grid yields no returns");
}

int SessionSpec::returns_per_day() const {
  int marks = 0;
  for (auto [open, close] : sessions) marks += (close - open) / bar_minutes;
  return marks - 1;  // the day-open mark carries no return
}

std::vector<int> SessionSpec::day_marks() const {
  std::vector<int> marks;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const int first = sessions[s].first + (s == 0 ? bar_minutes : 0);
    for (int t = first; t <= sessions[s].second; t += bar_minutes) marks.push_back(t);
  }
  return marks;
}

std::vector<int> SessionSpec::mark_sessions() const {
  std::vector<int> ids;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const int first = sessions[s].first + (s == 0 ? bar_minutes : 0);
    for (int t = first; t <= sessions[s].second; t += bar_minutes)
      ids.push_back(static_cast<int>(s));
  }
  return ids;
}

void validate_bars(const BarSeries& b) {
  if (b.bars.empty()) throw DataError(b.symbol + ": no bars");
  std::int64_t prev = b.bars.front().epoch_sec - 1;
  for (const Bar& bar : b.bars) {
    if (bar.epoch_sec <= prev) throw DataError(b.symbol + ": timestamps not strictly increasing");
    if (!(bar.price > 0.0) || !std::isfinite(bar.price))
      throw DataError(b.symbol + ": nonpositive price");
    if (bar.volume < 0.0 || !std::isfinite(bar.volume))
      throw DataError(b.symbol + ": negative volume");
    prev = bar.epoch_sec;
  }
}

// ---------------------------------------------------------------- filtering --

namespace {

bool in_session(const SessionSpec& spec, int minute) {
  for (auto [open, close] : spec.sessions)
    if (minute >= open && minute <= close) return true;
  return false;
}

// Minute-of-day -> 0-based index on the concatenated trading-minute timeline.
int trading_minute_index(const SessionSpec& spec, int minute) {
  int base = 0;
  for (auto [open, close] : spec.sessions) {
    if (minute >= open && minute <= close) return base + (minute - open);
    base += close - open + 1;
  }
  return -1;
}

int trading_minutes_per_day(const SessionSpec& spec) {
  int total = 0;
  for (auto [open, close] : spec.sessions) total += close - open + 1;
  return total;
}

struct DayBars {
  int local_date = 0;
  std::vector<const Bar*> bars;  // in-session, volume > 0, time order
};

// Returns the offending rule name, or nullptr when the day is clean.
const char* day_violation(const DayBars& day, const SessionSpec& spec, const FilterRules& rules) {
  // 1) runs of grid marks with no trade in their look-back window
  const std::vector<int> marks = spec.day_marks();
  {
    int run = 0, worst = 0;
    std::size_t b = 0;
    for (int mark : marks) {
      const Bar* priced = nullptr;
      while (b < day.bars.size() && day.bars[b]->local_minute <= mark) {
        if (day.bars[b]->local_minute > mark - spec.bar_minutes) priced = day.bars[b];
        ++b;
      }
      run = priced ? 0 : run + 1;
      worst = std::max(worst, run);
    }
    if (worst > rules.max_consecutive_missing) return "consecutive_missing";
  }

  // 2) / 3) price-movement minutes on the trading timeline
  std::vector<int> movement;
  double prev_price = 0.0;
  bool have_prev = false;
  for (const Bar* bar : day.bars) {
    if (have_prev && bar->price != prev_price) {
      const int idx = trading_minute_index(spec, bar->local_minute);
      if (movement.empty() || movement.back() != idx) movement.push_back(idx);
    }
    prev_price = bar->price;
    have_prev = true;
  }
  const int total = trading_minutes_per_day(spec);
  {
    int prev = -1, worst = 0;
    for (int m : movement) {
      worst = std::max(worst, m - prev - 1);
      prev = m;
    }
    worst = std::max(worst, total - prev - 1);
    if (worst > rules.max_flat_minutes) return "flat_minutes";
  }
  if (static_cast<int>(movement.size()) < rules.min_active_minutes) return "active_minutes";
  return nullptr;
}

}  // namespace

FilteredBars filter_sessions(const BarSeries& raw, const FilterRules& rules) {
  validate_bars(raw);
  raw.session_spec.validate();

  std::vector<DayBars> days;
  int prev_date = 0;
  for (const Bar& bar : raw.bars) {
    if (!in_session(raw.session_spec, bar.local_minute)) continue;
    if (bar.local_date < prev_date)
      throw DataError(raw.symbol + ": local dates out of order");
    if (days.empty() || days.back().local_date != bar.local_date)
      days.push_back({bar.local_date, {}});
    prev_date = bar.local_date;
    if (bar.volume > 0.0) days.back().bars.push_back(&bar);
  }
  if (days.empty()) throw DataError(raw.symbol + ": no in-session bars");

  FilteredBars out;
  out.bars.symbol = raw.symbol;
  out.bars.session_spec = raw.session_spec;
  out.report.days_in = static_cast<int>(days.size());
  for (const DayBars& day : days) {
    out.report.calendar.push_back(day.local_date);
    if (const char* rule = day_violation(day, raw.session_spec, rules)) {
      out.report.dropped.push_back({day.local_date, rule});
    } else {
      ++out.report.days_kept;
      for (const Bar* bar : day.bars) out.bars.bars.push_back(*bar);
    }
  }
  if (out.report.days_kept == 0) throw DataError(raw.symbol + ": every trading day filtered out");
  return out;
}

// -------------------------------------------------------------- log-returns --

std::vector<Return> log_returns(const BarSeries& b, int delta_minutes) {
  SessionSpec spec = b.session_spec;
  if (delta_minutes > 0) spec.bar_minutes = delta_minutes;
  spec.validate();

  const std::vector<int> marks = spec.day_marks();
  const std::vector<int> sess = spec.mark_sessions();
  // Intraday slot of each mark when it closes a return; -1 for session opens.
  std::vector<int> slot(marks.size(), -1);
  int next_slot = 0;
  for (std::size_t i = 1; i < marks.size(); ++i)
    if (sess[i] == sess[i - 1]) slot[i] = next_slot++;

  std::vector<Return> out;
  std::size_t i = 0;
  while (i < b.bars.size()) {
    const int date = b.bars[i].local_date;
    std::size_t j = i;
    while (j < b.bars.size() && b.bars[j].local_date == date) ++j;

    struct MarkPrice {
      std::size_t mark;
      double price;
      std::int64_t epoch;
      int tz;
    };
    std::vector<MarkPrice> priced;
    std::size_t bar = i;
    for (std::size_t m = 0; m < marks.size(); ++m) {
      const Bar* last = nullptr;
      while (bar < j && b.bars[bar].local_minute <= marks[m]) {
        if (b.bars[bar].volume > 0.0 && b.bars[bar].local_minute > marks[m] - spec.bar_minutes)
          last = &b.bars[bar];
        ++bar;
      }
      if (last) {
        const std::int64_t minute_start = last->epoch_sec - (((last->epoch_sec % 60) + 60) % 60);
        priced.push_back({m, last->price, minute_start + 60 * (marks[m] - last->local_minute),
                          last->tz_offset_min});
      }
    }
    for (std::size_t p = 1; p < priced.size(); ++p) {
      const auto& a = priced[p - 1];
      const auto& e = priced[p];
      if (sess[a.mark] != sess[e.mark]) continue;  // never span a session break
      out.push_back({e.epoch, e.tz, date, slot[e.mark], std::log(e.price / a.price)});
    }
    i = j;
  }
  return out;
}

// ----------------------------------------------------------- realized sigma --

double realized_std(std::span<const double> lr, std::size_t i, std::size_t K) {
  if (K < 1) throw ParamError("realized_std: K must be positive");
  if (i < K + 1 || i >= lr.size())
    throw DataError("realized_std: not enough history (warm-up)");
  double sum = 0.0;
  for (std::size_t j = 1; j <= K; ++j)
    sum += std::fabs(lr[i - j]) * std::fabs(lr[i - j + 1]);
  return std::sqrt(std::numbers::pi / (2.0 * static_cast<double>(K)) * sum);
}

// ---------------------------------------------------------------- periodicity

namespace {

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> periodicity_factor(std::span<const Return> lr, int slots) {
  if (slots < 1) throw ParamError("periodicity_factor: slots must be positive");
  std::set<int> dates;
  for (const Return& r : lr) dates.insert(r.local_date);
  if (dates.size() < 20) throw DataError("periodicity_factor: needs at least 20 days");
  if (slots == 1) return {1.0};

  std::vector<std::vector<double>> bins(static_cast<std::size_t>(slots));
  std::vector<double> all;
  all.reserve(lr.size());
  for (const Return& r : lr) {
    if (r.slot < 0 || r.slot >= slots) throw DataError("periodicity_factor: slot out of range");
    bins[static_cast<std::size_t>(r.slot)].push_back(std::fabs(r.lr));
    all.push_back(std::fabs(r.lr));
  }
  const double grand = median_of(all);
  if (grand <= 0.0) throw DataError("periodicity_factor: degenerate return scale");

  std::vector<double> f(static_cast<std::size_t>(slots), 1.0);
  for (std::size_t s = 0; s < bins.size(); ++s)
    if (!bins[s].empty()) f[s] = median_of(bins[s]) / grand;
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(f.size());
  for (double& v : f) v = std::max(v / mean, 0.1);
  return f;
}

// -------------------------------------------------------------- standardize --

SlrSeries standardize(std::span<const Return> lr, const SessionSpec& spec, int K,
                      std::string symbol, std::vector<int> calendar) {
  spec.validate();
  if (K < 1) throw ParamError("standardize: K must be positive");
  if (calendar.empty()) throw DataError("standardize: empty calendar");
  for (std::size_t i = 1; i < calendar.size(); ++i)
    if (calendar[i] <= calendar[i - 1]) throw DataError("standardize: calendar not increasing");

  SlrSeries s;
  s.symbol = std::move(symbol);
  s.bars_per_day = spec.returns_per_day();
  s.bar_minutes = spec.bar_minutes;
  s.periodicity = periodicity_factor(lr, s.bars_per_day);
  s.calendar = std::move(calendar);
  s.n_calendar_days = static_cast<int>(s.calendar.size());

  std::vector<double> lrs(lr.size());
  for (std::size_t i = 0; i < lr.size(); ++i) lrs[i] = lr[i].lr;

  for (std::size_t i = K + 1; i < lr.size(); ++i) {
    const double sd = realized_std(lrs, i, static_cast<std::size_t>(K));
    if (sd == 0.0) {
      ++s.skipped_zero_std;
      continue;
    }
    const auto day = std::lower_bound(s.calendar.begin(), s.calendar.end(), lr[i].local_date);
    if (day == s.calendar.end() || *day != lr[i].local_date)
      throw DataError("standardize: return on a day missing from the calendar");
    s.points.push_back({lr[i].t_epoch, lr[i].tz_offset_min,
                        static_cast<int>(day - s.calendar.begin()), lr[i].slot,
                        lr[i].lr / (sd * s.periodicity[static_cast<std::size_t>(lr[i].slot)])});
  }
  return s;
}

// ------------------------------------------------------------- decorrelation

Decorrelation decorrelation_time(const SlrSeries& s) {
  const std::size_t n = s.points.size();
  if (n < 500) throw DataError("decorrelation_time: needs at least 500 points");
  std::vector<double> abs_slr(n);
  for (std::size_t i = 0; i < n; ++i) abs_slr[i] = std::fabs(s.points[i].slr);

  const int cap = 10 * s.bars_per_day;
  const int max_lag = std::min<int>(cap + 5, static_cast<int>(n) - 2);
  const std::vector<double> acf = autocorrelations(abs_slr, max_lag);
  const double band = 1.96 / std::sqrt(static_cast<double>(n));

  for (int lag = 1; lag <= cap && lag + 5 <= max_lag; ++lag) {
    bool inside = true;
    for (int l = lag; l <= lag + 5; ++l)
      if (std::fabs(acf[static_cast<std::size_t>(l)]) >= band) {
        inside = false;
        break;
      }
    if (inside)
      return {lag, static_cast<double>(lag) * s.bar_minutes, false};
  }
  return {cap, static_cast<double>(cap) * s.bar_minutes, true};
}

PipelineResult build_slr_series(const BarSeries& raw, const FilterRules& rules, int K) {
  FilteredBars filtered = filter_sessions(raw, rules);
  const std::vector<Return> rets = log_returns(filtered.bars);
  PipelineResult out{standardize(rets, filtered.bars.session_spec, K, filtered.bars.symbol,
                                 filtered.report.calendar),
                     std::move(filtered.report)};
  const Decorrelation d = decorrelation_time(out.slr);
  out.slr.decorrelation_minutes = d.minutes;
  out.slr.decorrelation_capped = d.capped;
  return out;
}

}  // namespace evtrisk

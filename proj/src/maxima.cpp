#include "evtrisk/maxima.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "evtrisk/errors.hpp"

namespace evtrisk {

MaximaSeries extract_block_maxima(const SlrSeries& s, int block_span_days) {
  if (block_span_days < 1) throw ParamError("block span must be positive");
  if (s.points.empty()) throw DataError(s.symbol + ": no SLR points to block");
  if (s.n_calendar_days < 1) throw DataError(s.symbol + ": empty calendar");

  MaximaSeries ms;
  ms.symbol = s.symbol;
  ms.block_span_days = block_span_days;
  ms.block_size_m = s.bars_per_day * block_span_days;

  const int n_blocks = (s.n_calendar_days + block_span_days - 1) / block_span_days;
  std::size_t p = 0;
  for (int b = 0; b < n_blocks; ++b) {
    const int day_lo = b * block_span_days;
    const int day_hi = std::min(day_lo + block_span_days, s.n_calendar_days);  // exclusive
    double y = 0.0;
    std::int64_t end = 0;
    std::set<int> days_seen;
    while (p < s.points.size() && s.points[p].day_index < day_hi) {
      y = std::max(y, std::fabs(s.points[p].slr));
      end = s.points[p].t_epoch;
      days_seen.insert(s.points[p].day_index);
      ++p;
    }
    if (days_seen.empty()) {
      ++ms.skipped_blocks;
      continue;
    }
    const bool shrunk = static_cast<int>(days_seen.size()) < block_span_days;
    if (shrunk) ++ms.shrunk_blocks;
    ms.maxima.push_back({end, y, shrunk});
  }
  return ms;
}

RollingSamples rolling_samples(const MaximaSeries& ms, const RollingWindow& w) {
  if (w.window_maxima_count_k < 30) throw ParamError("rolling window k must be >= 30");
  if (ms.block_span_days < 1 || w.step_days % ms.block_span_days != 0 || w.step_days < 1)
    throw ParamError("step_days must be a positive multiple of the block span");

  RollingSamples rs;
  rs.k = w.window_maxima_count_k;
  rs.stride = w.step_days / ms.block_span_days;
  rs.ys.reserve(ms.maxima.size());
  for (const MaximaPoint& mp : ms.maxima) rs.ys.push_back(mp.y);

  const std::size_t n = ms.maxima.size();
  const std::size_t k = static_cast<std::size_t>(rs.k);
  if (n < k) {
    rs.insufficient = true;
    return rs;
  }
  for (std::size_t start = 0; start + k <= n; start += static_cast<std::size_t>(rs.stride))
    rs.fit_times.push_back(ms.maxima[start + k - 1].block_end);
  return rs;
}

}  // namespace evtrisk

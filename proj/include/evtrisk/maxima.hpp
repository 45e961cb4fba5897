#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evtrisk/returns.hpp"

namespace evtrisk {

struct MaximaPoint {
  std::int64_t block_end = 0;  // time of the last observation in the block
  double y = 0.0;              // max |SLR| over the block
  bool shrunk = false;         // block lost one or more days to the filters
};

struct MaximaSeries {
  std::string symbol;
  std::vector<MaximaPoint> maxima;
  int block_size_m = 0;  // nominal observations per block (full days)
  int block_span_days = 0;
  int skipped_blocks = 0;  // blocks with no surviving observation
  int shrunk_blocks = 0;
};

// Non-overlapping blocks of block_span_days consecutive calendar days; the
// calendar is the pre-filter day sequence carried by the SLR series, so days
// dropped by the quality filters shrink their block (flagged) instead of
// shifting later blocks. Blocks with no surviving points are skipped and
// counted. Throws DataError on an empty series.
MaximaSeries extract_block_maxima(const SlrSeries& s, int block_span_days = 2);

struct RollingWindow {
  int window_maxima_count_k = 123;
  int step_days = 2;  // must be a multiple of the block span
};

// Rolling fit samples over the maxima sequence: sample i covers maxima
// [i*stride, i*stride + k) and is stamped with the time of its last block.
// The first sample exists only once a full window of k maxima has been seen.
struct RollingSamples {
  int k = 0;
  bool insufficient = false;  // fewer than k maxima: no samples
  std::vector<std::int64_t> fit_times;
  std::vector<double> ys;  // all block maxima, in block order
  int stride = 1;          // blocks between consecutive samples

  std::size_t count() const { return fit_times.size(); }
  std::span<const double> sample(std::size_t i) const {
    return {ys.data() + i * static_cast<std::size_t>(stride), static_cast<std::size_t>(k)};
  }
};

RollingSamples rolling_samples(const MaximaSeries& ms, const RollingWindow& w);

}  // namespace evtrisk

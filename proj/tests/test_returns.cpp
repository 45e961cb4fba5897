#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <doctest.h>

#include "evtrisk/errors.hpp"
#include "evtrisk/maxima.hpp"
#include "evtrisk/returns.hpp"
#include "evtrisk/stats.hpp"
#include "evtrisk/timeparse.hpp"

using namespace evtrisk;

namespace {

constexpr int kCnTz = 480;  // +08:00

SessionSpec cn_spec() { return {{{570, 690}, {780, 900}}, 10}; }  // 09:30-11:30, 13:00-15:00
SessionSpec us_spec() { return {{{570, 960}}, 10}; }              // 09:30-16:00

int date_of(int day_ordinal) {
  int y, m, d;
  civil_from_days(days_from_civil(2024, 1, 1) + day_ordinal, y, m, d);
  return y * 10000 + m * 100 + d;
}

std::int64_t epoch_of(int day_ordinal, int minute) {
  return (days_from_civil(2024, 1, 1) + day_ordinal) * 86400 + minute * 60 - kCnTz * 60;
}

// One full day of minute bars; price_at maps minute-of-day to price.
void add_day(BarSeries& b, int day, const std::function<double(int)>& price_at,
             const std::function<double(int)>& volume_at = {}) {
  for (auto [open, close] : b.session_spec.sessions)
    for (int m = open; m <= close; ++m)
      b.bars.push_back({epoch_of(day, m), kCnTz, date_of(day), m, price_at(m),
                        volume_at ? volume_at(m) : 1.0});
}

// Price that changes every minute: a clean, fully active day.
double zigzag(int minute) { return 100.0 + (minute % 2 ? 0.5 : 0.0); }

// Minute-of-day -> trading-minute index for cn_spec.
int cn_idx(int minute) { return minute <= 690 ? minute - 570 : 121 + (minute - 780); }

std::vector<int> fab_calendar(int n_days) {
  std::vector<int> c(static_cast<std::size_t>(n_days));
  for (int d = 0; d < n_days; ++d) c[static_cast<std::size_t>(d)] = date_of(d);
  return c;
}

std::vector<Return> fab_returns(int n_days, int slots,
                                const std::function<double(int, int)>& lr) {
  std::vector<Return> out;
  for (int d = 0; d < n_days; ++d)
    for (int s = 0; s < slots; ++s)
      out.push_back({epoch_of(d, 600) + s, 0, date_of(d), s, lr(d, s)});
  return out;
}

SlrSeries fab_slr(const std::vector<double>& vals, int bars_per_day = 23) {
  SlrSeries s;
  s.symbol = "syn";
  s.bars_per_day = bars_per_day;
  s.bar_minutes = 10;
  s.n_calendar_days =
      (static_cast<int>(vals.size()) + bars_per_day - 1) / bars_per_day;
  s.calendar = fab_calendar(s.n_calendar_days);
  for (std::size_t i = 0; i < vals.size(); ++i)
    s.points.push_back({static_cast<std::int64_t>(i) * 600, 0,
                        static_cast<int>(i) / bars_per_day,
                        static_cast<int>(i) % bars_per_day, vals[i]});
  return s;
}

}  // namespace

TEST_SUITE("returns") {
  TEST_CASE("iso8601 parse and format") {
    CHECK(days_from_civil(1970, 1, 1) == 0);
    CHECK(days_from_civil(2000, 1, 1) == 10957);

    const CivilTime ct = parse_iso8601("2015-03-02T09:31:00+08:00");
    CHECK(ct.local_date == 20150302);
    CHECK(ct.local_minute == 9 * 60 + 31);
    CHECK(ct.tz_offset_min == 480);
    CHECK(ct.epoch_sec == days_from_civil(2015, 3, 2) * 86400 + (9 * 60 + 31) * 60 - 8 * 3600);
    CHECK(format_iso8601(ct.epoch_sec, ct.tz_offset_min) == "2015-03-02T09:31:00+08:00");

    const CivilTime z = parse_iso8601("1970-01-02T00:00:30Z");
    CHECK(z.epoch_sec == 86430);
    CHECK(format_iso8601(z.epoch_sec, 0) == "1970-01-02T00:00:30Z");
    CHECK(parse_iso8601("2020-06-01 10:00:00.250-04:30").epoch_sec ==
          parse_iso8601("2020-06-01T10:00:00-04:30").epoch_sec);
    CHECK(parse_iso8601("2020-06-01T10:00:00-04:30").tz_offset_min == -270);

    CHECK_THROWS_AS(parse_iso8601("2020-06-01T10:00:00"), DataError);  // zone required
    CHECK_THROWS_AS(parse_iso8601("2020-13-01T10:00:00Z"), DataError);
    CHECK_THROWS_AS(parse_iso8601("garbage"), DataError);

    int y, m, d;
    civil_from_days(days_from_civil(2024, 2, 29), y, m, d);
    CHECK((y == 2024 && m == 2 && d == 29));
  }

  TEST_CASE("session grid shape") {
    CHECK(cn_spec().returns_per_day() == 23);
    CHECK(us_spec().returns_per_day() == 38);
    CHECK(cn_spec().day_marks().size() == 25);
    CHECK(us_spec().day_marks().size() == 39);
    CHECK(cn_spec().day_marks().front() == 580);  // day-open mark dropped
    CHECK(cn_spec().day_marks()[12] == 780);      // lunch reopen mark kept

    SessionSpec bad = cn_spec();
    bad.sessions[1].first = 680;  // overlaps the morning session
    CHECK_THROWS_AS(bad.validate(), ParamError);
    bad = cn_spec();
    bad.sessions[0].second = 695;  // not divisible by 10
    CHECK_THROWS_AS(bad.validate(), ParamError);
  }

  TEST_CASE("log returns on a toy grid") {
    BarSeries b;
    b.symbol = "toy";
    b.session_spec = SessionSpec{{{570, 590}}, 10};  // marks 09:40, 09:50 -> one return
    b.bars.push_back({epoch_of(0, 575), kCnTz, date_of(0), 575, 100.0, 1.0});
    b.bars.push_back({epoch_of(0, 585), kCnTz, date_of(0), 585, 100.0, 1.0});
    auto flat = log_returns(b);
    REQUIRE(flat.size() == 1);
    CHECK(flat[0].lr == doctest::Approx(0.0));

    b.bars[1].price = 100.0 * std::exp(1.0);
    auto unit = log_returns(b);
    REQUIRE(unit.size() == 1);
    CHECK(unit[0].lr == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(unit[0].slot == 0);
    CHECK(unit[0].t_epoch == epoch_of(0, 590));  // stamped at the end mark
  }

  TEST_CASE("log returns skip session and day boundaries") {
    BarSeries b;
    b.symbol = "cn";
    b.session_spec = cn_spec();
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd(0.0, 1e-3);
    double lp = std::log(100.0);
    auto walk = [&](int) { lp += nd(gen); return std::exp(lp); };
    add_day(b, 0, walk);
    add_day(b, 1, walk);

    const auto rets = log_returns(b);
    CHECK(rets.size() == 46);  // 23 per day, none spanning lunch or overnight
    for (std::size_t i = 0; i < rets.size(); ++i) {
      CHECK(rets[i].slot == static_cast<int>(i % 23));
      CHECK(rets[i].local_date == date_of(static_cast<int>(i / 23)));
    }
    // first afternoon return ends at 13:10, i.e. slot 11
    CHECK(rets[11].t_epoch == epoch_of(0, 790));

    // total log-return over a session telescopes to log(last/first mark price)
    double morning = 0.0;
    for (int i = 0; i < 11; ++i) morning += rets[static_cast<std::size_t>(i)].lr;
    CHECK(morning == doctest::Approx(0.0).epsilon(1.0));  // finite sanity
  }

  TEST_CASE("a gap of up to three marks is spanned inside a day") {
    BarSeries b;
    b.symbol = "gap";
    b.session_spec = cn_spec();
    add_day(b, 0, zigzag);
    // knock out trading between 10:00 and 10:30: marks 10:10, 10:20, 10:30 miss
    std::erase_if(b.bars, [](const Bar& bar) {
      return bar.local_minute > 600 && bar.local_minute <= 630;
    });
    const auto rets = log_returns(b);
    CHECK(rets.size() == 20);  // 23 minus three missing marks
    bool spanned = false;
    for (const Return& r : rets)
      if (r.slot == 5 && r.t_epoch == epoch_of(0, 640)) spanned = true;
    CHECK(spanned);  // 10:00 -> 10:40 return lands in the 10:40 slot
  }

  TEST_CASE("filters: missing marks, flat runs, inactivity") {
    auto one_day = [&](const std::function<double(int)>& price,
                       const std::function<double(int)>& vol = {}) {
      BarSeries b;
      b.symbol = "f";
      b.session_spec = cn_spec();
      add_day(b, 0, price, vol);
      add_day(b, 1, zigzag);  // keep one clean day so filtering never empties
      return filter_sessions(b, FilterRules{});
    };

    // clean day retained
    auto clean = one_day(zigzag);
    CHECK(clean.report.days_kept == 2);
    CHECK(clean.report.dropped.empty());
    CHECK(clean.report.calendar == std::vector<int>{date_of(0), date_of(1)});

    // four consecutive missing grid marks -> consecutive_missing
    {
      BarSeries b;
      b.symbol = "f";
      b.session_spec = cn_spec();
      add_day(b, 0, zigzag);
      std::erase_if(b.bars, [](const Bar& bar) {
        return bar.local_minute > 600 && bar.local_minute <= 640;
      });
      add_day(b, 1, zigzag);
      auto r = filter_sessions(b, FilterRules{});
      REQUIRE(r.report.dropped.size() == 1);
      CHECK(r.report.dropped[0].local_date == date_of(0));
      CHECK(r.report.dropped[0].rule == "consecutive_missing");
      CHECK(r.report.days_in == 2);
      CHECK(r.report.days_kept == 1);
    }

    // exactly three missing marks -> retained
    {
      BarSeries b;
      b.symbol = "f";
      b.session_spec = cn_spec();
      add_day(b, 0, zigzag);
      std::erase_if(b.bars, [](const Bar& bar) {
        return bar.local_minute > 600 && bar.local_minute <= 630;
      });
      add_day(b, 1, zigzag);
      CHECK(filter_sessions(b, FilterRules{}).report.days_kept == 2);
    }

    // zero-volume minutes leave their marks unpriced
    {
      auto r = one_day(zigzag, [](int m) { return m > 600 && m <= 640 ? 0.0 : 1.0; });
      REQUIRE(r.report.dropped.size() == 1);
      CHECK(r.report.dropped[0].rule == "consecutive_missing");
    }

    // entering the freeze at `lo` is itself a move, so the flat run is hi - lo
    auto hold = [](int lo, int hi) {
      return [lo, hi](int m) {
        const int eff = (m >= lo && m <= hi) ? lo : m;  // price frozen on [lo,hi]
        return 100.0 + (eff % 2 ? 0.5 : 0.0);
      };
    };
    {
      auto r = one_day(hold(600, 631));  // 31 flat minutes
      REQUIRE(r.report.dropped.size() == 1);
      CHECK(r.report.dropped[0].rule == "flat_minutes");
    }
    CHECK(one_day(hold(600, 630)).report.dropped.empty());  // 30 is allowed

    // sparse movement (every third minute, 80 < 90) -> active_minutes
    auto sparse = [](int step) {
      return [step](int m) { return 100.0 + static_cast<double>(cn_idx(m) / step); };
    };
    {
      auto r = one_day(sparse(3));
      REQUIRE(r.report.dropped.size() == 1);
      CHECK(r.report.dropped[0].rule == "active_minutes");
    }
    CHECK(one_day(sparse(2)).report.dropped.empty());  // 120 movement minutes

    // all days dropped -> error
    {
      BarSeries b;
      b.symbol = "f";
      b.session_spec = cn_spec();
      add_day(b, 0, [](int) { return 100.0; });
      CHECK_THROWS_AS(filter_sessions(b, FilterRules{}), DataError);
    }
  }

  TEST_CASE("filter_sessions is idempotent") {
    BarSeries b;
    b.symbol = "month";
    b.session_spec = cn_spec();
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd(0.0, 2e-3);
    double lp = std::log(50.0);
    for (int d = 0; d < 30; ++d) {
      add_day(b, d, [&](int) { lp += nd(gen); return std::exp(lp); });
      if (d % 7 == 3) {  // poke holes in some days
        const int cut = 580 + 10 * (d % 11);
        std::erase_if(b.bars, [&](const Bar& bar) {
          return bar.local_date == date_of(d) && bar.local_minute > cut &&
                 bar.local_minute <= cut + 45;
        });
      }
    }
    auto once = filter_sessions(b, FilterRules{});
    auto twice = filter_sessions(once.bars, FilterRules{});
    CHECK(once.report.days_in == 30);
    CHECK(once.report.days_kept < 30);
    CHECK(twice.report.days_kept == once.report.days_kept);
    REQUIRE(twice.bars.bars.size() == once.bars.bars.size());
    for (std::size_t i = 0; i < once.bars.bars.size(); ++i) {
      CHECK(twice.bars.bars[i].epoch_sec == once.bars.bars[i].epoch_sec);
      CHECK(twice.bars.bars[i].price == once.bars.bars[i].price);
    }
  }

  TEST_CASE("realized std: collapse, degeneracy, gaussian oracle") {
    // constant |LR| = c collapses to c * sqrt(pi/2)
    std::vector<double> lr(200, 0.004);
    for (std::size_t i = 0; i < lr.size(); i += 2) lr[i] = -0.004;
    CHECK(realized_std(lr, 151, 150) ==
          doctest::Approx(0.004 * std::sqrt(std::acos(-1.0) / 2.0)).epsilon(1e-12));

    std::vector<double> zero(200, 0.0);
    CHECK(realized_std(zero, 151, 150) == 0.0);

    CHECK_THROWS_AS(realized_std(lr, 150, 150), DataError);  // needs K+1 history
    CHECK_THROWS_AS(realized_std(lr, 200, 150), DataError);  // out of range
    CHECK_THROWS_AS(realized_std(lr, 151, 0), ParamError);

    // i.i.d. N(0, sigma^2): estimate within 5% of the sample deviation
    std::mt19937_64 gen(17);
    std::normal_distribution<double> nd(0.0, 0.007);
    std::vector<double> g(5000);
    for (double& v : g) v = nd(gen);
    const double est = realized_std(g, 4500, 1000);
    const double sd = std::sqrt(sample_variance(g));
    CHECK(std::fabs(est - sd) / sd < 0.05);
  }

  TEST_CASE("periodicity factors") {
    std::mt19937_64 gen(23);
    std::normal_distribution<double> nd(0.0, 0.01);

    // homogeneous scale -> factors near 1, mean exactly 1
    auto flat = fab_returns(200, 23, [&](int, int) { return nd(gen); });
    auto f = periodicity_factor(flat, 23);
    REQUIRE(f.size() == 23);
    double mean = 0.0;
    for (double v : f) {
      CHECK(v > 0.75);
      CHECK(v < 1.25);
      mean += v;
    }
    CHECK(mean / 23.0 == doctest::Approx(1.0).epsilon(1e-12));

    // slot 0 at twice the scale -> factor ratio about 2
    auto bumped =
        fab_returns(500, 23, [&](int, int s) { return (s == 0 ? 2.0 : 1.0) * nd(gen); });
    auto f2 = periodicity_factor(bumped, 23);
    double rest = 0.0;
    for (std::size_t s = 1; s < f2.size(); ++s) rest += f2[s];
    rest /= 22.0;
    CHECK(f2[0] / rest == doctest::Approx(2.0).epsilon(0.10));

    // single-slot layout degenerates to {1}
    auto single = fab_returns(25, 1, [&](int, int) { return nd(gen); });
    CHECK(periodicity_factor(single, 1) == std::vector<double>{1.0});

    // a dead slot is floored at 0.1
    auto dead =
        fab_returns(200, 23, [&](int, int s) { return s == 5 ? 0.0 : nd(gen); });
    auto f3 = periodicity_factor(dead, 23);
    CHECK(f3[5] == 0.1);

    CHECK_THROWS_AS(periodicity_factor(fab_returns(19, 23, [&](int, int) { return nd(gen); }), 23),
                    DataError);
  }

  TEST_CASE("standardize: unit scale, zeros, equivariance") {
    std::mt19937_64 gen(29);
    std::normal_distribution<double> nd(0.0, 0.007);
    auto rets = fab_returns(250, 23, [&](int, int) { return nd(gen); });
    rets[1000].lr = 0.0;

    SlrSeries s = standardize(rets, cn_spec(), 500, "syn", fab_calendar(250));
    CHECK(s.points.size() == rets.size() - 501 - static_cast<std::size_t>(s.skipped_zero_std));
    CHECK(s.skipped_zero_std == 0);
    CHECK(s.bars_per_day == 23);

    double var = 0.0;
    for (const SlrPoint& p : s.points) var += p.slr * p.slr;
    var /= static_cast<double>(s.points.size() - 1);
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(0.10));

    // the injected zero return is a zero SLR, not a skip
    bool found_zero = false;
    for (const SlrPoint& p : s.points)
      if (p.t_epoch == rets[1000].t_epoch) {
        found_zero = true;
        CHECK(p.slr == 0.0);
      }
    CHECK(found_zero);

    // scaling every LR by a positive constant leaves SLR unchanged
    auto doubled = rets;
    for (Return& r : doubled) r.lr *= 2.0;
    SlrSeries s2 = standardize(doubled, cn_spec(), 500, "syn", fab_calendar(250));
    REQUIRE(s2.points.size() == s.points.size());
    for (std::size_t i = 0; i < s.points.size(); ++i)
      CHECK(s2.points[i].slr == doctest::Approx(s.points[i].slr).epsilon(1e-12));

    // an all-flat warm-up region yields skipped points
    auto quiet = rets;
    for (std::size_t i = 0; i < 601; ++i) quiet[i].lr = 0.0;
    SlrSeries s3 = standardize(quiet, cn_spec(), 500, "syn", fab_calendar(250));
    CHECK(s3.skipped_zero_std == 101);  // indices 501..601 have a flat window
    CHECK(s3.points.size() == quiet.size() - 501 - 101);

    // a return on a day outside the calendar is rejected
    CHECK_THROWS_AS(standardize(rets, cn_spec(), 500, "syn", fab_calendar(100)), DataError);
  }

  TEST_CASE("decorrelation time") {
    std::mt19937_64 gen(4);  // fixed: detection is a statistic of the draw
    std::normal_distribution<double> nd;
    std::vector<double> iid(10000), ar(10000);
    double x = 0.0;
    for (std::size_t i = 0; i < iid.size(); ++i) {
      iid[i] = nd(gen);
      x = 0.9 * x + nd(gen);
      ar[i] = x;
    }

    const Decorrelation di = decorrelation_time(fab_slr(iid));
    CHECK(di.lag == 1);  // white series decorrelates immediately
    CHECK(di.minutes == 10.0);
    CHECK_FALSE(di.capped);

    // AR(1) with phi = 0.9: the analytic ACF 0.9^L crosses the +-1.96/sqrt(n)
    // band at L = log(1.96/sqrt(n))/log(0.9) ~ 37.3; detection sits within 5.
    const Decorrelation da = decorrelation_time(fab_slr(ar));
    CHECK(std::abs(da.lag - 37) <= 5);
    CHECK(da.minutes == 10.0 * da.lag);
    CHECK_FALSE(da.capped);

    // a slow oscillation keeps the ACF near cos(2 pi L / 2000), far outside
    // the band for every lag within the 10-day cap
    std::vector<double> sticky(3000);
    for (std::size_t i = 0; i < sticky.size(); ++i)
      sticky[i] = std::sin(2.0 * std::acos(-1.0) * static_cast<double>(i) / 2000.0);
    const Decorrelation dc = decorrelation_time(fab_slr(sticky));
    CHECK(dc.capped);
    CHECK(dc.lag == 230);  // 10 days x 23 bars

    CHECK_THROWS_AS(decorrelation_time(fab_slr(std::vector<double>(499, 1.0))), DataError);
  }

  TEST_CASE("full pipeline on synthetic bars") {
    BarSeries b;
    b.symbol = "e2e";
    b.session_spec = cn_spec();
    std::mt19937_64 gen(31);
    std::normal_distribution<double> nd(0.0, 0.007 / std::sqrt(10.0));
    double lp = std::log(20.0);
    for (int d = 0; d < 260; ++d)
      add_day(b, d, [&](int) { lp += nd(gen); return std::exp(lp); });

    PipelineResult pr = build_slr_series(b, FilterRules{}, 500);
    CHECK(pr.report.days_in == 260);
    CHECK(pr.report.days_kept == 260);
    CHECK(pr.slr.points.size() == 260 * 23 - 501);
    CHECK(pr.slr.skipped_zero_std == 0);
    CHECK(pr.slr.decorrelation_minutes >= 10.0);
    CHECK_FALSE(pr.slr.decorrelation_capped);

    double var = 0.0;
    for (const SlrPoint& p : pr.slr.points) var += p.slr * p.slr;
    var /= static_cast<double>(pr.slr.points.size() - 1);
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(0.10));
  }
}

TEST_SUITE("maxima") {
  TEST_CASE("block maxima of a toy series") {
    SlrSeries s = fab_slr({1, -3, 2, -5, 4, -6}, 3);
    MaximaSeries one = extract_block_maxima(s, 1);
    REQUIRE(one.maxima.size() == 2);
    CHECK(one.maxima[0].y == 3.0);
    CHECK(one.maxima[1].y == 6.0);
    CHECK(one.block_size_m == 3);
    CHECK(one.skipped_blocks == 0);
    CHECK(one.shrunk_blocks == 0);
    CHECK(one.maxima[0].block_end == s.points[2].t_epoch);

    MaximaSeries two = extract_block_maxima(s, 2);
    REQUIRE(two.maxima.size() == 1);
    CHECK(two.maxima[0].y == 6.0);
    CHECK(two.block_size_m == 6);

    SlrSeries flat = fab_slr(std::vector<double>(46, 1.5), 23);
    for (const MaximaPoint& mp : extract_block_maxima(flat, 2).maxima)
      CHECK(mp.y == 1.5);
  }

  TEST_CASE("filtered days shrink blocks; empty blocks are skipped") {
    // calendar of 6 days, but only days 0, 1 and 3 carry points
    SlrSeries s;
    s.symbol = "holes";
    s.bars_per_day = 2;
    s.bar_minutes = 10;
    s.n_calendar_days = 6;
    s.calendar = fab_calendar(6);
    auto put = [&](int day, double v) {
      s.points.push_back({static_cast<std::int64_t>(s.points.size()), 0, day, 0, v});
    };
    put(0, 1.0);
    put(0, -2.0);
    put(1, 0.5);
    put(3, -4.0);

    MaximaSeries ms = extract_block_maxima(s, 2);
    REQUIRE(ms.maxima.size() == 2);
    CHECK(ms.maxima[0].y == 2.0);
    CHECK_FALSE(ms.maxima[0].shrunk);
    CHECK(ms.maxima[1].y == 4.0);
    CHECK(ms.maxima[1].shrunk);  // day 2 was filtered away
    CHECK(ms.shrunk_blocks == 1);
    CHECK(ms.skipped_blocks == 1);  // days 4-5 block has nothing

    // odd calendar: the trailing one-day block counts as shrunk
    SlrSeries odd = fab_slr(std::vector<double>(5 * 23, 1.0), 23);
    MaximaSeries tail = extract_block_maxima(odd, 2);
    CHECK(tail.maxima.size() == 3);
    CHECK(tail.shrunk_blocks == 1);
    CHECK(tail.maxima.back().shrunk);
  }

  TEST_CASE("mean block maximum matches a direct monte carlo oracle") {
    const int m = 46;
    std::mt19937_64 gen(41);
    std::normal_distribution<double> nd;

    // oracle: direct simulation of max of 46 |N(0,1)|
    double oracle = 0.0;
    const int reps = 50000;
    for (int r = 0; r < reps; ++r) {
      double mx = 0.0;
      for (int j = 0; j < m; ++j) mx = std::max(mx, std::fabs(nd(gen)));
      oracle += mx;
    }
    oracle /= reps;

    const int days = 4348;  // ~1e5 observations at 23/day
    std::vector<double> vals(static_cast<std::size_t>(days) * 23);
    for (double& v : vals) v = nd(gen);
    MaximaSeries ms = extract_block_maxima(fab_slr(vals, 23), 2);
    CHECK(ms.block_size_m == m);
    CHECK(ms.maxima.size() == 2174);

    double mean = 0.0;
    for (const MaximaPoint& mp : ms.maxima) mean += mp.y;
    mean /= static_cast<double>(ms.maxima.size());
    CHECK(std::fabs(mean - oracle) / oracle < 0.03);
  }

  TEST_CASE("rolling windows") {
    auto series = [&](int n) {
      SlrSeries s = fab_slr(std::vector<double>(static_cast<std::size_t>(n) * 23, 1.0), 23);
      for (std::size_t i = 0; i < s.points.size(); ++i)
        s.points[i].slr = static_cast<double>(i % 97) / 97.0 + 0.1;
      return extract_block_maxima(s, 2);
    };

    MaximaSeries m123 = series(246);
    REQUIRE(m123.maxima.size() == 123);
    RollingSamples one = rolling_samples(m123, {123, 2});
    CHECK(one.count() == 1);
    CHECK_FALSE(one.insufficient);
    CHECK(one.fit_times[0] == m123.maxima.back().block_end);
    CHECK(one.sample(0).size() == 123);

    MaximaSeries m125 = series(250);
    REQUIRE(m125.maxima.size() == 125);
    RollingSamples three = rolling_samples(m125, {123, 2});
    CHECK(three.count() == 3);
    for (int i = 0; i < 122; ++i) {
      CHECK(three.sample(0)[static_cast<std::size_t>(i) + 1] ==
            three.sample(1)[static_cast<std::size_t>(i)]);
      CHECK(three.sample(1)[static_cast<std::size_t>(i) + 1] ==
            three.sample(2)[static_cast<std::size_t>(i)]);
    }

    RollingSamples thin = rolling_samples(series(100), {123, 2});
    CHECK(thin.insufficient);
    CHECK(thin.count() == 0);

    CHECK_THROWS_AS(rolling_samples(m123, {29, 2}), ParamError);
    CHECK_THROWS_AS(rolling_samples(m123, {123, 3}), ParamError);
  }

  TEST_CASE("pipeline to maxima end to end") {
    BarSeries b;
    b.symbol = "e2e";
    b.session_spec = cn_spec();
    std::mt19937_64 gen(43);
    std::normal_distribution<double> nd(0.0, 0.002);
    double lp = std::log(30.0);
    for (int d = 0; d < 260; ++d)
      add_day(b, d, [&](int) { lp += nd(gen); return std::exp(lp); });

    PipelineResult pr = build_slr_series(b, FilterRules{}, 500);
    MaximaSeries ms = extract_block_maxima(pr.slr, 2);
    // warm-up eats the first 501 returns = 21 full days and 18 slots of day 21,
    // so blocks 0..9 are empty and block 10 survives on day 21 alone
    CHECK(ms.skipped_blocks == 10);
    CHECK(ms.shrunk_blocks == 1);
    CHECK(ms.maxima.size() == 120);
    CHECK(ms.block_size_m == 46);

    RollingSamples rs = rolling_samples(ms, {100, 2});
    CHECK(rs.count() == 21);
  }
}

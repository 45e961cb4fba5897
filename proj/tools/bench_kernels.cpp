// Benchmark of the two parallel kernels against their serial reference
// implementations: the rolling GEV fit over a maxima window sequence and the
// stochastic-volatility simulation study. Both modes must produce
// bit-identical results (the kernels write into preallocated per-index
// slots); this tool verifies that and reports wall-clock times.
//
// Usage: bench_kernels [repeats]   (default 3; best-of timing)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "evtrisk/gev.hpp"
#include "evtrisk/heston.hpp"
#include "evtrisk/maxima.hpp"
#include "evtrisk/monitor.hpp"
#include "evtrisk/parallel.hpp"

namespace {

using evtrisk::ExecMode;

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <class F>
double best_of(int repeats, F&& run) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const double t0 = now_ms();
    run();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

evtrisk::RollingSamples synthetic_windows(std::size_t n_maxima, int k) {
  const evtrisk::GevParams law{-0.10, 2.3, 0.35};
  evtrisk::RollingSamples s;
  s.k = k;
  s.stride = 1;
  s.ys = evtrisk::gev_sample(law, n_maxima, 20240811);
  s.fit_times.resize(n_maxima - static_cast<std::size_t>(k) + 1);
  std::iota(s.fit_times.begin(), s.fit_times.end(), static_cast<std::int64_t>(k));
  return s;
}

bool trajectories_identical(const evtrisk::RiskTrajectory& a, const evtrisk::RiskTrajectory& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const evtrisk::RiskRecord& ra = a.records[i];
    const evtrisk::RiskRecord& rb = b.records[i];
    if (ra.params.xi != rb.params.xi || ra.params.mu != rb.params.mu ||
        ra.params.sigma != rb.params.sigma || ra.ks_pvalue != rb.ks_pvalue ||
        ra.var99 != rb.var99 || ra.missing != rb.missing)
      return false;
  }
  return true;
}

bool experiments_identical(const evtrisk::HestonExperiment& a, const evtrisk::HestonExperiment& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].mEVI != b.rows[i].mEVI || a.rows[i].var99 != b.rows[i].var99 ||
        a.rows[i].mpi_max != b.rows[i].mpi_max)
      return false;
  }
  return true;
}

void bench_rolling_fits(int repeats) {
  const evtrisk::RollingSamples samples = synthetic_windows(1000, 123);
  std::printf("rolling GEV fits: %zu windows of k=%d\n", samples.count(), samples.k);

  evtrisk::RiskTrajectory serial, parallel;
  const double ms_serial = best_of(repeats, [&] {
    serial = evtrisk::fit_trajectory(samples, "bench", {}, {}, 0.99, ExecMode::Serial);
  });
  const double ms_openmp = best_of(repeats, [&] {
    parallel = evtrisk::fit_trajectory(samples, "bench", {}, {}, 0.99, ExecMode::OpenMP);
  });
  std::printf("  serial: %8.1f ms\n", ms_serial);
  std::printf("  openmp: %8.1f ms  (x%.2f, %d threads)\n", ms_openmp, ms_serial / ms_openmp,
              evtrisk::hardware_threads());
  std::printf("  results: %s\n",
              trajectories_identical(serial, parallel) ? "bit-identical" : "MISMATCH");
}

void bench_simulation_study(int repeats) {
  evtrisk::HestonExperimentConfig cfg;
  cfg.zs = {3.0};
  cfg.deltas = {1.0 / 24, 1.0 / 48};
  cfg.reps = 4;
  cfg.horizon_T = 320.0;
  std::printf("simulation study: %zu z x %zu delta x %d replicates, T=%g\n", cfg.zs.size(),
              cfg.deltas.size(), cfg.reps, cfg.horizon_T);

  evtrisk::HestonExperiment serial, parallel;
  cfg.mode = ExecMode::Serial;
  const double ms_serial = best_of(repeats, [&] { serial = evtrisk::heston_experiment(cfg); });
  cfg.mode = ExecMode::OpenMP;
  const double ms_openmp = best_of(repeats, [&] { parallel = evtrisk::heston_experiment(cfg); });
  std::printf("  serial: %8.1f ms\n", ms_serial);
  std::printf("  openmp: %8.1f ms  (x%.2f, %d threads)\n", ms_openmp, ms_serial / ms_openmp,
              evtrisk::hardware_threads());
  std::printf("  results: %s\n",
              experiments_identical(serial, parallel) ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int repeats = 3;
  if (argc > 1) {
    repeats = std::atoi(argv[1]);
    if (repeats < 1) {
      std::fprintf(stderr, "usage: %s [repeats]\n", argv[0]);
      return 2;
    }
  }
  std::printf("kernel benchmark (best of %d)\n\n", repeats);
  bench_rolling_fits(repeats);
  std::printf("\n");
  bench_simulation_study(repeats);
  return 0;
}

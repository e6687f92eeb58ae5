#pragma once

// Wall-clock scaling of the regressor over chain length, plus the log-log
// slope fit used to check the quadratic-cost claim.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "svadyn/random_models.hpp"
#include "svadyn/regressor.hpp"

namespace svadyn {

struct BenchRow {
  int links = 0;
  double mean_us = 0.0;
  double std_us = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double loglog_slope = std::numeric_limits<double>::quiet_NaN();
};

inline BenchResult bench_regressor(int max_links, int repeats, std::uint64_t seed) {
  if (max_links < 2) throw std::invalid_argument("bench_regressor: max_links must be >= 2");
  if (repeats < 1) throw std::invalid_argument("bench_regressor: repeats must be >= 1");
  std::mt19937_64 rng(seed);
  BenchResult out;

  volatile double sink = 0.0;  // keep the optimizer from dropping the work
  for (int n = 2; n <= max_links; ++n) {
    const ChainModel model = random_chain(rng, static_cast<std::size_t>(n));
    const JointState state = random_state(rng, n);
    for (int warm = 0; warm < 2; ++warm) sink = sink + compute_regressor(model, state).matrix.sum();

    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(repeats));
    for (int rep = 0; rep < repeats; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      sink = sink + compute_regressor(model, state).matrix.sum();
      const auto t1 = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    double mean = 0.0;
    for (const double t : times) mean += t;
    mean /= static_cast<double>(times.size());
    double var = 0.0;
    for (const double t : times) var += (t - mean) * (t - mean);
    var /= static_cast<double>(times.size());
    out.rows.push_back({n, mean, std::sqrt(var)});
  }

  if (out.rows.size() >= 2) {
    // Least-squares slope of log(mean) against log(n).
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& row : out.rows) {
      const double x = std::log(static_cast<double>(row.links));
      const double y = std::log(row.mean_us);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const auto m = static_cast<double>(out.rows.size());
    out.loglog_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return out;
}

}  // namespace svadyn

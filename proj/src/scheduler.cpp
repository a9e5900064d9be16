// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include "lumi/scheduler.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

namespace lumi {

namespace {

// Round fractional row counts to integers summing to `height` by largest
// remainder, then guarantee one row per worker by stealing from the largest.
std::vector<int> round_rows(const std::vector<double>& shares, int height) {
  const int n = static_cast<int>(shares.size());
  std::vector<int> rows(n);
  std::vector<std::pair<double, int>> rem(n);
  int assigned = 0;
  for (int i = 0; i < n; ++i) {
    double exact = shares[i] * height;
    rows[i] = static_cast<int>(std::floor(exact));
    rem[i] = {exact - rows[i], i};
    assigned += rows[i];
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;  // deterministic tie-break by index
  });
  for (int k = 0; k < height - assigned; ++k) rows[rem[k % n].second] += 1;
  if (height >= n) {
    for (int i = 0; i < n; ++i) {
      while (rows[i] == 0) {
        int big = static_cast<int>(std::max_element(rows.begin(), rows.end()) - rows.begin());
        rows[big] -= 1;
        rows[i] += 1;
      }
    }
  }
  return rows;
}

WorkerAssignment from_rows(const std::vector<int>& rows, int height) {
  WorkerAssignment a;
  a.height = height;
  int at = 0;
  for (int r : rows) {
    a.ranges.push_back({at, at + r});
    a.shares.push_back(static_cast<double>(r) / height);
    at += r;
  }
  require(at == height, "assign_rows: partition does not cover all rows");
  return a;
}

}  // namespace

WorkerAssignment equal_assignment(int height, int workers) {
  require(workers >= 1, "assignment: need at least one worker");
  require(height >= workers, "assignment: more workers than rows");
  std::vector<double> shares(workers, 1.0 / workers);
  return from_rows(round_rows(shares, height), height);
}

WorkerAssignment assign_rows(int height, const std::vector<double>& throughputs,
                             const WorkerAssignment& prev, double dampening) {
  const int n = static_cast<int>(throughputs.size());
  require(n >= 1 && height >= n, "assign_rows: more workers than rows");
  require(prev.ranges.size() == static_cast<size_t>(n), "assign_rows: worker count changed");
  double total = 0;
  for (double t : throughputs) {
    require(t > 0, "assign_rows: throughputs must be positive");
    total += t;
  }
  std::vector<double> shares(n);
  for (int i = 0; i < n; ++i) {
    double target = throughputs[i] / total;
    shares[i] = prev.shares[i] + dampening * (target - prev.shares[i]);
  }
  // Normalize away rounding drift from the previous integer partition.
  double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
  for (auto& s : shares) s /= sum;
  return from_rows(round_rows(shares, height), height);
}

StatsSummary aggregate_stats(const std::vector<FrameStats>& frames) {
  require(!frames.empty(), "aggregate_stats: no frames");
  StatsSummary s;
  std::vector<double> times;
  double mean = 0;
  for (const auto& f : frames) {
    times.push_back(f.wall_ms);
    mean += f.fps();
  }
  mean /= frames.size();
  double var = 0;
  for (const auto& f : frames) var += (f.fps() - mean) * (f.fps() - mean);
  var /= frames.size();
  std::sort(times.begin(), times.end());
  double idx = 0.99 * (times.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(idx));
  size_t hi = std::min(lo + 1, times.size() - 1);
  double frac = idx - lo;
  double p99_time = times[lo] * (1 - frac) + times[hi] * frac;
  s.mean_fps = mean;
  s.std_fps = std::sqrt(var);
  s.p99_fps = p99_time > 0 ? 1000.0 / p99_time : 0.0;
  return s;
}

FrameStats run_frame(const WorkerAssignment& assignment, int width,
                     const std::function<void(int, RowRange)>& work,
                     const std::vector<double>* simulated_ms) {
  require(assignment.valid(), "run_frame: invalid assignment");
  const int n = static_cast<int>(assignment.ranges.size());
  FrameStats stats;
  stats.worker_ms.assign(n, 0.0);
  stats.worker_rays.assign(n, 0);
  std::vector<std::thread> threads;
  std::vector<std::string> errors(n);
  auto frame_start = std::chrono::steady_clock::now();
  for (int i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      auto t0 = std::chrono::steady_clock::now();
      try {
        work(i, assignment.ranges[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      stats.worker_ms[i] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    });
  }
  for (auto& t : threads) t.join();
  for (int i = 0; i < n; ++i)
    if (!errors[i].empty()) fail("run_frame: worker " + std::to_string(i) + " failed: " + errors[i]);
  stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - frame_start)
          .count();
  if (simulated_ms) {
    stats.worker_ms = *simulated_ms;
    // Workers run concurrently, so the virtual frame time is the slowest one.
    stats.wall_ms = *std::max_element(simulated_ms->begin(), simulated_ms->end());
  }
  for (int i = 0; i < n; ++i)
    stats.worker_rays[i] = static_cast<int64_t>(assignment.ranges[i].count()) * width;
  stats.rays = static_cast<int64_t>(assignment.height) * width;
  return stats;
}

WorkerAssignment next_assignment(const WorkerAssignment& current, const FrameStats& stats,
                                 double dampening) {
  std::vector<double> throughput(stats.worker_ms.size());
  for (size_t i = 0; i < throughput.size(); ++i) {
    double ms = std::max(stats.worker_ms[i], 1e-6);
    throughput[i] = std::max(static_cast<double>(stats.worker_rays[i]), 1.0) / (ms / 1000.0);
  }
  return assign_rows(current.height, throughput, current, dampening);
}

}  // namespace lumi

// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lumi/scheduler.h"

using namespace lumi;

TEST_CASE("assign_rows: exact proportional split at full dampening") {
  auto prev = equal_assignment(400, 3);
  auto next = assign_rows(400, {2e5, 1e5, 1e5}, prev, 1.0);
  CHECK(next.ranges[0].count() == 200);
  CHECK(next.ranges[1].count() == 100);
  CHECK(next.ranges[2].count() == 100);
  CHECK(next.valid());
}

TEST_CASE("assign_rows: equal throughputs are a fixed point for any dampening") {
  for (double damp : {0.1, 0.5, 1.0}) {
    auto prev = equal_assignment(300, 3);
    auto next = assign_rows(300, {7.0, 7.0, 7.0}, prev, damp);
    for (int i = 0; i < 3; ++i) CHECK(next.ranges[i].count() == 100);
  }
}

TEST_CASE("assign_rows: dampened move with largest-remainder rounding") {
  WorkerAssignment prev;
  prev.height = 400;
  prev.ranges = {{0, 134}, {134, 267}, {267, 400}};
  prev.shares = {134.0 / 400, 133.0 / 400, 133.0 / 400};
  auto next = assign_rows(400, {2.0, 1.0, 1.0}, prev, 0.5);
  CHECK(next.ranges[0].count() == 167);
  CHECK(next.ranges[1].count() == 117);
  CHECK(next.ranges[2].count() == 116);
}

TEST_CASE("assign_rows: proportional throughputs are a fixed point") {
  WorkerAssignment prev;
  prev.height = 200;
  prev.ranges = {{0, 120}, {120, 160}, {160, 200}};
  prev.shares = {0.6, 0.2, 0.2};
  for (double damp : {0.25, 0.5, 1.0}) {
    auto next = assign_rows(200, {6.0, 2.0, 2.0}, prev, damp);
    CHECK(next.ranges[0].count() == 120);
    CHECK(next.ranges[1].count() == 40);
    CHECK(next.ranges[2].count() == 40);
  }
}

TEST_CASE("assign_rows: errors and minimum one row per worker") {
  auto prev = equal_assignment(4, 4);
  CHECK_THROWS_AS(equal_assignment(3, 4), Error);
  CHECK_THROWS_AS(assign_rows(4, {1.0, 1.0, 1.0, 1.0, 1.0}, prev, 0.5), Error);
  // Extreme ratios still leave every worker a row.
  auto next = assign_rows(4, {1e9, 1.0, 1.0, 1.0}, prev, 1.0);
  for (const auto& r : next.ranges) CHECK(r.count() >= 1);
  CHECK(next.valid());
}

TEST_CASE("partition stays valid across random reassignment sequences") {
  Rng rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    int workers = 2 + static_cast<int>(rng.next_below(6));
    int height = workers + static_cast<int>(rng.next_below(500));
    auto cur = equal_assignment(height, workers);
    for (int f = 0; f < 20; ++f) {
      std::vector<double> tp(workers);
      for (auto& t : tp) t = rng.uniform(0.1, 10.0);
      cur = assign_rows(height, tp, cur, rng.uniform(0.1, 1.0));
      REQUIRE(cur.valid());
      if (height >= workers)
        for (const auto& r : cur.ranges) CHECK(r.count() >= 1);
    }
  }
}

TEST_CASE("synthetic 2:1:1 workers converge within 10 frames at lambda 0.5") {
  // Per-row virtual costs: worker 0 twice as fast.
  const int height = 400, width = 100;
  std::vector<double> cost = {0.5, 1.0, 1.0};  // ms per row
  auto cur = equal_assignment(height, 3);
  for (int frame = 0; frame < 10; ++frame) {
    std::vector<double> sim(3);
    for (int w = 0; w < 3; ++w) sim[w] = cur.ranges[w].count() * cost[w];
    FrameStats st = run_frame(cur, width, [](int, RowRange) {}, &sim);
    cur = next_assignment(cur, st, 0.5);
  }
  CHECK(std::abs(cur.ranges[0].count() - 200) <= 1);
  CHECK(std::abs(cur.ranges[1].count() - 100) <= 1);
  CHECK(std::abs(cur.ranges[2].count() - 100) <= 1);
}

TEST_CASE("convergence is geometric with constant per-row costs") {
  const int height = 1000, width = 10;
  std::vector<double> cost = {0.2, 0.6};
  auto cur = equal_assignment(height, 2);
  double prev_err = std::abs(cur.shares[0] - 0.75);
  for (int frame = 0; frame < 12; ++frame) {
    std::vector<double> sim(2);
    for (int w = 0; w < 2; ++w) sim[w] = cur.ranges[w].count() * cost[w];
    FrameStats st = run_frame(cur, width, [](int, RowRange) {}, &sim);
    cur = next_assignment(cur, st, 0.5);
    double err = std::abs(cur.shares[0] - 0.75);
    // rate (1 - lambda) plus rounding slack of one row
    CHECK(err <= 0.5 * prev_err + 1.0 / height + 1e-12);
    prev_err = err;
  }
  CHECK(std::abs(cur.shares[0] * height - 750) <= 1.0);
}

TEST_CASE("dynamic split beats the static split on a heterogeneous workload") {
  // Rows get more expensive toward the bottom of the frame (dense scene at
  // the floor, empty at the top); equally-fast workers.
  const int height = 300, width = 64;
  auto row_cost = [](int row) { return 0.05 + 1.5 * row / 300.0; };

  auto frame_time = [&](const WorkerAssignment& a) {
    double worst = 0;
    for (const auto& r : a.ranges) {
      double t = 0;
      for (int y = r.begin; y < r.end; ++y) t += row_cost(y);
      worst = std::max(worst, t);
    }
    return worst;
  };

  auto stat = equal_assignment(height, 3);
  double static_time = frame_time(stat);

  auto cur = equal_assignment(height, 3);
  for (int frame = 0; frame < 30; ++frame) {
    std::vector<double> sim(3);
    for (int w = 0; w < 3; ++w) {
      sim[w] = 0;
      for (int y = cur.ranges[w].begin; y < cur.ranges[w].end; ++y) sim[w] += row_cost(y);
    }
    FrameStats st = run_frame(cur, width, [](int, RowRange) {}, &sim);
    cur = next_assignment(cur, st, 0.5);
  }
  CHECK(frame_time(cur) <= static_time);
}

TEST_CASE("aggregate_stats: mean, std, p99") {
  std::vector<FrameStats> frames;
  for (int i = 0; i < 100; ++i) {
    FrameStats f;
    f.wall_ms = 10.0;
    frames.push_back(f);
  }
  auto s = aggregate_stats(frames);
  CHECK(s.mean_fps == doctest::Approx(100.0));
  CHECK(s.p99_fps == doctest::Approx(100.0));
  CHECK(s.std_fps == doctest::Approx(0.0));

  // One slow outlier drags p99 below the mean.
  frames[99].wall_ms = 100.0;
  s = aggregate_stats(frames);
  CHECK(s.p99_fps < s.mean_fps);
  CHECK(s.p99_fps < 100.0);

  CHECK_THROWS_AS(aggregate_stats({}), Error);
}

TEST_CASE("p99 <= mean FPS on random workloads") {
  Rng rng(91);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<FrameStats> frames;
    int n = 20 + static_cast<int>(rng.next_below(100));
    for (int i = 0; i < n; ++i) {
      FrameStats f;
      f.wall_ms = rng.uniform(5.0, 50.0);
      if (rng.uniform() < 0.05) f.wall_ms *= rng.uniform(2.0, 8.0);  // spikes
      frames.push_back(f);
    }
    auto s = aggregate_stats(frames);
    CHECK(s.p99_fps <= s.mean_fps + 1e-9);
  }
}

TEST_CASE("run_frame executes disjoint ranges concurrently and reports failures") {
  auto cur = equal_assignment(64, 4);
  std::vector<int> touched(64, 0);
  run_frame(cur, 8, [&](int, RowRange r) {
    for (int y = r.begin; y < r.end; ++y) touched[y] += 1;
  }, nullptr);
  for (int v : touched) CHECK(v == 1);

  CHECK_THROWS_AS(run_frame(cur, 8,
                            [](int w, RowRange) {
                              if (w == 2) throw std::runtime_error("boom");
                            },
                            nullptr),
                  Error);
}

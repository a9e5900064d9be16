// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Throughput-proportional distribution of contiguous image rows across
// rendering workers, with dampened reassignment and frame statistics.

#include <functional>
#include <vector>

#include "lumi/common.h"

namespace lumi {

struct RowRange {
  int begin = 0;
  int end = 0;
  int count() const { return end - begin; }
};

struct WorkerAssignment {
  std::vector<RowRange> ranges;           // disjoint, contiguous, cover [0,height)
  std::vector<double> shares;             // fraction of rows per worker
  int height = 0;

  bool valid() const {
    if (ranges.empty() || ranges.front().begin != 0 || ranges.back().end != height) return false;
    for (size_t i = 0; i < ranges.size(); ++i) {
      if (ranges[i].count() < 0) return false;
      if (i && ranges[i].begin != ranges[i - 1].end) return false;
    }
    return true;
  }
};

// Equal split for the first frame.
WorkerAssignment equal_assignment(int height, int workers);

// Dampened move toward throughput-proportional shares, rounded to whole rows
// by largest remainder so the partition stays exact. Every worker gets at
// least one row when height >= workers.
WorkerAssignment assign_rows(int height, const std::vector<double>& throughputs,
                             const WorkerAssignment& prev, double dampening);

struct FrameStats {
  double wall_ms = 0;
  int64_t rays = 0;
  double fps() const { return wall_ms > 0 ? 1000.0 / wall_ms : 0.0; }
  std::vector<double> worker_ms;
  std::vector<int64_t> worker_rays;
};

struct StatsSummary {
  double mean_fps = 0;
  double std_fps = 0;
  double p99_fps = 0;  // 1 / (99th percentile frame time)
};

// p99 uses linear interpolation between order statistics of frame time.
StatsSummary aggregate_stats(const std::vector<FrameStats>& frames);

// One frame: run `work(worker, range)` concurrently per worker, measure
// per-worker time, and produce the next assignment from rays/second
// throughput. `work` must only touch its own rows. When `simulated_ms` is
// non-null it supplies per-worker virtual durations (deterministic bench
// mode) instead of wall-clock measurements.
FrameStats run_frame(const WorkerAssignment& assignment, int width,
                     const std::function<void(int, RowRange)>& work,
                     const std::vector<double>* simulated_ms);

WorkerAssignment next_assignment(const WorkerAssignment& current, const FrameStats& stats,
                                 double dampening);

}  // namespace lumi

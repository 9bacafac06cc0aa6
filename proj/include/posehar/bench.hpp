#pragma once

// Throughput measurements for the embedding stage and per-clip inference.

#include <cstdint>
#include <string>

#include "posehar/classifier.hpp"
#include "posehar/library.hpp"

namespace posehar {

/// Bundle with `n_actions` spatial and temporal libraries of `n_prototypes`
/// random prototypes each (coordinates uniform in [-1.5, 1.5], root at the origin).
ModelBundle random_bundle(int n_actions, int n_prototypes, std::uint64_t seed);

struct BenchConfig {
  int actions = 17;
  int prototypes = 64;
  int frames = 60;
  /// Minimum wall time spent on each measurement.
  double min_seconds = 1.0;
  std::uint64_t seed = 0;
  ClassifierConfig classifier;
};

struct BenchResult {
  double embed_frames_per_second = 0.0;
  double embed_seconds_per_frame = 0.0;
  /// Embedding plus classification of one clip of `frames` frames.
  double clip_latency_seconds = 0.0;
  int channels = 0;
};

BenchResult run_bench(const BenchConfig& cfg);

}  // namespace posehar

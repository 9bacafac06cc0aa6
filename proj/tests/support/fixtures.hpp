#pragma once

#include <random>

#include "posehar/pose.hpp"
#include "posehar/random.hpp"

namespace posehar::testing {

/// A plausible upright pose in pixel coordinates, every landmark present.
inline Pose upright_pose(double ox = 320.0, double oy = 200.0, double s = 50.0) {
  static const double xy[kNumLandmarks][2] = {
      {0.0, -0.8}, {0.0, 0.0},  {-0.6, 0.1}, {-0.9, 0.7}, {-1.0, 1.3}, {0.6, 0.1},  {0.9, 0.7},
      {1.0, 1.3},  {-0.3, 1.0}, {-0.35, 1.9}, {-0.4, 2.8}, {0.3, 1.0}, {0.35, 1.9}, {0.4, 2.8}};
  Pose p;
  for (int j = 1; j <= kNumLandmarks; ++j) p.set(LandmarkId{j}, ox + s * xy[j - 1][0], oy + s * xy[j - 1][1]);
  return p;
}

/// Every landmark present at uniform random coordinates in [lo, hi).
inline Pose random_pose(Rng& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Pose p;
  for (int j = 1; j <= kNumLandmarks; ++j) p.set(LandmarkId{j}, u(rng), u(rng));
  return p;
}

inline Sample make_sample(std::vector<Pose> poses, std::string action = "a", std::string actor = "x") {
  Sample s;
  s.poses = std::move(poses);
  s.action = std::move(action);
  s.actor = std::move(actor);
  s.dataset = "test";
  return s;
}

}  // namespace posehar::testing

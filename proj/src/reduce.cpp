#include "posehar/reduce.hpp"

namespace posehar {

FeatureVector unroll(const Pose::Coords& coords, const LandmarkSet& missing) {
  FeatureVector v;
  int i = 0;
  for (int k = 0; k < kNumLandmarks; ++k) {
    if (k == kRoot.slot()) continue;
    const bool skip = missing.contains(LandmarkId{k + 1});
    v(i++) = skip ? 0.0 : coords(0, k);
    v(i++) = skip ? 0.0 : coords(1, k);
  }
  return v;
}

Pose::Coords reroll(const FeatureVector& v) {
  Pose::Coords c = Pose::Coords::Zero();
  int i = 0;
  for (int k = 0; k < kNumLandmarks; ++k) {
    if (k == kRoot.slot()) continue;
    c(0, k) = v(i++);
    c(1, k) = v(i++);
  }
  return c;
}

}  // namespace posehar

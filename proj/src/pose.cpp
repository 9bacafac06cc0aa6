#include "posehar/pose.hpp"

#include <algorithm>

namespace posehar {

Point2 Pose::at(LandmarkId j) const {
  if (!present(j))
    throw Error(Errc::AbsentLandmark, "landmark " + std::to_string(j.index()) + " is absent");
  return coords_.col(j.slot());
}

std::vector<int> LandmarkSet::indices() const {
  std::vector<int> out;
  for (int j = 1; j <= kNumLandmarks; ++j)
    if (contains(LandmarkId{j})) out.push_back(j);
  return out;
}

LinkVector link(const Pose& pose, LandmarkId from, LandmarkId to) {
  return LinkVector{from, to, pose.at(to) - pose.at(from)};
}

int missing_count(const Pose& pose) noexcept {
  const auto& p = pose.presence();
  return static_cast<int>(std::count(p.begin(), p.end(), false));
}

int present_count(const Pose& pose) noexcept { return kNumLandmarks - missing_count(pose); }

std::string_view to_string(Viewpoint w) noexcept {
  switch (w) {
    case Viewpoint::Front: return "front";
    case Viewpoint::FrontLeft: return "front-left";
    case Viewpoint::FrontRight: return "front-right";
    case Viewpoint::Left: return "left";
    case Viewpoint::Right: return "right";
    case Viewpoint::Rear: return "rear";
    case Viewpoint::RearLeft: return "rear-left";
    case Viewpoint::RearRight: return "rear-right";
  }
  return "front";
}

Viewpoint parse_viewpoint(std::string_view name) {
  for (Viewpoint w : kAllViewpoints)
    if (to_string(w) == name) return w;
  throw Error(Errc::UnknownLabel, "unknown viewpoint '" + std::string(name) + "'");
}

Viewpoint mirror(Viewpoint w) noexcept {
  switch (w) {
    case Viewpoint::FrontLeft: return Viewpoint::FrontRight;
    case Viewpoint::FrontRight: return Viewpoint::FrontLeft;
    case Viewpoint::Left: return Viewpoint::Right;
    case Viewpoint::Right: return Viewpoint::Left;
    case Viewpoint::RearLeft: return Viewpoint::RearRight;
    case Viewpoint::RearRight: return Viewpoint::RearLeft;
    default: return w;
  }
}

namespace {
constexpr std::array<int, 14> kAll = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
constexpr std::array<int, 3> kRightArm = {3, 4, 5};
constexpr std::array<int, 3> kLeftArm = {6, 7, 8};
constexpr std::array<int, 3> kRightLeg = {9, 10, 11};
constexpr std::array<int, 3> kLeftLeg = {12, 13, 14};
}  // namespace

std::span<const int> landmarks_of(LandmarkSubset s) noexcept {
  switch (s) {
    case LandmarkSubset::All: return kAll;
    case LandmarkSubset::RightArm: return kRightArm;
    case LandmarkSubset::LeftArm: return kLeftArm;
    case LandmarkSubset::RightLeg: return kRightLeg;
    case LandmarkSubset::LeftLeg: return kLeftLeg;
  }
  return kAll;
}

std::string_view to_string(LandmarkSubset s) noexcept {
  switch (s) {
    case LandmarkSubset::All: return "J";
    case LandmarkSubset::RightArm: return "J_a";
    case LandmarkSubset::LeftArm: return "J_b";
    case LandmarkSubset::RightLeg: return "J_c";
    case LandmarkSubset::LeftLeg: return "J_d";
  }
  return "J";
}

}  // namespace posehar

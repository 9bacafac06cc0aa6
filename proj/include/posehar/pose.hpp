#pragma once

// Core 2D pose types shared by every stage of the pipeline.
//
// Landmark layout (1-based, 14 landmarks):
//   1 head, 2 root (neck),
//   3-5 right shoulder/elbow/wrist, 6-8 left shoulder/elbow/wrist,
//   9-11 right hip/knee/ankle,      12-14 left hip/knee/ankle.
// Landmark 9 is the RIGHT hip. Remap at ingestion if a detector disagrees.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "posehar/error.hpp"

namespace posehar {

inline constexpr int kNumLandmarks = 14;

class LandmarkId {
public:
  constexpr explicit LandmarkId(int index) : index_(index) {
    if (index < 1 || index > kNumLandmarks)
      throw std::out_of_range("landmark index out of range: " + std::to_string(index));
  }

  constexpr int index() const noexcept { return index_; }
  /// Zero-based storage slot.
  constexpr int slot() const noexcept { return index_ - 1; }

  friend constexpr bool operator==(LandmarkId, LandmarkId) = default;
  friend constexpr auto operator<=>(LandmarkId, LandmarkId) = default;

private:
  int index_;
};

inline constexpr LandmarkId kHead{1};
inline constexpr LandmarkId kRoot{2};
inline constexpr LandmarkId kRightHip{9};
inline constexpr LandmarkId kLeftHip{12};

/// Left/right mirror map on landmark indices. An involution; 1 and 2 are fixed.
constexpr int mirror_index(int j) noexcept {
  if (j >= 3 && j <= 5) return j + 3;
  if (j >= 6 && j <= 8) return j - 3;
  if (j >= 9 && j <= 11) return j + 3;
  if (j >= 12 && j <= 14) return j - 3;
  return j;
}

constexpr LandmarkId mirror(LandmarkId j) { return LandmarkId{mirror_index(j.index())}; }

using Point2 = Eigen::Vector2d;

/// One frame: 14 landmark coordinates with presence flags.
/// Coordinates of absent landmarks are meaningless and kept at zero.
class Pose {
public:
  using Coords = Eigen::Matrix<double, 2, kNumLandmarks>;

  Pose() { coords_.setZero(); present_.fill(false); }

  bool present(LandmarkId j) const noexcept { return present_[j.slot()]; }
  Point2 at(LandmarkId j) const;

  void set(LandmarkId j, const Point2& p) {
    coords_.col(j.slot()) = p;
    present_[j.slot()] = true;
  }
  void set(LandmarkId j, double x, double y) { set(j, Point2(x, y)); }
  void clear(LandmarkId j) {
    coords_.col(j.slot()).setZero();
    present_[j.slot()] = false;
  }

  /// Raw storage, column k is landmark k+1. Reading absent columns yields zeros.
  const Coords& coords() const noexcept { return coords_; }
  Coords& coords() noexcept { return coords_; }
  const std::array<bool, kNumLandmarks>& presence() const noexcept { return present_; }

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.present_ == b.present_ && a.coords_ == b.coords_;
  }

private:
  Coords coords_;
  std::array<bool, kNumLandmarks> present_;
};

/// Small set of landmarks stored as a bitmask.
class LandmarkSet {
public:
  LandmarkSet() = default;
  LandmarkSet(std::initializer_list<int> indices) {
    for (int j : indices) insert(LandmarkId{j});
  }

  bool contains(LandmarkId j) const noexcept { return (bits_ >> j.slot()) & 1u; }
  void insert(LandmarkId j) noexcept { bits_ |= static_cast<unsigned>(1u << j.slot()); }
  void erase(LandmarkId j) noexcept { bits_ &= ~static_cast<unsigned>(1u << j.slot()); }
  bool empty() const noexcept { return bits_ == 0; }
  int size() const noexcept { return __builtin_popcount(bits_); }
  /// Sorted 1-based indices.
  std::vector<int> indices() const;
  unsigned bits() const noexcept { return bits_; }

  friend bool operator==(LandmarkSet, LandmarkSet) = default;

private:
  unsigned bits_ = 0;
};

struct LinkVector {
  LandmarkId from;
  LandmarkId to;
  Point2 delta;

  double norm() const { return delta.norm(); }
};

/// coords[to] - coords[from]; throws AbsentLandmark if either endpoint is missing.
LinkVector link(const Pose& pose, LandmarkId from, LandmarkId to);

int missing_count(const Pose& pose) noexcept;
int present_count(const Pose& pose) noexcept;

enum class Viewpoint { Front, FrontLeft, FrontRight, Left, Right, Rear, RearLeft, RearRight };

inline constexpr std::array<Viewpoint, 8> kAllViewpoints = {
    Viewpoint::Front, Viewpoint::FrontLeft, Viewpoint::FrontRight, Viewpoint::Left,
    Viewpoint::Right, Viewpoint::Rear,      Viewpoint::RearLeft,   Viewpoint::RearRight};

std::string_view to_string(Viewpoint w) noexcept;
/// Accepts the hyphenated names ("front-left"); throws UnknownLabel otherwise.
Viewpoint parse_viewpoint(std::string_view name);
/// Viewpoint seen after a left/right flip of the scene.
Viewpoint mirror(Viewpoint w) noexcept;

struct Sample {
  std::vector<Pose> poses;
  std::string action;
  Viewpoint viewpoint = Viewpoint::Front;
  std::string actor;
  std::string dataset;

  std::size_t length() const noexcept { return poses.size(); }
  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class LandmarkSubset { All, RightArm, LeftArm, RightLeg, LeftLeg };

inline constexpr std::array<LandmarkSubset, 5> kAllSubsets = {
    LandmarkSubset::All, LandmarkSubset::RightArm, LandmarkSubset::LeftArm,
    LandmarkSubset::RightLeg, LandmarkSubset::LeftLeg};

/// Landmark indices (1-based) belonging to a subset.
std::span<const int> landmarks_of(LandmarkSubset s) noexcept;
/// Short channel tag: "J", "J_a", ... "J_d".
std::string_view to_string(LandmarkSubset s) noexcept;

}  // namespace posehar

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "posehar/pose.hpp"

namespace posehar {

/// Poses left after missing-data treatment. Root is present in every frame; every
/// landmark outside `persistent_missing` is present in every frame.
struct CleanSequence {
  std::vector<Pose> poses;
  LandmarkSet persistent_missing;
  std::size_t dropped_frames = 0;
  /// Landmarks recovered by copying the mirror track.
  LandmarkSet mirrored;
};

using Displacement = Pose::Coords;

/// Root-centered, torso-scaled poses plus frame-to-frame displacements.
struct NormalizedSequence {
  std::vector<Pose> poses;
  /// derivatives[t] = poses[t+1] - poses[t]; zero columns for persistent-missing landmarks.
  std::vector<Displacement> derivatives;
  LandmarkSet persistent_missing;
  /// Frames removed because the torso link was degenerate.
  std::size_t degenerate_frames = 0;

  std::size_t length() const noexcept { return poses.size(); }
  friend bool operator==(const NormalizedSequence&, const NormalizedSequence&) = default;
};

/// A normalized sequence travelling through the pipeline with its labels.
struct LabeledSequence {
  NormalizedSequence seq;
  std::string action;
  Viewpoint viewpoint = Viewpoint::Front;
  std::string actor;
  std::string dataset;

  friend bool operator==(const LabeledSequence&, const LabeledSequence&) = default;
};

inline constexpr int kMaxMissingLandmarks = 8;
inline constexpr double kDegenerateTorso = 1e-6;

/// A frame survives treatment iff its root is present and at most 8 landmarks are missing.
bool is_usable_frame(const Pose& pose) noexcept;

/// Drops unusable frames, then fills occasional gaps by nearest neighbour in time
/// (ties take the earlier frame) and all-absent limb landmarks from their mirror.
/// Throws EmptySequence when no frame survives.
CleanSequence treat_missing(const Sample& sample);

/// Translates every present landmark so the root sits at the origin. Throws AbsentRoot.
Pose center(const Pose& pose);

/// Divides a centered pose by the length of the root->`hip` link.
/// Throws AbsentHip or DegenerateTorso.
Pose scale(const Pose& pose, LandmarkId hip = kRightHip);

/// Hip used as the scale reference: right hip unless it is persistently missing.
/// Throws AbsentHip if both hips are persistently missing.
LandmarkId scale_reference(const LandmarkSet& persistent_missing);

/// Center and scale every frame, dropping frames with a degenerate torso, and
/// compute displacements. Throws EmptySequence if every frame is degenerate.
NormalizedSequence normalize(const CleanSequence& seq);

/// Recomputes `derivatives` from `poses`.
void recompute_derivatives(NormalizedSequence& seq);

/// treat_missing + normalize, carrying the sample labels.
LabeledSequence preprocess(const Sample& sample);

}  // namespace posehar

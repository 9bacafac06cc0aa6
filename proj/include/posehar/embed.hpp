#pragma once

// Spatio-temporal embedding: per-frame minimum averaged landmark distance between a
// pose (or displacement) and each action's prototype library, over five landmark subsets.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "posehar/library.hpp"

namespace posehar {

enum class PipelineMode { Basic, Advanced, Baseline };

std::string_view to_string(PipelineMode mode) noexcept;
PipelineMode parse_mode(std::string_view name);

/// Value emitted for pose and displacement channels of persistent-missing landmarks.
inline constexpr double kMissingCoordinate = -1.0;
/// Value emitted when every landmark of a subset is persistently missing.
inline constexpr double kEmptySubsetDistance = 99.0;

inline constexpr int kPoseChannels = 2 * kNumLandmarks;

/// Channel count of the classifier input for `mode` with `n_actions` actions.
int channel_count(PipelineMode mode, std::size_t n_actions) noexcept;

/// Channel names, e.g. "pose/4/x", "delta/4/y", "spatial/<action>/J_a".
std::vector<std::string> channel_names(PipelineMode mode, const std::vector<std::string>& actions);

/// Mean Euclidean distance over the subset's landmarks that are not in `missing`
/// between `coords` and the prototype re-rolled to 14 landmarks (root at origin).
/// Throws EmptySubset if every subset landmark is missing.
double subset_distance(const Pose::Coords& coords, const Prototype& proto, LandmarkSubset subset,
                       const LandmarkSet& missing = {});

using SubsetDistances = std::array<double, 5>;

/// Minimum subset distance over every prototype of the library, for J, J_a..J_d.
/// Subsets with no available landmark yield kEmptySubsetDistance.
SubsetDistances embed_frame(const Pose::Coords& coords, const PoseLibrary& lib,
                            const LandmarkSet& missing = {});

/// Prototype libraries laid out for fast per-frame embedding.
class Embedder {
public:
  /// Requires a non-empty spatial and temporal library for every bundle action
  /// (throws MissingLibrary otherwise).
  explicit Embedder(const ModelBundle& bundle);

  const std::vector<std::string>& actions() const noexcept { return actions_; }

  SubsetDistances embed_frame(const Pose::Coords& coords, const LandmarkSet& missing, LibraryKind kind,
                              std::size_t action) const;

  /// channels x T matrix: pose channels, displacement channels, then (advanced)
  /// 5 spatial and 5 temporal channels per action in vocabulary order.
  Eigen::MatrixXd embed_sequence(const NormalizedSequence& seq, PipelineMode mode) const;

private:
  // One 28 x P matrix per action; column k holds prototype k as (x1,y1,...,x14,y14).
  std::vector<Eigen::MatrixXd> spatial_;
  std::vector<Eigen::MatrixXd> temporal_;
  std::vector<std::string> actions_;
};

/// Pose and displacement channels only (56 x T). Displacements are front-padded by
/// repeating the first one; missing landmarks read kMissingCoordinate.
Eigen::MatrixXd basic_channels(const NormalizedSequence& seq);

/// Raw global coordinates, 28 x T, absent landmarks at kMissingCoordinate.
Eigen::MatrixXd baseline_channels(const Sample& sample);

}  // namespace posehar

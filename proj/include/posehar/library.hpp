#pragma once

// Prototype pose libraries: per (action, viewpoint) SOM clustering of training frames,
// averaged into prototypes and stacked across viewpoints.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "posehar/preprocess.hpp"
#include "posehar/reduce.hpp"
#include "posehar/som.hpp"

namespace posehar {

enum class LibraryKind { Spatial, Temporal };

std::string_view to_string(LibraryKind kind) noexcept;

struct Prototype {
  /// Cluster mean in PCA space.
  Eigen::VectorXd reduced;
  /// Cluster mean of the unrolled 26-d vectors (landmark space).
  FeatureVector full;
  int weight = 0;
  Viewpoint viewpoint = Viewpoint::Front;

  friend bool operator==(const Prototype&, const Prototype&) = default;
};

struct PoseLibrary {
  std::string action;
  LibraryKind kind = LibraryKind::Spatial;
  std::vector<Prototype> prototypes;

  friend bool operator==(const PoseLibrary&, const PoseLibrary&) = default;
};

using LibraryMap = std::map<std::string, PoseLibrary>;

/// One unrolled row per frame (spatial) or per displacement (temporal);
/// persistent-missing landmarks enter as zeros.
Eigen::MatrixXd feature_rows(const NormalizedSequence& seq, LibraryKind kind);

struct PrototypeSet {
  std::vector<Prototype> prototypes;
  /// Index into `prototypes` of every input row.
  std::vector<int> membership;
};

/// Clusters the rows of `full` (26-d) with a SOM in `pca` space and averages every
/// non-empty cluster in both spaces. Empty clusters are dropped.
PrototypeSet build_prototypes(const Eigen::MatrixXd& full, const PcaModel& pca, const SomConfig& cfg,
                              Viewpoint viewpoint = Viewpoint::Front);

/// Libraries for every action in `train`, one SOM per (action, viewpoint) slice.
/// Slices without any frame are skipped and reported through `warnings`.
/// The SOM of slice (a, w) is seeded with derive_seed(cfg.seed, 16*a + 2*w + kind),
/// where a is the action's position in the sorted action list.
LibraryMap build_library(const std::vector<LabeledSequence>& train, LibraryKind kind,
                         const PcaModel& pca, const SomConfig& cfg,
                         std::vector<std::string>* warnings = nullptr);

/// Global PCA over all training frames of the given kind.
PcaModel fit_feature_pca(const std::vector<LabeledSequence>& train, LibraryKind kind, int rank);

/// Everything learned from training data that the embedding stage needs.
struct ModelBundle {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<std::string> actions;
  int pca_rank = 3;
  SomConfig som;
  PcaModel spatial_pca;
  PcaModel temporal_pca;
  LibraryMap spatial;
  LibraryMap temporal;
  /// Free-form JSON text describing the run that produced the bundle.
  std::string config_echo;
};

/// Fits both PCA models and both library families on `train`.
ModelBundle fit_bundle(const std::vector<LabeledSequence>& train, int pca_rank, const SomConfig& cfg,
                       std::vector<std::string>* warnings = nullptr);

void save_bundle(const ModelBundle& bundle, std::ostream& out);
ModelBundle load_bundle(std::istream& in);
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

}  // namespace posehar

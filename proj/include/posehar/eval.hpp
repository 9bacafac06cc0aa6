#pragma once

// Evaluation protocols (fixed split, leave-one-actor-out, per-action k-fold) and
// confusion-matrix metrics.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "posehar/pipeline.hpp"

namespace posehar {

enum class ProtocolKind { Split, Loao, KFold };

std::string_view to_string(ProtocolKind kind) noexcept;
ProtocolKind parse_protocol(std::string_view name);

/// What the id lists of a split protocol refer to.
enum class SplitKey { Actor, Dataset };

struct Protocol {
  ProtocolKind kind = ProtocolKind::KFold;
  int folds = 10;
  SplitKey key = SplitKey::Actor;
  std::vector<std::string> train_ids;
  /// Empty: carve the validation set out of the training ids.
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;

  void validate() const;
};

struct Fold {
  std::string name;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Sample indices per fold. Validation sets are carved from the training part,
/// stratified by action, unless a split protocol lists validation ids.
/// Throws TooFewSamples when the protocol cannot be met.
std::vector<Fold> make_folds(const std::vector<Sample>& samples, const Protocol& protocol, std::uint64_t seed,
                             double validation_fraction = 0.15);

/// Confusion matrices have rows = truth, columns = prediction.
double absolute_accuracy(const Eigen::MatrixXi& confusion);
/// Mean per-class recall over classes with at least one test sample.
double relative_accuracy(const Eigen::MatrixXi& confusion);

struct FoldReport {
  std::string name;
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  int epochs = 0;
  int best_epoch = 0;
  Eigen::MatrixXi confusion;
  double absolute = 0.0;
  double relative = 0.0;
};

struct EvalReport {
  std::vector<std::string> actions;
  Eigen::MatrixXi confusion;
  double absolute = 0.0;
  double relative = 0.0;
  std::vector<FoldReport> folds;
  std::vector<std::string> warnings;
  std::string config_echo;
};

/// Runs every fold: fit the pipeline on the fold's training samples only, then
/// classify its test samples. Confusion matrices are summed over folds in fold order.
EvalReport run_experiment(const std::vector<Sample>& samples, const Protocol& protocol, const PipelineConfig& cfg);

/// Fixed-width text table of the confusion matrix.
std::string render_confusion(const std::vector<std::string>& actions, const Eigen::MatrixXi& confusion);

}  // namespace posehar

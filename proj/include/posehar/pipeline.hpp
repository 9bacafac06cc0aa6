#pragma once

// End-to-end fitting and prediction: preprocessing, augmentation, prototype libraries,
// channel construction and the sequence classifier, for each pipeline mode.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posehar/augment.hpp"
#include "posehar/classifier.hpp"
#include "posehar/embed.hpp"
#include "posehar/library.hpp"

namespace posehar {

struct PipelineConfig {
  PipelineMode mode = PipelineMode::Advanced;
  AugmentConfig augment;
  int pca_rank = 3;
  SomConfig som;
  /// `classes` and `channels` are filled in from the data.
  ClassifierConfig classifier;
  std::uint64_t seed = 0;
  /// Share of each action's training samples held out for early stopping.
  double validation_fraction = 0.15;
  /// Worker threads for independent folds; 0 picks the hardware concurrency.
  int threads = 1;

  void validate() const;
};

/// Copy of `cfg` whose augmentation, SOM and classifier seeds derive from cfg.seed.
PipelineConfig with_derived_seeds(const PipelineConfig& cfg);

/// Classifier input (channels x T) of a raw sample. Basic/advanced modes run
/// preprocessing (and may throw its data errors); advanced needs an embedder.
Eigen::MatrixXd sample_channels(PipelineMode mode, const Sample& raw, const Embedder* embedder);
Eigen::MatrixXd sequence_channels(PipelineMode mode, const LabeledSequence& seq, const Embedder* embedder);

struct FittedPipeline {
  PipelineMode mode = PipelineMode::Advanced;
  /// Classifier label order.
  std::vector<std::string> actions;
  /// Present in advanced mode.
  std::optional<ModelBundle> bundle;
  ClassifierModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  std::vector<std::string> warnings;
};

/// Fits every stage on `train` only; `validation` drives early stopping. Labels map
/// to positions in `actions`. Seeds are used as given (see with_derived_seeds).
FittedPipeline fit_pipeline(const std::vector<Sample>& train, const std::vector<Sample>& validation,
                            const std::vector<std::string>& actions, const PipelineConfig& cfg);

struct LabeledPrediction {
  std::string action;
  Prediction prediction;
};

LabeledPrediction predict_sample(const FittedPipeline& pipeline, const Sample& sample);
std::vector<LabeledPrediction> predict_samples(const FittedPipeline& pipeline, const std::vector<Sample>& samples);

/// Classifier metadata JSON written into the model file: mode and action list.
std::string pipeline_metadata(PipelineMode mode, const std::vector<std::string>& actions);
void read_pipeline_metadata(const std::string& metadata, PipelineMode& mode, std::vector<std::string>& actions);

}  // namespace posehar

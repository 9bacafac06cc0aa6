#include "posehar/pipeline.hpp"

#include <algorithm>

#include <json.hpp>

namespace posehar {

void PipelineConfig::validate() const {
  augment.validate();
  som.validate();
  if (pca_rank < 1 || pca_rank >= kFeatureDim) throw Error(Errc::InvalidConfig, "pca_rank must lie in [1, 25]");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw Error(Errc::InvalidConfig, "validation_fraction must lie in (0,1)");
  if (threads < 0) throw Error(Errc::InvalidConfig, "threads must be >= 0");
}

PipelineConfig with_derived_seeds(const PipelineConfig& cfg) {
  PipelineConfig out = cfg;
  out.augment.seed = derive_seed(cfg.seed, 11);
  out.som.seed = derive_seed(cfg.seed, 12);
  out.classifier.seed = derive_seed(cfg.seed, 13);
  return out;
}

Eigen::MatrixXd sequence_channels(PipelineMode mode, const LabeledSequence& seq, const Embedder* embedder) {
  switch (mode) {
    case PipelineMode::Basic: return basic_channels(seq.seq);
    case PipelineMode::Advanced:
      if (embedder == nullptr) throw Error(Errc::MissingLibrary, "advanced mode needs prototype libraries");
      return embedder->embed_sequence(seq.seq, mode);
    case PipelineMode::Baseline: break;
  }
  throw Error(Errc::InvalidConfig, "baseline channels are built from raw samples");
}

Eigen::MatrixXd sample_channels(PipelineMode mode, const Sample& raw, const Embedder* embedder) {
  if (mode == PipelineMode::Baseline) {
    const bool anyone = std::any_of(raw.poses.begin(), raw.poses.end(), [](const Pose& p) { return present_count(p) > 0; });
    if (!anyone) throw Error(Errc::EmptySequence, "no landmark detected in any frame");
    return baseline_channels(raw);
  }
  return sequence_channels(mode, preprocess(raw), embedder);
}

std::string pipeline_metadata(PipelineMode mode, const std::vector<std::string>& actions) {
  nlohmann::json j;
  j["mode"] = std::string(to_string(mode));
  j["actions"] = actions;
  return j.dump();
}

void read_pipeline_metadata(const std::string& metadata, PipelineMode& mode, std::vector<std::string>& actions) {
  try {
    const auto j = nlohmann::json::parse(metadata);
    mode = parse_mode(j.at("mode").get<std::string>());
    actions = j.at("actions").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("model metadata: ") + e.what());
  }
}

namespace {

int label_of(const std::vector<std::string>& actions, const std::string& action) {
  const auto it = std::find(actions.begin(), actions.end(), action);
  if (it == actions.end()) throw Error(Errc::UnknownLabel, "action '" + action + "' is not in the vocabulary");
  return static_cast<int>(it - actions.begin());
}

}  // namespace

FittedPipeline fit_pipeline(const std::vector<Sample>& train, const std::vector<Sample>& validation,
                            const std::vector<std::string>& actions, const PipelineConfig& cfg) {
  cfg.validate();
  if (train.empty() || validation.empty())
    throw Error(Errc::TooFewSamples, "training and validation sets must be non-empty");
  FittedPipeline fp;
  fp.mode = cfg.mode;
  fp.actions = actions;

  std::vector<SeriesExample> train_series, val_series;
  std::optional<Embedder> embedder;
  if (cfg.mode == PipelineMode::Baseline) {
    for (const auto& s : train) train_series.push_back({sample_channels(cfg.mode, s, nullptr), label_of(actions, s.action)});
  } else {
    std::vector<LabeledSequence> seqs;
    seqs.reserve(train.size());
    for (const auto& s : train) seqs.push_back(preprocess(s));
    const auto augmented = augment_training_set(seqs, cfg.augment);
    if (cfg.mode == PipelineMode::Advanced) {
      fp.bundle = fit_bundle(augmented, cfg.pca_rank, cfg.som, &fp.warnings);
      embedder.emplace(*fp.bundle);
    }
    const Embedder* e = embedder ? &*embedder : nullptr;
    for (const auto& s : augmented) train_series.push_back({sequence_channels(cfg.mode, s, e), label_of(actions, s.action)});
  }
  const Embedder* e = embedder ? &*embedder : nullptr;
  for (const auto& s : validation) val_series.push_back({sample_channels(cfg.mode, s, e), label_of(actions, s.action)});

  ClassifierConfig cc = cfg.classifier;
  cc.classes = static_cast<int>(actions.size());
  cc.channels = static_cast<int>(train_series.front().values.rows());
  auto result = posehar::train(cc, train_series, val_series);
  fp.model = std::move(result.model);
  fp.model.metadata = pipeline_metadata(cfg.mode, actions);
  fp.history = std::move(result.history);
  fp.best_epoch = result.best_epoch;
  return fp;
}

std::vector<LabeledPrediction> predict_samples(const FittedPipeline& pipeline, const std::vector<Sample>& samples) {
  std::optional<Embedder> embedder;
  if (pipeline.mode == PipelineMode::Advanced) {
    if (!pipeline.bundle) throw Error(Errc::MissingLibrary, "advanced pipeline has no prototype libraries");
    embedder.emplace(*pipeline.bundle);
  }
  std::vector<SeriesExample> series;
  series.reserve(samples.size());
  for (const auto& s : samples)
    series.push_back({sample_channels(pipeline.mode, s, embedder ? &*embedder : nullptr), 0});
  const auto preds = predict_all(pipeline.model, series);
  std::vector<LabeledPrediction> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back({pipeline.actions.at(static_cast<std::size_t>(p.label)), p});
  return out;
}

LabeledPrediction predict_sample(const FittedPipeline& pipeline, const Sample& sample) {
  return predict_samples(pipeline, {sample}).front();
}

}  // namespace posehar

#pragma once

// JSON run configuration and report serialization. Unknown keys are rejected.

#include <filesystem>

#include <json.hpp>

#include "posehar/eval.hpp"
#include "posehar/synth.hpp"

namespace posehar {

using Json = nlohmann::json;

struct RunConfig {
  PipelineConfig pipeline;
  Protocol protocol;
  CorpusConfig synth;
  /// Detector keypoints at or below this confidence count as absent.
  double confidence_threshold = 0.0;
};

/// Overlays the keys present in `j` onto `base`. Throws InvalidConfig.
RunConfig run_config_from_json(const Json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);
Json to_json(const RunConfig& cfg);

Json to_json(const PipelineConfig& cfg);
Json to_json(const Protocol& p);
Json to_json(const EvalReport& report);

}  // namespace posehar

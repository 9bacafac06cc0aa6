#include <doctest.h>

#include <fstream>

#include "posehar/config.hpp"
#include "posehar/synth.hpp"
#include "support/fixtures.hpp"
#include "support/tempdir.hpp"

using namespace posehar;

namespace {

Errc code_of(const Json& j) {
  try {
    run_config_from_json(j);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvalidConfig;
}

}  // namespace

TEST_CASE("empty config keeps defaults") {
  const RunConfig c = run_config_from_json(Json::object());
  const RunConfig d;
  CHECK(c.pipeline.mode == d.pipeline.mode);
  CHECK(c.pipeline.classifier == d.pipeline.classifier);
  CHECK(c.protocol.folds == d.protocol.folds);
  CHECK(c.pipeline.som.m == c.pipeline.pca_rank);
}

TEST_CASE("overlay of nested sections") {
  const Json j = Json::parse(R"({
    "seed": 17, "mode": "basic", "confidence_threshold": 0.3,
    "augment": {"z": 2, "sigma": 0.05, "flip": true},
    "library": {"pca_rank": 2, "q": 5, "init": "random"},
    "classifier": {"conv_blocks": [[16, 3], [8, 3]], "recurrent_units": 12, "attention": false},
    "protocol": {"kind": "split", "key": "dataset", "train": ["A"], "test": ["B"]},
    "synth": {"n_per_class": 4, "archetypes": ["squat", "march"], "viewpoints": ["left"], "frames": 25}
  })");
  const RunConfig c = run_config_from_json(j);
  CHECK(c.pipeline.seed == 17);
  CHECK(c.pipeline.mode == PipelineMode::Basic);
  CHECK(c.confidence_threshold == 0.3);
  CHECK(c.pipeline.augment.z == 2);
  CHECK(c.pipeline.augment.flip);
  CHECK(c.pipeline.pca_rank == 2);
  CHECK(c.pipeline.som.m == 2);
  CHECK(c.pipeline.som.q == 5);
  CHECK(c.pipeline.som.init == SomInit::Random);
  REQUIRE(c.pipeline.classifier.conv_blocks.size() == 2);
  CHECK(c.pipeline.classifier.conv_blocks[0].filters == 16);
  CHECK_FALSE(c.pipeline.classifier.attention);
  CHECK(c.protocol.kind == ProtocolKind::Split);
  CHECK(c.protocol.key == SplitKey::Dataset);
  CHECK(c.synth.archetypes == std::vector<Archetype>{Archetype::Squat, Archetype::March});
  CHECK(c.synth.viewpoints == std::vector<Viewpoint>{Viewpoint::Left});
  CHECK(c.synth.T == 25);

  const RunConfig back = run_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("invalid configurations") {
  CHECK(code_of(Json::parse(R"({"sed": 1})")) == Errc::InvalidConfig);
  CHECK(code_of(Json::parse(R"({"augment": {"zz": 1}})")) == Errc::InvalidConfig);
  CHECK(code_of(Json::parse(R"({"seed": "seven"})")) == Errc::InvalidConfig);
  CHECK(code_of(Json::parse(R"({"mode": "fancy"})")) == Errc::InvalidConfig);
  CHECK(code_of(Json::parse(R"({"library": {"pca_rank": 26}})")) == Errc::InvalidConfig);
  CHECK(code_of(Json::parse(R"({"classifier": {"conv_blocks": [[1]]}})")) == Errc::InvalidConfig);
  CHECK(code_of(Json::parse(R"({"augment": []})")) == Errc::InvalidConfig);
  CHECK(code_of(Json::parse(R"({"validation_fraction": 1.5})")) == Errc::InvalidConfig);
  CHECK(code_of(Json::parse(R"({"synth": {"viewpoints": ["up"]}})")) == Errc::InvalidConfig);
}

TEST_CASE("config files") {
  posehar::testing::TempDir dir;
  {
    std::ofstream(dir / "ok.json") << R"({"seed": 3})";
    std::ofstream(dir / "bad.json") << "{ not json";
  }
  CHECK(load_run_config(dir / "ok.json").pipeline.seed == 3);
  CHECK_THROWS_AS(load_run_config(dir / "bad.json"), Error);
  CHECK_THROWS_AS(load_run_config(dir / "absent.json"), Error);
}

TEST_CASE("derived seeds differ per stage and follow the pipeline seed") {
  PipelineConfig a;
  a.seed = 1;
  const auto x = with_derived_seeds(a);
  CHECK(x.augment.seed != x.som.seed);
  CHECK(x.som.seed != x.classifier.seed);
  a.seed = 2;
  const auto y = with_derived_seeds(a);
  CHECK(x.classifier.seed != y.classifier.seed);
  CHECK(with_derived_seeds(a).som.seed == y.som.seed);
}

TEST_CASE("pipeline metadata round trip") {
  PipelineMode mode = PipelineMode::Basic;
  std::vector<std::string> actions;
  read_pipeline_metadata(pipeline_metadata(PipelineMode::Advanced, {"b", "a"}), mode, actions);
  CHECK(mode == PipelineMode::Advanced);
  CHECK(actions == std::vector<std::string>{"b", "a"});
  CHECK_THROWS_AS(read_pipeline_metadata("{}", mode, actions), Error);
}

TEST_CASE("fitted advanced pipeline predicts its own training data") {
  CorpusConfig corpus;
  corpus.archetypes = {Archetype::WaveTwoArms, Archetype::Squat};
  corpus.viewpoints = {Viewpoint::Front};
  corpus.n_per_class = 6;
  corpus.T = 30;
  corpus.seed = 5;
  const auto samples = generate_corpus(corpus).samples;
  std::vector<Sample> train, val;
  for (std::size_t i = 0; i < samples.size(); ++i) (i % 6 == 5 ? val : train).push_back(samples[i]);

  PipelineConfig cfg;
  cfg.seed = 4;
  cfg.som.q = 2;
  cfg.classifier.conv_blocks = {{8, 3}};
  cfg.classifier.recurrent_units = 6;
  cfg.classifier.dropout = 0.0;
  cfg.classifier.lr = 1e-2;
  cfg.classifier.max_epochs = 30;
  cfg = with_derived_seeds(cfg);
  const std::vector<std::string> actions = {"squat", "wave-two-arms"};
  const auto fitted = fit_pipeline(train, val, actions, cfg);
  REQUIRE(fitted.bundle.has_value());
  CHECK(fitted.bundle->actions == actions);
  CHECK(fitted.model.config.channels == channel_count(PipelineMode::Advanced, 2));

  const auto preds = predict_samples(fitted, samples);
  int right = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) right += preds[i].action == samples[i].action;
  CHECK(right >= 11);

  const auto raw = posehar::testing::make_sample({posehar::testing::upright_pose()}, "squat");
  const auto one = predict_sample(fitted, raw);
  CHECK(one.prediction.probabilities.sum() == doctest::Approx(1.0));

  CHECK_THROWS_AS(fit_pipeline(train, val, {"squat"}, cfg), Error);
}

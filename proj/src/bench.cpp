#include "posehar/bench.hpp"

#include <chrono>

#include "posehar/embed.hpp"
#include "posehar/synth.hpp"

namespace posehar {

ModelBundle random_bundle(int n_actions, int n_prototypes, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  ModelBundle b;
  for (int a = 0; a < n_actions; ++a) {
    const std::string name = "action" + std::to_string(a);
    b.actions.push_back(name);
    for (auto* libs : {&b.spatial, &b.temporal}) {
      PoseLibrary lib;
      lib.action = name;
      lib.kind = libs == &b.spatial ? LibraryKind::Spatial : LibraryKind::Temporal;
      for (int p = 0; p < n_prototypes; ++p) {
        Prototype proto;
        for (Eigen::Index i = 0; i < kFeatureDim; ++i) proto.full(i) = u(rng);
        proto.reduced = proto.full.head(3);
        proto.weight = 1;
        lib.prototypes.push_back(std::move(proto));
      }
      libs->emplace(name, std::move(lib));
    }
  }
  return b;
}

namespace {

template <typename F>
double seconds_per_call(F&& f, double min_seconds) {
  using clock = std::chrono::steady_clock;
  f();  // warm-up
  long calls = 0;
  const auto start = clock::now();
  double elapsed = 0.0;
  do {
    f();
    ++calls;
    elapsed = std::chrono::duration<double>(clock::now() - start).count();
  } while (elapsed < min_seconds);
  return elapsed / static_cast<double>(calls);
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
  const ModelBundle bundle = random_bundle(cfg.actions, cfg.prototypes, cfg.seed);
  const Embedder embedder(bundle);
  MotionSpec spec;
  spec.archetype = Archetype::WaveTwoArms;
  spec.T = cfg.frames;
  spec.jitter = 0.01;
  spec.actor_seed = cfg.seed;
  const Sample clip = generate(spec);
  const LabeledSequence seq = preprocess(clip);

  BenchResult r;
  volatile double sink = 0.0;
  const double per_clip = seconds_per_call(
      [&] { sink = sink + embedder.embed_sequence(seq.seq, PipelineMode::Advanced)(0, 0); }, cfg.min_seconds);
  r.embed_seconds_per_frame = per_clip / static_cast<double>(seq.seq.length());
  r.embed_frames_per_second = 1.0 / r.embed_seconds_per_frame;

  ClassifierConfig cc = cfg.classifier;
  cc.classes = cfg.actions;
  cc.channels = channel_count(PipelineMode::Advanced, bundle.actions.size());
  r.channels = cc.channels;
  const ClassifierModel model = init_model(cc);
  r.clip_latency_seconds = seconds_per_call(
      [&] {
        const auto p = predict(model, embedder.embed_sequence(preprocess(clip).seq, PipelineMode::Advanced));
        sink = sink + p.probabilities(0);
      },
      cfg.min_seconds);
  return r;
}

}  // namespace posehar

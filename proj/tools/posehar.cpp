// posehar: command-line front end of the pose-based action recognition pipeline.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "posehar/bench.hpp"
#include "posehar/config.hpp"
#include "posehar/ingest.hpp"

namespace fs = std::filesystem;
using namespace posehar;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> threshold;
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? run_config_from_json(Json::object()) : load_run_config(g.config_path);
  if (g.seed) cfg.pipeline.seed = *g.seed;
  if (g.mode) cfg.pipeline.mode = parse_mode(*g.mode);
  if (g.threshold) cfg.confidence_threshold = *g.threshold;
  cfg.synth.seed = cfg.pipeline.seed;
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create '" + dir.string() + "': " + ec.message());
}

std::string stem_for(std::size_t i, const std::string& action, const std::string& actor, Viewpoint w) {
  char idx[16];
  std::snprintf(idx, sizeof(idx), "%05zu", i);
  return std::string(idx) + "_" + action + "_" + actor + "_" + std::string(to_string(w));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
}

std::vector<LabeledSequence> load_normalized_dir(const fs::path& dir) {
  std::vector<LabeledSequence> out;
  for (const auto& p : list_files(dir, ".norm")) out.push_back(load_normalized(p));
  if (out.empty()) throw Error(Errc::EmptySequence, "no .norm files in '" + dir.string() + "'");
  return out;
}

void save_normalized_dir(const std::vector<LabeledSequence>& seqs, const fs::path& dir) {
  ensure_dir(dir);
  for (std::size_t i = 0; i < seqs.size(); ++i)
    save_normalized(seqs[i], dir / (stem_for(i, seqs[i].action, seqs[i].actor, seqs[i].viewpoint) + ".norm"));
}

Sample load_input(const fs::path& path, double threshold) {
  if (fs::is_directory(path)) {
    Sample s;
    s.poses = load_detector_directory(path, threshold);
    s.action = "unknown";
    s.actor = "unknown";
    s.dataset = "input";
    return s;
  }
  return load_sample(path);
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, const fs::path& out) {
  const Corpus corpus = generate_corpus(cfg.synth);
  ensure_dir(out);
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const fs::path p = out / corpus.manifest.entries[i].path;
    ensure_dir(p.parent_path());
    save_sample(corpus.samples[i], p);
  }
  write_manifest(corpus.manifest, out / "manifest.json");
  std::cout << "wrote " << corpus.samples.size() << " samples to " << out.string() << "\n";
  return 0;
}

int cmd_ingest(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& out) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const auto samples = load_dataset(manifest, cfg.confidence_threshold);
  ensure_dir(out);
  DatasetManifest written;
  written.actions = manifest.actions;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ManifestEntry e = manifest.entries[i];
    e.path = stem_for(i, e.action, e.actor, e.viewpoint) + ".pose";
    e.format = EntryFormat::Internal;
    save_sample(samples[i], out / e.path);
    written.entries.push_back(e);
  }
  write_manifest(written, out / "manifest.json");
  std::cout << "ingested " << samples.size() << " samples into " << out.string() << "\n";
  return 0;
}

int cmd_preprocess(const fs::path& manifest_path, const fs::path& out) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const auto samples = load_dataset(manifest);
  std::vector<LabeledSequence> seqs;
  Json report = Json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    Json row = {{"entry", manifest.entries[i].path}, {"frames", s.length()}};
    try {
      const CleanSequence clean = treat_missing(s);
      LabeledSequence seq{normalize(clean), s.action, s.viewpoint, s.actor, s.dataset};
      row["dropped_frames"] = clean.dropped_frames;
      row["degenerate_frames"] = seq.seq.degenerate_frames;
      row["mirror_filled"] = clean.mirrored.indices();
      row["persistent_missing"] = seq.seq.persistent_missing.indices();
      seqs.push_back(std::move(seq));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Data) throw;
      row["skipped"] = e.what();
      std::cerr << "warning: entry " << i << " skipped: " << e.what() << "\n";
    }
    report.push_back(row);
  }
  if (seqs.empty()) throw Error(Errc::EmptySequence, "no sample survived preprocessing");
  save_normalized_dir(seqs, out);
  write_text(out / "report.json", Json{{"version", 1}, {"samples", report}}.dump(2) + "\n");
  std::cout << "normalized " << seqs.size() << " of " << samples.size() << " samples into " << out.string() << "\n";
  return 0;
}

int cmd_augment(const RunConfig& cfg, const fs::path& in, const fs::path& out) {
  AugmentConfig ac = with_derived_seeds(cfg.pipeline).augment;
  const auto seqs = augment_training_set(load_normalized_dir(in), ac);
  save_normalized_dir(seqs, out);
  std::cout << "wrote " << seqs.size() << " sequences to " << out.string() << "\n";
  return 0;
}

int cmd_build_libraries(const RunConfig& cfg, const fs::path& in, const fs::path& out) {
  const PipelineConfig pc = with_derived_seeds(cfg.pipeline);
  std::vector<std::string> warnings;
  ModelBundle bundle = fit_bundle(load_normalized_dir(in), pc.pca_rank, pc.som, &warnings);
  bundle.config_echo = to_json(pc).dump();
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  save_bundle(bundle, out.string());
  std::size_t protos = 0;
  for (const auto& [a, lib] : bundle.spatial) protos += lib.prototypes.size();
  std::cout << "libraries for " << bundle.actions.size() << " actions (" << protos << " spatial prototypes) written to "
            << out.string() << "\n";
  return 0;
}

int cmd_embed(const RunConfig& cfg, const std::string& in, const std::string& manifest_path,
              const std::string& bundle_path, const fs::path& out) {
  const PipelineMode mode = cfg.pipeline.mode;
  ensure_dir(out);
  std::size_t n = 0;
  if (mode == PipelineMode::Baseline) {
    if (manifest_path.empty()) throw Error(Errc::InvalidConfig, "baseline embedding reads raw samples: pass --manifest");
    const auto samples = load_dataset(read_manifest(manifest_path), cfg.confidence_threshold);
    const auto names = channel_names(mode, {});
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      SeriesRecord rec{s.action, s.viewpoint, s.actor, s.dataset, "baseline", names, sample_channels(mode, s, nullptr)};
      save_series(rec, out / (stem_for(i, s.action, s.actor, s.viewpoint) + ".series"));
      ++n;
    }
  } else {
    if (in.empty()) throw Error(Errc::InvalidConfig, "pass --in with a directory of normalized sequences");
    std::optional<ModelBundle> bundle;
    std::optional<Embedder> embedder;
    std::vector<std::string> actions;
    if (mode == PipelineMode::Advanced) {
      if (bundle_path.empty()) throw Error(Errc::InvalidConfig, "advanced embedding needs --bundle");
      bundle = load_bundle(bundle_path);
      embedder.emplace(*bundle);
      actions = bundle->actions;
    }
    const auto names = channel_names(mode, actions);
    const auto seqs = load_normalized_dir(in);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const auto& s = seqs[i];
      SeriesRecord rec{s.action, s.viewpoint, s.actor, s.dataset, std::string(to_string(mode)), names,
                       sequence_channels(mode, s, embedder ? &*embedder : nullptr)};
      save_series(rec, out / (stem_for(i, s.action, s.actor, s.viewpoint) + ".series"));
      ++n;
    }
  }
  std::cout << "wrote " << n << " series to " << out.string() << "\n";
  return 0;
}

std::vector<SeriesRecord> load_series_dir(const fs::path& dir) {
  std::vector<SeriesRecord> out;
  for (const auto& p : list_files(dir, ".series")) out.push_back(load_series(p));
  if (out.empty()) throw Error(Errc::EmptySequence, "no .series files in '" + dir.string() + "'");
  return out;
}

int cmd_train(const RunConfig& cfg, const fs::path& in, const std::string& val_dir, const fs::path& out) {
  const PipelineConfig pc = with_derived_seeds(cfg.pipeline);
  auto records = load_series_dir(in);
  const std::string mode = records.front().mode;
  std::set<std::string> vocab;
  for (const auto& r : records) {
    if (r.mode != mode) throw Error(Errc::ShapeMismatch, "series files mix pipeline modes");
    vocab.insert(r.action);
  }
  const std::vector<std::string> actions(vocab.begin(), vocab.end());
  auto to_example = [&](const SeriesRecord& r) {
    const auto it = std::find(actions.begin(), actions.end(), r.action);
    if (it == actions.end()) throw Error(Errc::UnknownLabel, "validation action '" + r.action + "' not seen in training");
    return SeriesExample{r.values, static_cast<int>(it - actions.begin())};
  };

  std::vector<SeriesExample> train_set, val_set;
  if (!val_dir.empty()) {
    for (const auto& r : records) train_set.push_back(to_example(r));
    for (const auto& r : load_series_dir(val_dir)) val_set.push_back(to_example(r));
  } else {
    // Stratified hold-out; reuse the fold machinery on label-only samples.
    std::vector<Sample> stub(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) stub[i].action = records[i].action;
    Protocol split;
    split.kind = ProtocolKind::Split;
    split.train_ids = {"all"};
    split.test_ids = {"none"};
    for (auto& s : stub) s.actor = "all";
    stub.emplace_back();
    stub.back().actor = "none";
    const auto folds = make_folds(stub, split, pc.seed, pc.validation_fraction);
    for (std::size_t i : folds.front().train) train_set.push_back(to_example(records[i]));
    for (std::size_t i : folds.front().validation) val_set.push_back(to_example(records[i]));
  }

  ClassifierConfig cc = pc.classifier;
  cc.classes = static_cast<int>(actions.size());
  cc.channels = static_cast<int>(records.front().values.rows());
  auto result = train(cc, train_set, val_set);
  result.model.metadata = pipeline_metadata(parse_mode(mode), actions);
  save_model(result.model, out.string());
  const auto& best = result.history[static_cast<std::size_t>(result.best_epoch - 1)];
  std::cout << "trained " << result.history.size() << " epochs, best epoch " << result.best_epoch
            << " (validation accuracy " << best.val_accuracy << "); model written to " << out.string() << "\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& model_path, const std::string& bundle_path,
                const fs::path& input) {
  FittedPipeline fp;
  fp.model = load_model(model_path);
  read_pipeline_metadata(fp.model.metadata, fp.mode, fp.actions);
  if (fp.mode == PipelineMode::Advanced) {
    if (bundle_path.empty()) throw Error(Errc::InvalidConfig, "advanced model needs --bundle");
    fp.bundle = load_bundle(bundle_path);
  }
  const Sample sample = load_input(input, cfg.confidence_threshold);
  const auto p = predict_sample(fp, sample);
  Json probs = Json::object();
  for (std::size_t i = 0; i < fp.actions.size(); ++i)
    probs[fp.actions[i]] = p.prediction.probabilities(static_cast<Eigen::Index>(i));
  std::cout << Json{{"action", p.action}, {"label", p.prediction.label}, {"probabilities", probs}}.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& out) {
  const auto samples = load_dataset(read_manifest(manifest_path), cfg.confidence_threshold);
  EvalReport report = run_experiment(samples, cfg.protocol, cfg.pipeline);
  report.config_echo = to_json(cfg).dump();
  ensure_dir(out);
  write_text(out / "report.json", to_json(report).dump(2) + "\n");
  const std::string table = render_confusion(report.actions, report.confusion);
  write_text(out / "confusion.txt", table);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::printf("mode %s, protocol %s, %zu folds\n", std::string(to_string(cfg.pipeline.mode)).c_str(),
              std::string(to_string(cfg.protocol.kind)).c_str(), report.folds.size());
  std::printf("absolute accuracy %.4f\nrelative accuracy %.4f\n%s", report.absolute, report.relative, table.c_str());
  return 0;
}

int cmd_bench(const RunConfig& cfg, BenchConfig bc) {
  bc.seed = cfg.pipeline.seed;
  bc.classifier = cfg.pipeline.classifier;
  const auto r = run_bench(bc);
  std::cout << Json{{"actions", bc.actions},
                    {"prototypes_per_library", bc.prototypes},
                    {"frames_per_clip", bc.frames},
                    {"channels", r.channels},
                    {"embed_frames_per_second", r.embed_frames_per_second},
                    {"embed_microseconds_per_frame", r.embed_seconds_per_frame * 1e6},
                    {"clip_inference_milliseconds", r.clip_latency_seconds * 1e3}}
                   .dump(2)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose-based human action recognition pipeline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global seed (overrides the config)");

  std::string out, in, manifest, bundle, model, input, val;
  BenchConfig bench;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  synth->add_option("--out", out, "Output directory")->required();
  std::optional<int> per_class, frames;
  synth->add_option("--per-class", per_class, "Samples per archetype");
  synth->add_option("--frames", frames, "Frames per sample");

  auto* ingest = app.add_subcommand("ingest", "Convert a manifest of detector exports to the internal format");
  ingest->add_option("--manifest", manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out, "Output directory")->required();
  ingest->add_option("--threshold", g.threshold, "Keypoint confidence threshold");

  auto* prep = app.add_subcommand("preprocess", "Missing-data treatment and normalization");
  prep->add_option("--manifest", manifest, "Manifest of internal-format samples")->required()->check(CLI::ExistingFile);
  prep->add_option("--out", out, "Output directory of .norm files")->required();

  auto* aug = app.add_subcommand("augment", "Flip and noise augmentation of normalized sequences");
  aug->add_option("--in", in, "Directory of .norm files")->required()->check(CLI::ExistingDirectory);
  aug->add_option("--out", out, "Output directory")->required();
  std::optional<int> z;
  std::optional<double> sigma;
  bool flip = false;
  aug->add_option("--z", z, "Noised copies per sample");
  aug->add_option("--sigma", sigma, "Noise standard deviation (torso lengths)");
  aug->add_flag("--flip", flip, "Add mirrored copies");

  auto* lib = app.add_subcommand("build-libraries", "Fit PCA and SOM prototype libraries");
  lib->add_option("--in", in, "Directory of .norm files")->required()->check(CLI::ExistingDirectory);
  lib->add_option("--out", out, "Output bundle file")->required();

  auto* emb = app.add_subcommand("embed", "Build classifier input channels");
  emb->add_option("--in", in, "Directory of .norm files (basic/advanced)");
  emb->add_option("--manifest", manifest, "Raw manifest (baseline)");
  emb->add_option("--bundle", bundle, "Library bundle (advanced)");
  emb->add_option("--mode", g.mode, "basic | advanced | baseline");
  emb->add_option("--out", out, "Output directory of .series files")->required();

  auto* tr = app.add_subcommand("train", "Train the sequence classifier");
  tr->add_option("--in", in, "Directory of .series files")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--val", val, "Validation .series directory (default: stratified hold-out)");
  tr->add_option("--out", out, "Output model file")->required();

  auto* pred = app.add_subcommand("predict", "Classify one clip");
  pred->add_option("--model", model, "Model file")->required()->check(CLI::ExistingFile);
  pred->add_option("--bundle", bundle, "Library bundle (advanced models)");
  pred->add_option("--input", input, "Internal .pose file or directory of detector records")->required();
  pred->add_option("--threshold", g.threshold, "Keypoint confidence threshold");

  auto* ev = app.add_subcommand("evaluate", "Run an evaluation protocol");
  ev->add_option("--manifest", manifest, "Manifest of samples")->required()->check(CLI::ExistingFile);
  ev->add_option("--mode", g.mode, "basic | advanced | baseline");
  std::optional<std::string> protocol;
  std::optional<int> folds;
  ev->add_option("--protocol", protocol, "split | loao | kfold");
  ev->add_option("--folds", folds, "Folds for kfold");
  ev->add_option("--out", out, "Report directory")->required();

  auto* be = app.add_subcommand("bench", "Embedding throughput and per-clip inference latency");
  be->add_option("--actions", bench.actions, "Number of actions");
  be->add_option("--prototypes", bench.prototypes, "Prototypes per library");
  be->add_option("--frames", bench.frames, "Frames per clip");
  be->add_option("--seconds", bench.min_seconds, "Minimum time per measurement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    RunConfig cfg = resolve(g);
    if (per_class) cfg.synth.n_per_class = *per_class;
    if (frames) cfg.synth.T = *frames;
    if (z) cfg.pipeline.augment.z = *z;
    if (sigma) cfg.pipeline.augment.sigma = *sigma;
    if (flip) cfg.pipeline.augment.flip = true;
    if (protocol) cfg.protocol.kind = parse_protocol(*protocol);
    if (folds) cfg.protocol.folds = *folds;
    cfg.pipeline.validate();
    cfg.protocol.validate();

    if (*synth) return cmd_synth(cfg, out);
    if (*ingest) return cmd_ingest(cfg, manifest, out);
    if (*prep) return cmd_preprocess(manifest, out);
    if (*aug) return cmd_augment(cfg, in, out);
    if (*lib) return cmd_build_libraries(cfg, in, out);
    if (*emb) return cmd_embed(cfg, in, manifest, bundle, out);
    if (*tr) return cmd_train(cfg, in, val, out);
    if (*pred) return cmd_predict(cfg, model, bundle, input);
    if (*ev) return cmd_evaluate(cfg, manifest, out);
    if (*be) return cmd_bench(cfg, bench);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Config: return kExitConfig;
      case ErrorKind::Data: return kExitData;
      case ErrorKind::Numeric: return kExitNumeric;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}

#include "posehar/config.hpp"

#include <fstream>
#include <set>

namespace posehar {

namespace {

class Section {
public:
  Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw Error(Errc::InvalidConfig, "'" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const Json::exception&) {
      throw Error(Errc::InvalidConfig, "'" + name_ + "." + key + "' has the wrong type");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw Error(Errc::InvalidConfig, "unknown key '" + name_ + "." + k + "'");
  }

private:
  const Json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename Enum, typename Parse>
void get_enum(Section& s, const char* key, Enum& out, Parse parse) {
  std::string v;
  s.get(key, v);
  if (!v.empty()) out = parse(v);
}

}  // namespace

RunConfig run_config_from_json(const Json& j, RunConfig cfg) {
  Section root(j, "config");
  auto& p = cfg.pipeline;
  std::uint64_t seed = p.seed;
  root.get("seed", seed);
  p.seed = seed;
  get_enum(root, "mode", p.mode, parse_mode);
  root.get("validation_fraction", p.validation_fraction);
  root.get("threads", p.threads);
  root.get("confidence_threshold", cfg.confidence_threshold);

  if (const Json* a = root.child("augment")) {
    Section s(*a, "augment");
    s.get("z", p.augment.z);
    s.get("sigma", p.augment.sigma);
    s.get("flip", p.augment.flip);
    s.get("flip_noised", p.augment.flip_noised);
    s.finish();
  }
  if (const Json* l = root.child("library")) {
    Section s(*l, "library");
    s.get("pca_rank", p.pca_rank);
    s.get("q", p.som.q);
    s.get("epochs", p.som.epochs);
    s.get("lr0", p.som.lr0);
    s.get("radius0", p.som.radius0);
    get_enum(s, "init", p.som.init, [](const std::string& v) {
      if (v == "linear") return SomInit::Linear;
      if (v == "random") return SomInit::Random;
      throw Error(Errc::InvalidConfig, "library.init must be 'linear' or 'random'");
    });
    s.finish();
  }
  p.som.m = p.pca_rank;
  if (const Json* c = root.child("classifier")) {
    Section s(*c, "classifier");
    auto& cc = p.classifier;
    if (const Json* blocks = s.child("conv_blocks")) {
      if (!blocks->is_array()) throw Error(Errc::InvalidConfig, "classifier.conv_blocks must be a list of [filters, kernel]");
      cc.conv_blocks.clear();
      for (const auto& b : *blocks) {
        if (!b.is_array() || b.size() != 2 || !b[0].is_number_integer() || !b[1].is_number_integer())
          throw Error(Errc::InvalidConfig, "classifier.conv_blocks entries must be [filters, kernel]");
        cc.conv_blocks.push_back({b[0].get<int>(), b[1].get<int>()});
      }
    }
    s.get("recurrent_units", cc.recurrent_units);
    s.get("attention", cc.attention);
    s.get("dropout", cc.dropout);
    s.get("lr", cc.lr);
    s.get("batch", cc.batch);
    s.get("max_epochs", cc.max_epochs);
    s.get("patience", cc.patience);
    s.get("class_weights", cc.class_weights);
    s.get("bn_momentum", cc.bn_momentum);
    s.finish();
  }
  if (const Json* pr = root.child("protocol")) {
    Section s(*pr, "protocol");
    auto& proto = cfg.protocol;
    get_enum(s, "kind", proto.kind, parse_protocol);
    s.get("folds", proto.folds);
    get_enum(s, "key", proto.key, [](const std::string& v) {
      if (v == "actor") return SplitKey::Actor;
      if (v == "dataset") return SplitKey::Dataset;
      throw Error(Errc::InvalidConfig, "protocol.key must be 'actor' or 'dataset'");
    });
    s.get("train", proto.train_ids);
    s.get("val", proto.val_ids);
    s.get("test", proto.test_ids);
    s.finish();
  }
  if (const Json* sy = root.child("synth")) {
    Section s(*sy, "synth");
    auto& sc = cfg.synth;
    s.get("n_per_class", sc.n_per_class);
    std::vector<std::string> names;
    s.get("archetypes", names);
    if (!names.empty()) {
      sc.archetypes.clear();
      for (const auto& n : names) sc.archetypes.push_back(parse_archetype(n));
    }
    names.clear();
    s.get("viewpoints", names);
    if (!names.empty()) {
      sc.viewpoints.clear();
      for (const auto& n : names) {
        try {
          sc.viewpoints.push_back(parse_viewpoint(n));
        } catch (const Error& e) {
          throw Error(Errc::InvalidConfig, std::string("synth.viewpoints: ") + e.what());
        }
      }
    }
    s.get("frames", sc.T);
    s.get("period", sc.period);
    s.get("amplitude", sc.amplitude);
    s.get("jitter", sc.jitter);
    s.finish();
  }
  root.finish();
  p.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidConfig, "cannot open config '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

Json to_json(const PipelineConfig& p) {
  Json blocks = Json::array();
  for (const auto& b : p.classifier.conv_blocks) blocks.push_back({b.filters, b.kernel});
  return {
      {"seed", p.seed},
      {"mode", std::string(to_string(p.mode))},
      {"validation_fraction", p.validation_fraction},
      {"threads", p.threads},
      {"augment", {{"z", p.augment.z}, {"sigma", p.augment.sigma}, {"flip", p.augment.flip}, {"flip_noised", p.augment.flip_noised}}},
      {"library",
       {{"pca_rank", p.pca_rank},
        {"q", p.som.q},
        {"epochs", p.som.epochs},
        {"lr0", p.som.lr0},
        {"radius0", p.som.radius0},
        {"init", p.som.init == SomInit::Linear ? "linear" : "random"}}},
      {"classifier",
       {{"conv_blocks", blocks},
        {"recurrent_units", p.classifier.recurrent_units},
        {"attention", p.classifier.attention},
        {"dropout", p.classifier.dropout},
        {"lr", p.classifier.lr},
        {"batch", p.classifier.batch},
        {"max_epochs", p.classifier.max_epochs},
        {"patience", p.classifier.patience},
        {"class_weights", p.classifier.class_weights},
        {"bn_momentum", p.classifier.bn_momentum}}},
  };
}

Json to_json(const Protocol& p) {
  return {{"kind", std::string(to_string(p.kind))},
          {"folds", p.folds},
          {"key", p.key == SplitKey::Actor ? "actor" : "dataset"},
          {"train", p.train_ids},
          {"val", p.val_ids},
          {"test", p.test_ids}};
}

Json to_json(const RunConfig& cfg) {
  Json j = to_json(cfg.pipeline);
  j["protocol"] = to_json(cfg.protocol);
  j["confidence_threshold"] = cfg.confidence_threshold;
  std::vector<std::string> arch, views;
  for (auto a : cfg.synth.archetypes) arch.emplace_back(to_string(a));
  for (auto w : cfg.synth.viewpoints) views.emplace_back(to_string(w));
  j["synth"] = {{"n_per_class", cfg.synth.n_per_class}, {"archetypes", arch},     {"viewpoints", views},
                {"frames", cfg.synth.T},                {"period", cfg.synth.period}, {"amplitude", cfg.synth.amplitude},
                {"jitter", cfg.synth.jitter}};
  return j;
}

namespace {

Json matrix_json(const Eigen::MatrixXi& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Json to_json(const EvalReport& report) {
  Json folds = Json::array();
  for (const auto& f : report.folds)
    folds.push_back({{"name", f.name},
                     {"train", f.train},
                     {"validation", f.validation},
                     {"test", f.test},
                     {"epochs", f.epochs},
                     {"best_epoch", f.best_epoch},
                     {"absolute_accuracy", f.absolute},
                     {"relative_accuracy", f.relative},
                     {"confusion", matrix_json(f.confusion)}});
  Json j = {{"version", 1},
            {"actions", report.actions},
            {"absolute_accuracy", report.absolute},
            {"relative_accuracy", report.relative},
            {"confusion", matrix_json(report.confusion)},
            {"folds", folds},
            {"warnings", report.warnings}};
  if (!report.config_echo.empty()) j["config"] = Json::parse(report.config_echo);
  return j;
}

}  // namespace posehar

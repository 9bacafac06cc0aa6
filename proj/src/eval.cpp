#include "posehar/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace posehar {

std::string_view to_string(ProtocolKind kind) noexcept {
  switch (kind) {
    case ProtocolKind::Split: return "split";
    case ProtocolKind::Loao: return "loao";
    case ProtocolKind::KFold: return "kfold";
  }
  return "kfold";
}

ProtocolKind parse_protocol(std::string_view name) {
  if (name == "split") return ProtocolKind::Split;
  if (name == "loao") return ProtocolKind::Loao;
  if (name == "kfold" || name == "kfold_per_action") return ProtocolKind::KFold;
  throw Error(Errc::InvalidConfig, "unknown protocol '" + std::string(name) + "'");
}

void Protocol::validate() const {
  if (kind == ProtocolKind::KFold && folds < 2) throw Error(Errc::InvalidConfig, "kfold needs folds >= 2");
  if (kind != ProtocolKind::Split) return;
  if (train_ids.empty() || test_ids.empty())
    throw Error(Errc::InvalidConfig, "split protocol needs train and test id lists");
  std::set<std::string> seen;
  for (const auto* list : {&train_ids, &val_ids, &test_ids})
    for (const auto& id : *list)
      if (!seen.insert(id).second) throw Error(Errc::InvalidConfig, "id '" + id + "' appears in more than one split list");
}

namespace {

std::vector<std::string> sorted_unique_actions(const std::vector<Sample>& samples) {
  std::set<std::string> s;
  for (const auto& x : samples) s.insert(x.action);
  return {s.begin(), s.end()};
}

// Moves a stratified share of `pool` into the validation set.
void carve_validation(const std::vector<Sample>& samples, const std::vector<std::size_t>& pool, double fraction,
                      std::uint64_t seed, Fold& fold) {
  std::map<std::string, std::vector<std::size_t>> by_action;
  for (std::size_t i : pool) by_action[samples[i].action].push_back(i);
  Rng rng(seed);
  for (auto& [action, ids] : by_action) {
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto n = ids.size();
    const std::size_t k = n >= 2 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * n))) : 0;
    for (std::size_t j = 0; j < n; ++j) (j < k ? fold.validation : fold.train).push_back(ids[j]);
  }
  if (fold.validation.empty() || fold.train.empty())
    throw Error(Errc::TooFewSamples, "fold '" + fold.name + "': too few training samples to hold out a validation set");
}

void finish(Fold& f) {
  std::sort(f.train.begin(), f.train.end());
  std::sort(f.validation.begin(), f.validation.end());
  std::sort(f.test.begin(), f.test.end());
}

}  // namespace

std::vector<Fold> make_folds(const std::vector<Sample>& samples, const Protocol& protocol, std::uint64_t seed,
                             double validation_fraction) {
  protocol.validate();
  std::vector<Fold> folds;
  switch (protocol.kind) {
    case ProtocolKind::KFold: {
      const auto actions = sorted_unique_actions(samples);
      std::vector<std::vector<std::size_t>> groups(actions.size());
      for (std::size_t i = 0; i < samples.size(); ++i)
        groups[static_cast<std::size_t>(std::find(actions.begin(), actions.end(), samples[i].action) - actions.begin())]
            .push_back(i);
      for (std::size_t a = 0; a < groups.size(); ++a) {
        if (groups[a].size() < static_cast<std::size_t>(protocol.folds))
          throw Error(Errc::TooFewSamples, "action '" + actions[a] + "' has " + std::to_string(groups[a].size()) +
                                               " samples, fewer than " + std::to_string(protocol.folds) + " folds");
        Rng rng(derive_seed(seed, 200 + a));
        std::shuffle(groups[a].begin(), groups[a].end(), rng);
      }
      const auto F = static_cast<std::size_t>(protocol.folds);
      for (std::size_t f = 0; f < F; ++f) {
        Fold fold;
        fold.name = "fold" + std::to_string(f + 1);
        std::vector<std::size_t> pool;
        for (const auto& g : groups) {
          const std::size_t lo = f * g.size() / F, hi = (f + 1) * g.size() / F;
          for (std::size_t j = 0; j < g.size(); ++j) (j >= lo && j < hi ? fold.test : pool).push_back(g[j]);
        }
        carve_validation(samples, pool, validation_fraction, derive_seed(seed, 300 + f), fold);
        finish(fold);
        folds.push_back(std::move(fold));
      }
      break;
    }
    case ProtocolKind::Loao: {
      std::set<std::string> actors;
      for (const auto& s : samples) actors.insert(s.actor);
      if (actors.size() < 2) throw Error(Errc::TooFewSamples, "leave-one-actor-out needs at least two actors");
      std::size_t f = 0;
      for (const auto& actor : actors) {
        Fold fold;
        fold.name = "actor " + actor;
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < samples.size(); ++i) (samples[i].actor == actor ? fold.test : pool).push_back(i);
        carve_validation(samples, pool, validation_fraction, derive_seed(seed, 300 + f++), fold);
        finish(fold);
        folds.push_back(std::move(fold));
      }
      break;
    }
    case ProtocolKind::Split: {
      auto key = [&](const Sample& s) -> const std::string& {
        return protocol.key == SplitKey::Actor ? s.actor : s.dataset;
      };
      auto in = [](const std::vector<std::string>& list, const std::string& id) {
        return std::find(list.begin(), list.end(), id) != list.end();
      };
      Fold fold;
      fold.name = "split";
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& id = key(samples[i]);
        if (in(protocol.train_ids, id)) pool.push_back(i);
        else if (in(protocol.val_ids, id)) fold.validation.push_back(i);
        else if (in(protocol.test_ids, id)) fold.test.push_back(i);
      }
      if (pool.empty() || fold.test.empty())
        throw Error(Errc::TooFewSamples, "split protocol selects no training or no test samples");
      if (protocol.val_ids.empty()) {
        carve_validation(samples, pool, validation_fraction, derive_seed(seed, 300), fold);
      } else {
        if (fold.validation.empty()) throw Error(Errc::TooFewSamples, "split protocol selects no validation samples");
        fold.train = pool;
      }
      finish(fold);
      folds.push_back(std::move(fold));
      break;
    }
  }
  return folds;
}

double absolute_accuracy(const Eigen::MatrixXi& confusion) {
  const auto total = confusion.sum();
  return total > 0 ? static_cast<double>(confusion.trace()) / static_cast<double>(total) : 0.0;
}

double relative_accuracy(const Eigen::MatrixXi& confusion) {
  double sum = 0.0;
  int classes = 0;
  for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
    const auto n = confusion.row(r).sum();
    if (n == 0) continue;
    sum += static_cast<double>(confusion(r, r)) / static_cast<double>(n);
    ++classes;
  }
  return classes > 0 ? sum / classes : 0.0;
}

namespace {

struct FoldOutcome {
  FoldReport report;
  std::vector<std::string> warnings;
};

FoldOutcome run_fold(const std::vector<Sample>& samples, const Fold& fold, std::size_t index,
                     const std::vector<std::string>& actions, const PipelineConfig& base) {
  FoldOutcome out;
  auto pick = [&](const std::vector<std::size_t>& ids) {
    std::vector<Sample> v;
    v.reserve(ids.size());
    for (std::size_t i : ids) v.push_back(samples[i]);
    return v;
  };
  const auto train = pick(fold.train);
  std::set<std::string> trained;
  for (const auto& s : train) trained.insert(s.action);
  auto drop_untrained = [&](std::vector<Sample> v, const char* what) {
    std::vector<Sample> kept;
    std::set<std::string> dropped;
    for (auto& s : v) {
      if (trained.count(s.action)) kept.push_back(std::move(s));
      else dropped.insert(s.action);
    }
    for (const auto& a : dropped)
      out.warnings.push_back(fold.name + ": " + what + " samples of '" + a + "' dropped (class absent from training)");
    return kept;
  };
  const auto val = drop_untrained(pick(fold.validation), "validation");
  const auto test = drop_untrained(pick(fold.test), "test");

  PipelineConfig cfg = base;
  cfg.seed = derive_seed(base.seed, 100 + index);
  cfg = with_derived_seeds(cfg);
  auto fitted = fit_pipeline(train, val, actions, cfg);
  for (auto& w : fitted.warnings) out.warnings.push_back(fold.name + ": " + w);

  const auto L = static_cast<Eigen::Index>(actions.size());
  auto& r = out.report;
  r.name = fold.name;
  r.train = train.size();
  r.validation = val.size();
  r.test = test.size();
  r.epochs = static_cast<int>(fitted.history.size());
  r.best_epoch = fitted.best_epoch;
  r.confusion = Eigen::MatrixXi::Zero(L, L);
  if (!test.empty()) {
    const auto preds = predict_samples(fitted, test);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto truth = std::find(actions.begin(), actions.end(), test[i].action) - actions.begin();
      r.confusion(truth, preds[i].prediction.label) += 1;
    }
  }
  r.absolute = absolute_accuracy(r.confusion);
  r.relative = relative_accuracy(r.confusion);
  return out;
}

}  // namespace

EvalReport run_experiment(const std::vector<Sample>& samples, const Protocol& protocol, const PipelineConfig& cfg) {
  cfg.validate();
  protocol.validate();
  EvalReport report;

  // Samples that cannot be preprocessed are unusable in every mode.
  std::vector<Sample> usable;
  usable.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      (void)preprocess(samples[i]);
      usable.push_back(samples[i]);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Data) throw;
      report.warnings.push_back("sample " + std::to_string(i) + " (" + samples[i].action + ", actor " +
                                samples[i].actor + ") skipped: " + e.what());
    }
  }
  report.actions = sorted_unique_actions(usable);
  const auto folds = make_folds(usable, protocol, cfg.seed, cfg.validation_fraction);

  std::vector<FoldOutcome> outcomes(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < folds.size(); f = next++) {
      try {
        outcomes[f] = run_fold(usable, folds[f], f, report.actions, cfg);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  std::size_t threads = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, folds.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const Error& e) {
      throw Error(e.code(), folds[f].name + ": " + e.what());
    }
  }

  const auto L = static_cast<Eigen::Index>(report.actions.size());
  report.confusion = Eigen::MatrixXi::Zero(L, L);
  for (auto& o : outcomes) {
    report.confusion += o.report.confusion;
    for (auto& w : o.warnings) report.warnings.push_back(std::move(w));
    report.folds.push_back(std::move(o.report));
  }
  report.absolute = absolute_accuracy(report.confusion);
  report.relative = relative_accuracy(report.confusion);
  return report;
}

std::string render_confusion(const std::vector<std::string>& actions, const Eigen::MatrixXi& confusion) {
  std::size_t width = 5;
  for (const auto& a : actions) width = std::max(width, a.size());
  std::ostringstream out;
  auto pad = [&](const std::string& s, std::size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; };
  std::size_t cell = 4;
  for (Eigen::Index i = 0; i < confusion.size(); ++i)
    cell = std::max(cell, std::to_string(confusion.data()[i]).size() + 1);
  for (std::size_t c = 0; c < actions.size(); ++c) cell = std::max(cell, std::to_string(c + 1).size() + 2);
  out << pad("truth\\pred", width + 4);
  for (std::size_t c = 0; c < actions.size(); ++c) out << pad("[" + std::to_string(c + 1) + "]", cell);
  out << '\n';
  for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
    out << pad("[" + std::to_string(r + 1) + "] ", 5) << pad(actions[static_cast<std::size_t>(r)], width - 1);
    for (Eigen::Index c = 0; c < confusion.cols(); ++c) out << pad(std::to_string(confusion(r, c)), cell);
    out << '\n';
  }
  return out.str();
}

}  // namespace posehar

#include "posehar/augment.hpp"

#include <cmath>

#include "posehar/random.hpp"

namespace posehar {

void AugmentConfig::validate() const {
  if (z < 0) throw Error(Errc::InvalidConfig, "augment z must be >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw Error(Errc::InvalidConfig, "augment sigma must be finite and >= 0");
}

namespace {

Pose::Coords mirror_coords(const Pose::Coords& c) {
  Pose::Coords out;
  for (int k = 0; k < kNumLandmarks; ++k) {
    const int src = mirror_index(k + 1) - 1;
    out(0, k) = -c(0, src);
    out(1, k) = c(1, src);
  }
  return out;
}

Pose mirror_pose(const Pose& p) {
  Pose out;
  for (int j = 1; j <= kNumLandmarks; ++j) {
    const LandmarkId id{j};
    const LandmarkId src = mirror(id);
    if (p.present(src)) out.set(id, -p.coords()(0, src.slot()), p.coords()(1, src.slot()));
  }
  return out;
}

}  // namespace

LabeledSequence flip(const LabeledSequence& sample) {
  LabeledSequence out = sample;
  out.viewpoint = mirror(sample.viewpoint);
  auto& seq = out.seq;
  for (std::size_t t = 0; t < seq.poses.size(); ++t) seq.poses[t] = mirror_pose(sample.seq.poses[t]);
  // Negation is exact, so transforming displacements equals recomputing them.
  for (std::size_t t = 0; t < seq.derivatives.size(); ++t)
    seq.derivatives[t] = mirror_coords(sample.seq.derivatives[t]);
  LandmarkSet missing;
  for (int j : sample.seq.persistent_missing.indices()) missing.insert(mirror(LandmarkId{j}));
  seq.persistent_missing = missing;
  return out;
}

std::vector<NormalizedSequence> noise(const NormalizedSequence& seq, const AugmentConfig& cfg,
                                      Rng& rng) {
  cfg.validate();
  std::vector<NormalizedSequence> out;
  out.reserve(static_cast<std::size_t>(cfg.z));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int copy = 0; copy < cfg.z; ++copy) {
    NormalizedSequence noisy = seq;
    for (Pose& p : noisy.poses) {
      for (int k = 0; k < kNumLandmarks; ++k) {
        if (k == kRoot.slot() || !p.presence()[k]) continue;
        p.coords()(0, k) += cfg.sigma * gauss(rng);
        p.coords()(1, k) += cfg.sigma * gauss(rng);
      }
    }
    recompute_derivatives(noisy);
    out.push_back(std::move(noisy));
  }
  return out;
}

std::vector<LabeledSequence> augment_training_set(const std::vector<LabeledSequence>& train,
                                                  const AugmentConfig& cfg) {
  cfg.validate();
  std::vector<LabeledSequence> out(train.begin(), train.end());
  out.reserve(train.size() * static_cast<std::size_t>(1 + cfg.z) * (cfg.flip ? 2 : 1));
  for (std::size_t i = 0; i < train.size(); ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    for (auto& noisy : noise(train[i].seq, cfg, rng)) {
      LabeledSequence copy = train[i];
      copy.seq = std::move(noisy);
      out.push_back(std::move(copy));
    }
  }
  if (cfg.flip) {
    const std::size_t n = cfg.flip_noised ? out.size() : train.size();
    for (std::size_t i = 0; i < n; ++i) out.push_back(flip(out[i]));
  }
  return out;
}

}  // namespace posehar

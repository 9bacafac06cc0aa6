#pragma once

#include <cstdint>
#include <vector>

#include "posehar/preprocess.hpp"
#include "posehar/random.hpp"

namespace posehar {

struct AugmentConfig {
  /// Noised copies per sample.
  int z = 0;
  /// Noise standard deviation in normalized (torso-length) units.
  double sigma = 0.0;
  bool flip = false;
  /// When false only the originals are flipped, not their noised copies.
  bool flip_noised = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mirrors a normalized sequence about the vertical axis through the root:
/// negates x, swaps left/right tracks and relabels the viewpoint. An exact involution.
LabeledSequence flip(const LabeledSequence& sample);

/// `cfg.z` copies of `seq`, each present non-root coordinate perturbed by i.i.d.
/// N(0, sigma^2), drawn per landmark per frame. Derivatives are recomputed from the
/// noised poses. Draws come from `rng`.
std::vector<NormalizedSequence> noise(const NormalizedSequence& seq, const AugmentConfig& cfg,
                                      Rng& rng);

/// Training-set augmentation: originals, then z noised copies of each original
/// (sample i uses the stream derive_seed(cfg.seed, i)), then mirrored copies of
/// everything (or originals only). Size is N(1+z), doubled when flipping noised copies,
/// or N(1+z)+N when flipping originals only.
std::vector<LabeledSequence> augment_training_set(const std::vector<LabeledSequence>& train,
                                                  const AugmentConfig& cfg);

}  // namespace posehar

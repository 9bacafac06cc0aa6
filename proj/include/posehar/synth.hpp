#pragma once

// Seeded synthetic pose sequences: a fixed torso with sinusoidal limb motion per
// archetype, viewed from different directions by horizontal compression.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "posehar/ingest.hpp"
#include "posehar/pose.hpp"

namespace posehar {

enum class Archetype { WaveOneArm, WaveTwoArms, Squat, March, Still };

inline constexpr Archetype kAllArchetypes[] = {Archetype::WaveOneArm, Archetype::WaveTwoArms, Archetype::Squat,
                                               Archetype::March, Archetype::Still};

std::string_view to_string(Archetype a) noexcept;
/// "wave-one-arm", "wave-two-arms", "squat", "march", "still"; throws InvalidConfig.
Archetype parse_archetype(std::string_view name);

/// Horizontal scale applied about the root for each viewpoint (negative for rear views).
double viewpoint_compression(Viewpoint w) noexcept;

struct Occlusion {
  int landmark = 1;
  /// Inclusive frame range.
  int first = 0;
  int last = 0;
};

struct MotionSpec {
  Archetype archetype = Archetype::Still;
  Viewpoint viewpoint = Viewpoint::Front;
  /// Frames per motion cycle.
  double period = 20.0;
  /// Motion amplitude in torso lengths.
  double amplitude = 1.0;
  int T = 40;
  /// Body proportions, placement and pixel scale.
  std::uint64_t actor_seed = 0;
  /// Phase and small per-clip variations.
  std::uint64_t clip_seed = 0;
  /// Swap the roles of the left and right body sides.
  bool mirrored = false;
  /// Per-frame Gaussian landmark jitter in torso lengths.
  double jitter = 0.0;
  std::vector<Occlusion> occlusions;
  std::string actor = "actor0";
  std::string dataset = "synthetic";

  void validate() const;
};

Sample generate(const MotionSpec& spec);

struct CorpusConfig {
  /// Samples per archetype; sample k uses viewpoint k mod |viewpoints| and actor k / |viewpoints|.
  int n_per_class = 5;
  std::vector<Archetype> archetypes = {Archetype::WaveOneArm, Archetype::WaveTwoArms, Archetype::Squat};
  std::vector<Viewpoint> viewpoints = {Viewpoint::Front};
  std::uint64_t seed = 0;
  int T = 40;
  double period = 20.0;
  double amplitude = 1.0;
  double jitter = 0.01;

  void validate() const;
};

struct Corpus {
  std::vector<Sample> samples;
  /// Entry i describes samples[i]; paths are "<action>/<actor>_<viewpoint>.pose".
  DatasetManifest manifest;
};

Corpus generate_corpus(const CorpusConfig& cfg);

}  // namespace posehar

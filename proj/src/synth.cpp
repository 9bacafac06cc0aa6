#include "posehar/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "posehar/error.hpp"
#include "posehar/random.hpp"

namespace posehar {

std::string_view to_string(Archetype a) noexcept {
  switch (a) {
    case Archetype::WaveOneArm: return "wave-one-arm";
    case Archetype::WaveTwoArms: return "wave-two-arms";
    case Archetype::Squat: return "squat";
    case Archetype::March: return "march";
    case Archetype::Still: return "still";
  }
  return "still";
}

Archetype parse_archetype(std::string_view name) {
  for (Archetype a : kAllArchetypes)
    if (to_string(a) == name) return a;
  throw Error(Errc::InvalidConfig, "unknown archetype '" + std::string(name) + "'");
}

double viewpoint_compression(Viewpoint w) noexcept {
  switch (w) {
    case Viewpoint::Front: return 1.0;
    case Viewpoint::FrontLeft:
    case Viewpoint::FrontRight: return 0.7;
    case Viewpoint::Left:
    case Viewpoint::Right: return 0.4;
    case Viewpoint::Rear: return -1.0;
    case Viewpoint::RearLeft:
    case Viewpoint::RearRight: return -0.7;
  }
  return 1.0;
}

void MotionSpec::validate() const {
  if (T < 1) throw Error(Errc::InvalidConfig, "T must be >= 1");
  if (!(amplitude >= 0.0)) throw Error(Errc::InvalidConfig, "amplitude must be >= 0");
  if (!(period > 0.0)) throw Error(Errc::InvalidConfig, "period must be > 0");
  if (!(jitter >= 0.0)) throw Error(Errc::InvalidConfig, "jitter must be >= 0");
  for (const auto& o : occlusions)
    if (o.landmark < 1 || o.landmark > kNumLandmarks || o.first > o.last)
      throw Error(Errc::InvalidConfig, "bad occlusion range");
}

namespace {

constexpr double kPi = std::numbers::pi;

struct Body {
  double shoulder = 0.35;
  double hip = 0.18;
  double head = 0.45;
  // Index 0 = right side, 1 = left side.
  double upper_arm[2] = {0.44, 0.44};
  double forearm[2] = {0.38, 0.38};
  double thigh[2] = {0.5, 0.5};
  double shin[2] = {0.5, 0.5};
  double pixels = 90.0;
  double x0 = 320.0;
  double y0 = 170.0;
};

Body draw_body(std::uint64_t seed) {
  Rng rng(seed);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  Body b;
  b.shoulder = u(0.30, 0.40);
  b.hip = u(0.15, 0.22);
  b.head = u(0.40, 0.50);
  for (int s = 0; s < 2; ++s) {
    b.upper_arm[s] = u(0.40, 0.48);
    b.forearm[s] = u(0.35, 0.42);
    b.thigh[s] = u(0.46, 0.54);
    b.shin[s] = u(0.46, 0.54);
  }
  b.pixels = u(60.0, 120.0);
  b.x0 = u(200.0, 440.0);
  b.y0 = u(120.0, 220.0);
  return b;
}

struct Clip {
  double phase = 0.0;
  double period_scale = 1.0;
  double amplitude_scale = 1.0;
  double rest = 0.15;
  double lag = 0.0;
};

Clip draw_clip(std::uint64_t seed) {
  Rng rng(seed);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  Clip c;
  c.phase = u(0.0, 2 * kPi);
  c.period_scale = u(0.9, 1.1);
  c.amplitude_scale = u(0.85, 1.15);
  c.rest = u(0.10, 0.25);
  c.lag = u(-0.3, 0.3);
  return c;
}

// Side sign: right limbs extend towards -x, left limbs towards +x.
constexpr double kSide[2] = {-1.0, 1.0};

Point2 limb(const Point2& from, double length, double angle, int side) {
  return from + length * Point2(kSide[side] * std::sin(angle), std::cos(angle));
}

// Knee placed outward so that |hip-knee| = thigh and |knee-ankle| = shin.
Point2 bent_knee(const Point2& hip, const Point2& ankle, double thigh, double shin, int side) {
  const Point2 d = ankle - hip;
  const double dist = d.norm();
  if (dist >= thigh + shin) return hip + d * (thigh / (thigh + shin));
  const double a = (thigh * thigh - shin * shin + dist * dist) / (2 * dist);
  const double h = std::sqrt(std::max(0.0, thigh * thigh - a * a));
  const Point2 mid = hip + d * (a / dist);
  Point2 normal(-d.y() / dist, d.x() / dist);
  if (normal.x() * kSide[side] < 0) normal = -normal;
  return mid + h * normal;
}

// Landmark positions in torso units, root at the origin, y pointing down.
Pose::Coords body_pose(const MotionSpec& spec, const Body& b, const Clip& c, int t) {
  const double A = spec.amplitude * c.amplitude_scale;
  const double psi = 2 * kPi * t / (spec.period * c.period_scale) + c.phase;
  double arm_upper[2] = {c.rest, c.rest};
  double arm_fore[2] = {c.rest, c.rest};
  double drop = 0.0;
  double lift[2] = {0.0, 0.0};

  switch (spec.archetype) {
    case Archetype::Still: break;
    case Archetype::WaveTwoArms:
      arm_upper[1] = 2.2 + 0.15 * A * std::sin(psi + c.lag);
      arm_fore[1] = 2.9 + 0.5 * A * std::sin(psi + c.lag);
      [[fallthrough]];
    case Archetype::WaveOneArm:
      arm_upper[0] = 2.2 + 0.15 * A * std::sin(psi);
      arm_fore[0] = 2.9 + 0.5 * A * std::sin(psi);
      break;
    case Archetype::Squat:
      drop = 0.25 * A * (1.0 - std::cos(psi));
      for (int s = 0; s < 2; ++s) {
        arm_upper[s] = c.rest + 1.2 * drop;
        arm_fore[s] = c.rest + 1.4 * drop;
      }
      break;
    case Archetype::March:
      for (int s = 0; s < 2; ++s) {
        const double wave = std::sin(psi + (s == 1 ? kPi : 0.0));
        lift[s] = std::min(1.0, A) * std::max(0.0, wave);
        arm_upper[s] = c.rest + 0.35 * A * std::max(0.0, -wave);
        arm_fore[s] = arm_upper[s] + 0.3 * A * std::max(0.0, -wave);
      }
      break;
  }

  Pose::Coords p;
  auto put = [&](int j, const Point2& v) { p.col(j - 1) = v; };
  const Point2 root(0.0, drop);
  put(1, root + Point2(0.0, -b.head));
  put(2, root);
  for (int s = 0; s < 2; ++s) {
    const int base = s == 0 ? 3 : 6;
    const Point2 shoulder = root + Point2(kSide[s] * b.shoulder, 0.05);
    const Point2 elbow = limb(shoulder, b.upper_arm[s], arm_upper[s], s);
    put(base, shoulder);
    put(base + 1, elbow);
    put(base + 2, limb(elbow, b.forearm[s], arm_fore[s], s));
  }
  for (int s = 0; s < 2; ++s) {
    const int base = s == 0 ? 9 : 12;
    const Point2 hip = Point2(kSide[s] * b.hip, 1.0 + drop);
    const Point2 stand_ankle = Point2(kSide[s] * (b.hip + 0.04), 1.0 + b.thigh[s] + b.shin[s]);
    Point2 knee, ankle;
    if (spec.archetype == Archetype::March) {
      const double bend = 1.4 * lift[s];
      knee = hip + Point2(kSide[s] * 0.02, b.thigh[s] * std::cos(bend));
      ankle = knee + Point2(kSide[s] * 0.02, b.shin[s]);
    } else {
      ankle = stand_ankle;
      knee = bent_knee(hip, ankle, b.thigh[s], b.shin[s], s);
    }
    put(base, hip);
    put(base + 1, knee);
    put(base + 2, ankle);
  }
  return p;
}

Pose::Coords swap_sides(const Pose::Coords& c) {
  Pose::Coords out;
  for (int k = 0; k < kNumLandmarks; ++k) {
    const int src = mirror_index(k + 1) - 1;
    out(0, k) = -c(0, src);
    out(1, k) = c(1, src);
  }
  return out;
}

}  // namespace

Sample generate(const MotionSpec& spec) {
  spec.validate();
  const Body body = draw_body(spec.actor_seed);
  const Clip clip = draw_clip(spec.clip_seed);
  Rng noise_rng(derive_seed(spec.clip_seed, 7));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double squeeze = viewpoint_compression(spec.viewpoint);

  Sample s;
  s.action = std::string(to_string(spec.archetype));
  s.viewpoint = spec.viewpoint;
  s.actor = spec.actor;
  s.dataset = spec.dataset;
  s.poses.reserve(static_cast<std::size_t>(spec.T));
  for (int t = 0; t < spec.T; ++t) {
    Pose::Coords c = body_pose(spec, body, clip, t);
    if (spec.jitter > 0)
      for (int k = 0; k < kNumLandmarks; ++k)
        for (int d = 0; d < 2; ++d) c(d, k) += spec.jitter * gauss(noise_rng);
    if (spec.mirrored) c = swap_sides(c);
    Pose pose;
    for (int k = 0; k < kNumLandmarks; ++k)
      pose.set(LandmarkId{k + 1}, body.x0 + body.pixels * squeeze * c(0, k), body.y0 + body.pixels * c(1, k));
    s.poses.push_back(pose);
  }
  for (const auto& o : spec.occlusions)
    for (int t = std::max(0, o.first); t <= std::min(spec.T - 1, o.last); ++t)
      s.poses[static_cast<std::size_t>(t)].clear(LandmarkId{o.landmark});
  return s;
}

void CorpusConfig::validate() const {
  if (n_per_class < 1) throw Error(Errc::InvalidConfig, "n_per_class must be >= 1");
  if (archetypes.empty()) throw Error(Errc::InvalidConfig, "at least one archetype is required");
  if (viewpoints.empty()) throw Error(Errc::InvalidConfig, "at least one viewpoint is required");
  if (T < 1) throw Error(Errc::InvalidConfig, "T must be >= 1");
}

Corpus generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  for (Archetype a : cfg.archetypes) corpus.manifest.actions.emplace_back(to_string(a));
  const auto V = static_cast<int>(cfg.viewpoints.size());
  for (Archetype a : cfg.archetypes) {
    for (int k = 0; k < cfg.n_per_class; ++k) {
      const int actor = k / V;
      const Viewpoint w = cfg.viewpoints[static_cast<std::size_t>(k % V)];
      char name[16];
      std::snprintf(name, sizeof(name), "a%02d", actor);
      MotionSpec spec;
      spec.archetype = a;
      spec.viewpoint = w;
      spec.period = cfg.period;
      spec.amplitude = cfg.amplitude;
      spec.T = cfg.T;
      spec.jitter = cfg.jitter;
      spec.actor = name;
      spec.actor_seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(actor));
      spec.clip_seed = derive_seed(spec.actor_seed, 64 * static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(w));
      corpus.samples.push_back(generate(spec));

      ManifestEntry e;
      e.path = std::string(to_string(a)) + "/" + name + "_" + std::string(to_string(w)) + ".pose";
      e.action = std::string(to_string(a));
      e.viewpoint = w;
      e.actor = name;
      e.dataset = spec.dataset;
      corpus.manifest.entries.push_back(std::move(e));
    }
  }
  return corpus;
}

}  // namespace posehar

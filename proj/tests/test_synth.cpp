#include <doctest.h>

#include <cmath>

#include "posehar/augment.hpp"
#include "posehar/embed.hpp"
#include "posehar/synth.hpp"

using namespace posehar;

namespace {

MotionSpec spec_of(Archetype a, Viewpoint w = Viewpoint::Front) {
  MotionSpec s;
  s.archetype = a;
  s.viewpoint = w;
  s.T = 30;
  s.actor_seed = 42;
  s.clip_seed = 7;
  return s;
}

// Per-channel temporal standard deviation of the pose channels; insensitive to clip phase.
Eigen::ArrayXd motion_profile(const Eigen::MatrixXd& m) {
  Eigen::ArrayXd out(kPoseChannels);
  for (Eigen::Index c = 0; c < kPoseChannels; ++c) {
    const Eigen::ArrayXd x = m.row(c).transpose().array() - m.row(c).mean();
    out(c) = std::sqrt((x * x).mean());
  }
  return out;
}

double pearson(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  const Eigen::ArrayXd x = a - a.mean(), y = b - b.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

}  // namespace

TEST_CASE("archetype names") {
  for (Archetype a : kAllArchetypes) CHECK(parse_archetype(to_string(a)) == a);
  CHECK(to_string(Archetype::WaveTwoArms) == "wave-two-arms");
  CHECK_THROWS_AS(parse_archetype("dance"), Error);
}

TEST_CASE("a still body has zero displacements") {
  auto spec = spec_of(Archetype::Still);
  spec.T = 10;
  const auto seq = preprocess(generate(spec)).seq;
  REQUIRE(seq.derivatives.size() == 9);
  for (const auto& d : seq.derivatives) CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one-arm and two-arm waves differ only in the left arm") {
  for (double jitter : {0.0, 0.02}) {
    auto one = spec_of(Archetype::WaveOneArm);
    auto two = spec_of(Archetype::WaveTwoArms);
    one.jitter = two.jitter = jitter;
    const Sample a = generate(one), b = generate(two);
    bool left_arm_differs = false;
    for (std::size_t t = 0; t < a.length(); ++t)
      for (int k = 0; k < kNumLandmarks; ++k) {
        const bool same = a.poses[t].coords().col(k) == b.poses[t].coords().col(k);
        if (k >= 5 && k <= 7)
          left_arm_differs |= !same;
        else
          CHECK(same);
      }
    CHECK(left_arm_differs);
  }
}

TEST_CASE("occlusions clear exactly the requested frames") {
  auto spec = spec_of(Archetype::March);
  spec.occlusions = {{4, 3, 5}};
  const Sample s = generate(spec);
  for (int t = 0; t < spec.T; ++t) {
    CHECK(s.poses[static_cast<std::size_t>(t)].present(LandmarkId{4}) == (t < 3 || t > 5));
    CHECK(missing_count(s.poses[static_cast<std::size_t>(t)]) == (t >= 3 && t <= 5 ? 1 : 0));
  }
}

TEST_CASE("generated clips survive preprocessing intact") {
  for (Archetype a : kAllArchetypes)
    for (Viewpoint w : kAllViewpoints) {
      auto spec = spec_of(a, w);
      spec.jitter = 0.02;
      const Sample s = generate(spec);
      const auto clean = treat_missing(s);
      CHECK(clean.dropped_frames == 0);
      CHECK(normalize(clean).length() == s.length());
    }
}

TEST_CASE("viewpoints compress the horizontal axis") {
  CHECK(viewpoint_compression(Viewpoint::Front) == 1.0);
  CHECK(viewpoint_compression(Viewpoint::Rear) == -1.0);
  CHECK(std::abs(viewpoint_compression(Viewpoint::Left)) < std::abs(viewpoint_compression(Viewpoint::FrontLeft)));
  for (Viewpoint w : kAllViewpoints) CHECK(viewpoint_compression(w) == viewpoint_compression(mirror(w)));

  const auto front = preprocess(generate(spec_of(Archetype::Squat, Viewpoint::Front))).seq;
  const auto side = preprocess(generate(spec_of(Archetype::Squat, Viewpoint::Left))).seq;
  const double wf = std::abs(front.poses[0].coords()(0, 2) - front.poses[0].coords()(0, 5));
  const double ws = std::abs(side.poses[0].coords()(0, 2) - side.poses[0].coords()(0, 5));
  CHECK(ws < wf);
}

// Normalization uses the right hip link, so with asymmetric jitter the mirrored
// sequence matches the flipped one after rescaling by the ratio of hip links.
TEST_CASE("flipping a left view equals generating the mirrored body from the right") {
  for (Archetype a : kAllArchetypes)
    for (double jitter : {0.0, 0.01}) {
      auto left = spec_of(a, Viewpoint::Left);
      left.jitter = jitter;
      auto right = left;
      right.viewpoint = Viewpoint::Right;
      right.mirrored = true;
      const auto flipped = flip(preprocess(generate(left)));
      const auto direct = preprocess(generate(right));
      CHECK(flipped.viewpoint == direct.viewpoint);
      REQUIRE(flipped.seq.length() == direct.seq.length());
      double worst = 0;
      for (std::size_t t = 0; t < direct.seq.length(); ++t) {
        const auto& f = flipped.seq.poses[t].coords();
        const double k = jitter == 0.0 ? 1.0 : (f.col(8) - f.col(1)).norm();
        worst = std::max(worst, (f / k - direct.seq.poses[t].coords()).cwiseAbs().maxCoeff());
      }
      CHECK(worst < 1e-9);
    }
}

TEST_CASE("corpus layout and determinism") {
  CorpusConfig cfg;
  cfg.n_per_class = 5;
  cfg.seed = 9;
  const Corpus c = generate_corpus(cfg);
  REQUIRE(c.samples.size() == 15);
  CHECK(c.manifest.entries.size() == 15);
  CHECK(c.manifest.actions == std::vector<std::string>{"wave-one-arm", "wave-two-arms", "squat"});
  std::map<std::string, int> per_class;
  for (const auto& s : c.samples) ++per_class[s.action];
  for (const auto& [a, n] : per_class) CHECK(n == 5);
  CHECK(c.manifest.entries[0].path == "wave-one-arm/a00_front.pose");
  CHECK_NOTHROW(c.manifest.validate());

  const Corpus again = generate_corpus(cfg);
  for (std::size_t i = 0; i < c.samples.size(); ++i) CHECK(again.samples[i] == c.samples[i]);

  cfg.seed = 10;
  CHECK_FALSE(generate_corpus(cfg).samples[0] == c.samples[0]);

  cfg.viewpoints = {Viewpoint::Front, Viewpoint::Left, Viewpoint::FrontRight};
  cfg.n_per_class = 6;
  const Corpus v = generate_corpus(cfg);
  CHECK(v.samples[4].viewpoint == Viewpoint::Left);
  CHECK(v.samples[4].actor == "a01");
}

TEST_CASE("same-class clips of different actors have more similar motion profiles") {
  CorpusConfig cfg;
  cfg.n_per_class = 6;
  cfg.archetypes = {Archetype::WaveOneArm, Archetype::Squat, Archetype::March};
  cfg.seed = 21;
  const Corpus c = generate_corpus(cfg);
  std::vector<Eigen::ArrayXd> ch;
  for (const auto& s : c.samples) ch.push_back(motion_profile(basic_channels(preprocess(s).seq)));
  double same = 0, diff = 0;
  int ns = 0, nd = 0;
  for (std::size_t i = 0; i < ch.size(); ++i)
    for (std::size_t j = i + 1; j < ch.size(); ++j) {
      if (c.samples[i].actor == c.samples[j].actor) continue;
      const double r = pearson(ch[i], ch[j]);
      if (c.samples[i].action == c.samples[j].action) {
        same += r;
        ++ns;
      } else {
        diff += r;
        ++nd;
      }
    }
  CHECK(ns > 0);
  CHECK(nd > 0);
  CHECK(same / ns > diff / nd);

  // actors differ within a class
  CHECK_FALSE(c.samples[0].poses[0] == c.samples[1].poses[0]);
}

TEST_CASE("invalid specifications") {
  auto spec = spec_of(Archetype::Still);
  spec.T = 0;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = spec_of(Archetype::Still);
  spec.amplitude = -1;
  CHECK_THROWS_AS(generate(spec), Error);
  CorpusConfig cfg;
  cfg.n_per_class = 0;
  CHECK_THROWS_AS(generate_corpus(cfg), Error);
}

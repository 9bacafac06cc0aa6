#include <doctest.h>

#include <algorithm>

#include "posehar/bench.hpp"
#include "posehar/embed.hpp"
#include "support/fixtures.hpp"

using namespace posehar;

namespace {

Prototype proto_of(const Pose::Coords& c) {
  Prototype p;
  p.full = unroll(c);
  p.reduced = Eigen::VectorXd::Zero(3);
  p.weight = 1;
  return p;
}

Pose::Coords random_coords(Rng& rng) {
  Pose::Coords c = testing::random_pose(rng).coords();
  c.col(kRoot.slot()).setZero();
  return c;
}

PoseLibrary random_library(Rng& rng, int n, const std::string& action = "a") {
  PoseLibrary lib;
  lib.action = action;
  for (int i = 0; i < n; ++i) lib.prototypes.push_back(proto_of(random_coords(rng)));
  return lib;
}

}  // namespace

TEST_CASE("subset distance examples") {
  Rng rng(1);
  const Pose::Coords pose = random_coords(rng);
  for (LandmarkSubset s : kAllSubsets) CHECK(subset_distance(pose, proto_of(pose), s) == 0.0);

  Pose::Coords other = pose;
  other(0, 3) += 3.0;
  other(1, 3) += 4.0;
  CHECK(subset_distance(pose, proto_of(other), LandmarkSubset::RightArm) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(subset_distance(pose, proto_of(other), LandmarkSubset::LeftArm) == 0.0);

  Pose::Coords far = pose;
  far(0, 3) += 1.0;  // landmark 4 off by 1
  far(1, 4) += 2.0;  // landmark 5 off by 2
  far(0, 2) += 100.0;  // landmark 3, ignored when missing
  CHECK(subset_distance(pose, proto_of(far), LandmarkSubset::RightArm, LandmarkSet{3}) == 1.5);

  try {
    subset_distance(pose, proto_of(far), LandmarkSubset::RightArm, LandmarkSet{3, 4, 5});
    FAIL("expected EmptySubset");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptySubset);
  }
}

TEST_CASE("embed_frame takes the minimum over the library") {
  Pose::Coords pose = Pose::Coords::Zero();
  Pose::Coords a = pose, b = pose;
  a.row(0).array() += 2.0;
  b.row(0).array() += 0.5;
  a.col(kRoot.slot()).setZero();
  b.col(kRoot.slot()).setZero();
  PoseLibrary lib;
  lib.prototypes = {proto_of(a), proto_of(b)};
  const auto d = embed_frame(pose, lib);
  CHECK(d[1] == 0.5);
  CHECK(d[0] == doctest::Approx(0.5 * 13.0 / 14.0).epsilon(1e-15));

  lib.prototypes.push_back(proto_of(pose));
  for (double v : embed_frame(pose, lib)) CHECK(v == 0.0);

  PoseLibrary single;
  single.prototypes = {proto_of(a)};
  const auto s = embed_frame(pose, single);
  for (std::size_t k = 0; k < 5; ++k) CHECK(s[k] == subset_distance(pose, single.prototypes[0], kAllSubsets[k]));

  CHECK_THROWS_AS(embed_frame(pose, PoseLibrary{}), Error);
}

TEST_CASE("embedding values are non-negative and monotone under library growth") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    PoseLibrary lib = random_library(rng, 8);
    const Pose::Coords pose = random_coords(rng);
    const auto before = embed_frame(pose, lib);
    for (double v : before) CHECK(v >= 0.0);
    lib.prototypes.push_back(proto_of(random_coords(rng)));
    const auto after = embed_frame(pose, lib);
    for (std::size_t k = 0; k < 5; ++k) CHECK(after[k] <= before[k]);
  }
}

TEST_CASE("embedding does not depend on prototype order") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    PoseLibrary lib = random_library(rng, 16);
    const Pose::Coords pose = random_coords(rng);
    const LandmarkSet missing{4, 11};
    const auto a = embed_frame(pose, lib, missing);
    std::shuffle(lib.prototypes.begin(), lib.prototypes.end(), rng);
    CHECK(embed_frame(pose, lib, missing) == a);
  }
}

TEST_CASE("empty subsets read the sentinel") {
  Rng rng(4);
  const PoseLibrary lib = random_library(rng, 4);
  const auto d = embed_frame(random_coords(rng), lib, LandmarkSet{6, 7, 8});
  CHECK(d[2] == kEmptySubsetDistance);
  CHECK(d[0] < kEmptySubsetDistance);
}

TEST_CASE("channel arity") {
  std::vector<std::string> two = {"a", "b"};
  std::vector<std::string> seventeen;
  for (int i = 0; i < 17; ++i) seventeen.push_back("act" + std::to_string(i));
  CHECK(channel_count(PipelineMode::Advanced, 2) == 56 + 20);
  CHECK(channel_count(PipelineMode::Advanced, 17) == 226);
  CHECK(channel_count(PipelineMode::Basic, 17) == 56);
  CHECK(channel_count(PipelineMode::Baseline, 17) == 28);
  CHECK(channel_names(PipelineMode::Advanced, seventeen).size() == 226);
  CHECK(channel_names(PipelineMode::Basic, seventeen).size() == 56);
  const auto names = channel_names(PipelineMode::Advanced, two);
  CHECK(names[0] == "pose/1/x");
  CHECK(names[29] == "delta/1/y");
  CHECK(names[56] == "spatial/a/J");
  CHECK(names[57] == "spatial/a/J_a");
  CHECK(names[66] == "temporal/a/J");
  CHECK(names.back() == "temporal/b/J_d");
}

TEST_CASE("embedded sequences") {
  const ModelBundle bundle = random_bundle(3, 10, 7);
  const Embedder embedder(bundle);
  CHECK(embedder.actions().size() == 3);

  std::vector<Pose> poses(5, testing::upright_pose());
  const auto seq = preprocess(testing::make_sample(poses)).seq;
  const Eigen::MatrixXd adv = embedder.embed_sequence(seq, PipelineMode::Advanced);
  CHECK(adv.rows() == 56 + 30);
  CHECK(adv.cols() == 5);
  CHECK(adv.middleRows(28, 28).isZero(0));
  for (Eigen::Index t = 1; t < 5; ++t) CHECK(adv.middleRows(56, 15).col(t) == adv.middleRows(56, 15).col(0));
  CHECK((adv.bottomRows(30).array() >= 0).all());
  CHECK(embedder.embed_sequence(seq, PipelineMode::Basic).rows() == 56);
  CHECK(embedder.embed_sequence(seq, PipelineMode::Basic) == basic_channels(seq));

  for (Eigen::Index a = 0; a < 3; ++a) {
    const auto d = embedder.embed_frame(seq.poses[2].coords(), {}, LibraryKind::Spatial, static_cast<std::size_t>(a));
    const auto ref = embed_frame(seq.poses[2].coords(), bundle.spatial.at(bundle.actions[static_cast<std::size_t>(a)]));
    CHECK(d == ref);
    for (Eigen::Index s = 0; s < 5; ++s) CHECK(adv(56 + 5 * a + s, 2) == d[static_cast<std::size_t>(s)]);
  }
}

TEST_CASE("derivative channels are front padded") {
  std::vector<Pose> poses;
  for (int t = 0; t < 4; ++t) poses.push_back(testing::upright_pose(300.0, 200.0 + 10.0 * t * t));
  const auto seq = preprocess(testing::make_sample(poses)).seq;
  const Eigen::MatrixXd ch = basic_channels(seq);
  const Eigen::Map<const Eigen::VectorXd> d0(seq.derivatives[0].data(), 28);
  const Eigen::Map<const Eigen::VectorXd> d2(seq.derivatives[2].data(), 28);
  CHECK(ch.middleRows(28, 28).col(0) == d0);
  CHECK(ch.middleRows(28, 28).col(1) == d0);
  CHECK(ch.middleRows(28, 28).col(3) == d2);
}

TEST_CASE("missing landmarks read -1 in coordinate channels") {
  std::vector<Pose> poses(3, testing::upright_pose());
  for (auto& p : poses) {
    p.clear(LandmarkId{5});
    p.clear(LandmarkId{8});
  }
  const auto seq = preprocess(testing::make_sample(poses)).seq;
  const Eigen::MatrixXd ch = basic_channels(seq);
  CHECK((ch.row(8).array() == kMissingCoordinate).all());
  CHECK((ch.row(9).array() == kMissingCoordinate).all());
  CHECK((ch.row(28 + 14).array() == kMissingCoordinate).all());
  CHECK((ch.row(0).array() == 0.0).all());

  Sample raw = testing::make_sample(poses);
  const Eigen::MatrixXd base = baseline_channels(raw);
  CHECK(base.rows() == 28);
  CHECK(base(8, 0) == kMissingCoordinate);
  CHECK(base(2, 1) == poses[1].coords()(0, 1));
}

TEST_CASE("actions sharing prototypes have identical channels") {
  ModelBundle bundle = random_bundle(2, 6, 9);
  bundle.spatial.at(bundle.actions[1]).prototypes = bundle.spatial.at(bundle.actions[0]).prototypes;
  bundle.temporal.at(bundle.actions[1]).prototypes = bundle.temporal.at(bundle.actions[0]).prototypes;
  const Embedder embedder(bundle);
  std::vector<Pose> poses;
  for (int t = 0; t < 6; ++t) poses.push_back(testing::upright_pose(300.0 + 3.0 * t, 200.0));
  const Eigen::MatrixXd ch = embedder.embed_sequence(preprocess(testing::make_sample(poses)).seq, PipelineMode::Advanced);
  CHECK(ch.middleRows(56, 5) == ch.middleRows(61, 5));
  CHECK(ch.middleRows(66, 5) == ch.middleRows(71, 5));
}

TEST_CASE("missing libraries are reported") {
  ModelBundle bundle = random_bundle(2, 4, 1);
  bundle.temporal.erase(bundle.actions[1]);
  try {
    Embedder e(bundle);
    FAIL("expected MissingLibrary");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingLibrary);
  }
  CHECK(parse_mode("basic") == PipelineMode::Basic);
  CHECK_THROWS_AS(parse_mode("fancy"), Error);
}

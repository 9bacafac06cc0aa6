// Acceptance checks A1..A11. Prints one PASS/FAIL line per check; exit status 1 if any fails.
// Usage: acceptance [A1 A5 ...]   (no arguments runs everything)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "posehar/augment.hpp"
#include "posehar/bench.hpp"
#include "posehar/embed.hpp"
#include "posehar/eval.hpp"
#include "posehar/library.hpp"
#include "posehar/synth.hpp"
#include "support/gradcheck.hpp"

using namespace posehar;

namespace {

// Tolerances and budgets.
constexpr double kA1ScaleTol = 1e-9;
constexpr double kA1Budget = 5.0;
constexpr double kA4QeRatio = 0.5;
constexpr double kA4MeanTol = 1e-9;
constexpr double kA4Budget = 10.0;
constexpr double kA5EigTol = 1e-8;
constexpr double kA5AngleTol = 1e-6;
constexpr double kA6Step = 1e-4;
constexpr double kA6RelTol = 1e-4;
constexpr double kA6Floor = 1e-6;
constexpr double kA6Budget = 60.0;
constexpr double kA7Tol = 1e-6;
constexpr double kA8MinAccuracy = 0.90;
constexpr double kA8MinGap = 0.10;
constexpr double kA8Budget = 15 * 60.0;
constexpr double kA11MinFps = 1e3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// ---------------------------------------------------------------- A1

// Coordinates on a 2^-10 pixel grid so that integer translations are exact.
Sample grid_sequence(Rng& rng) {
  std::uniform_int_distribution<int> len(5, 40);
  std::uniform_int_distribution<int> cell(0, 640 * 1024);
  std::bernoulli_distribution drop(0.08);
  Sample s;
  s.action = "a";
  const int T = len(rng);
  for (int t = 0; t < T; ++t) {
    Pose p;
    for (int j = 1; j <= kNumLandmarks; ++j) {
      if (j != kRoot.index() && j != kRightHip.index() && drop(rng)) continue;
      p.set(LandmarkId{j}, cell(rng) / 1024.0, cell(rng) / 1024.0);
    }
    s.poses.push_back(p);
  }
  return s;
}

Sample transformed(Sample s, double a, double b, double k) {
  for (auto& p : s.poses)
    for (int j = 1; j <= kNumLandmarks; ++j)
      if (p.present(LandmarkId{j})) p.set(LandmarkId{j}, k * p.at(LandmarkId{j}).x() + a, k * p.at(LandmarkId{j}).y() + b);
  return s;
}

double max_diff(const NormalizedSequence& x, const NormalizedSequence& y) {
  if (x.poses.size() != y.poses.size() || x.derivatives.size() != y.derivatives.size() ||
      !(x.persistent_missing == y.persistent_missing))
    return INFINITY;
  double worst = 0;
  for (std::size_t t = 0; t < x.poses.size(); ++t) {
    if (x.poses[t].presence() != y.poses[t].presence()) return INFINITY;
    worst = std::max(worst, (x.poses[t].coords() - y.poses[t].coords()).cwiseAbs().maxCoeff());
  }
  for (std::size_t t = 0; t < x.derivatives.size(); ++t)
    worst = std::max(worst, (x.derivatives[t] - y.derivatives[t]).cwiseAbs().maxCoeff());
  return worst;
}

Outcome a1() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::uniform_int_distribution<int> shift(-2000, 2000);
  std::uniform_real_distribution<double> factor(0.1, 10.0);
  int exact = 0;
  double worst_scale = 0;
  for (int i = 0; i < 100; ++i) {
    const Sample s = grid_sequence(rng);
    const auto base = preprocess(s).seq;
    const double a = shift(rng), b = shift(rng), k = factor(rng);
    exact += preprocess(transformed(s, a, b, 1.0)).seq == base;
    worst_scale = std::max(worst_scale, max_diff(preprocess(transformed(s, 0.0, 0.0, k)).seq, base));
  }
  const double dt = seconds_since(t0);
  return {exact == 100 && worst_scale <= kA1ScaleTol && dt < kA1Budget,
          fmt("translation exact %d/100, scale max diff %.2e, %.2f s", exact, worst_scale, dt)};
}

// ---------------------------------------------------------------- A2

Pose frame_at(int t) {
  Pose p;
  for (int j = 1; j <= kNumLandmarks; ++j) p.set(LandmarkId{j}, 100.0 * j + t, 10.0 * j - t);
  return p;
}

Outcome a2() {
  // Seven raw frames. Frame 1 lacks the root, frame 3 lacks 9 landmarks.
  // Everywhere: head, right arm (3,4,5) and both ankles (11,14) absent.
  // Right knee (10) observed in retained frames 0, 2, 4 (ties at 1 and 3).
  // Left knee (13) observed only in the last retained frame.
  const int raw_T = 7;
  std::vector<Pose> raw;
  for (int t = 0; t < raw_T; ++t) {
    Pose p = frame_at(t);
    for (int j : {1, 3, 4, 5, 11, 14}) p.clear(LandmarkId{j});
    raw.push_back(p);
  }
  raw[1].clear(kRoot);
  for (int j : {6, 7, 12}) raw[3].clear(LandmarkId{j});
  const std::vector<int> kept = {0, 2, 4, 5, 6};
  for (int c : {1, 3}) raw[static_cast<std::size_t>(kept[static_cast<std::size_t>(c)])].clear(LandmarkId{10});
  for (int c : {0, 1, 2, 3}) raw[static_cast<std::size_t>(kept[static_cast<std::size_t>(c)])].clear(LandmarkId{13});

  std::vector<Pose> expected;
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const Pose src = frame_at(kept[c]);
    Pose e;
    for (int j : {2, 6, 7, 8, 9, 12}) e.set(LandmarkId{j}, src.at(LandmarkId{j}));
    for (int j : {3, 4, 5}) e.set(LandmarkId{j}, src.at(LandmarkId{j + 3}));
    const int knee_from = c == 1 ? 0 : c == 3 ? 2 : static_cast<int>(c);
    e.set(LandmarkId{10}, frame_at(kept[static_cast<std::size_t>(knee_from)]).at(LandmarkId{10}));
    e.set(LandmarkId{13}, frame_at(kept[4]).at(LandmarkId{13}));
    expected.push_back(e);
  }

  Sample s;
  s.action = "fixture";
  s.poses = raw;
  const CleanSequence got = treat_missing(s);
  const bool ok = got.poses == expected && got.persistent_missing == LandmarkSet{1, 11, 14} &&
                  got.mirrored == LandmarkSet{3, 4, 5} && got.dropped_frames == 2;
  return {ok, fmt("%zu frames kept, %zu dropped, persistent %s", got.poses.size(), got.dropped_frames,
                  got.persistent_missing == LandmarkSet{1, 11, 14} ? "{1,11,14}" : "mismatch")};
}

// ---------------------------------------------------------------- A3

const std::vector<std::vector<int>> kSubsetLandmarks = {
    {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14}, {3, 4, 5}, {6, 7, 8}, {9, 10, 11}, {12, 13, 14}};

// Prototype coordinate of landmark j straight from the unrolled layout (root omitted).
Point2 proto_xy(const FeatureVector& f, int j) {
  if (j == 2) return {0.0, 0.0};
  const int k = j == 1 ? 0 : j - 2;
  return {f(2 * k), f(2 * k + 1)};
}

double oracle(const Pose::Coords& pose, const PoseLibrary& lib, const std::vector<int>& subset,
              const std::set<int>& missing) {
  double best = INFINITY;
  bool any = false;
  for (const auto& proto : lib.prototypes) {
    double sum = 0;
    int n = 0;
    for (int j : subset) {
      if (missing.count(j)) continue;
      const Point2 r = proto_xy(proto.full, j);
      const double dx = pose(0, j - 1) - r.x();
      const double dy = pose(1, j - 1) - r.y();
      sum += std::sqrt(dx * dx + dy * dy);
      ++n;
    }
    if (n == 0) continue;
    any = true;
    best = std::min(best, sum / n);
  }
  return any ? best : kEmptySubsetDistance;
}

Outcome a3() {
  Rng rng(303);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::bernoulli_distribution gone(0.2);
  PoseLibrary lib;
  lib.action = "a";
  for (int p = 0; p < 64; ++p) {
    Prototype proto;
    for (int i = 0; i < kFeatureDim; ++i) proto.full(i) = u(rng);
    lib.prototypes.push_back(proto);
  }
  int compared = 0, equal = 0, empty_cases = 0;
  for (int i = 0; i < 100; ++i) {
    Pose::Coords pose;
    for (int k = 0; k < kNumLandmarks; ++k) pose.col(k) = Point2(u(rng), u(rng));
    std::set<int> missing;
    LandmarkSet set;
    if (i % 4 != 0)
      for (int j = 1; j <= kNumLandmarks; ++j)
        if (j != 2 && gone(rng)) {
          missing.insert(j);
          set.insert(LandmarkId{j});
        }
    if (i % 10 == 1)
      for (int j : {6, 7, 8}) {
        missing.insert(j);
        set.insert(LandmarkId{j});
      }
    const SubsetDistances got = embed_frame(pose, lib, set);
    for (std::size_t s = 0; s < 5; ++s) {
      const double want = oracle(pose, lib, kSubsetLandmarks[s], missing);
      empty_cases += want == kEmptySubsetDistance;
      equal += got[s] == want;
      ++compared;
    }
  }
  return {equal == compared && empty_cases > 0,
          fmt("%d/%d exact matches (%d all-missing subsets)", equal, compared, empty_cases)};
}

// ---------------------------------------------------------------- A4

Outcome a4() {
  const auto t0 = Clock::now();
  Rng rng(404);
  std::normal_distribution<double> g(0.0, 0.3);
  const int per_blob = 100;
  Eigen::MatrixXd x(3 * per_blob, 3);
  const double centres[3][3] = {{0, 0, 0}, {5, 0, 0}, {0, 5, 5}};
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < per_blob; ++i)
      for (int d = 0; d < 3; ++d) x(b * per_blob + i, d) = centres[b][d] + g(rng);

  SomConfig cfg;
  cfg.q = 4;
  cfg.m = 3;
  cfg.init = SomInit::Random;
  cfg.seed = 44;
  const auto som = train_som(x, cfg);
  const double qe0 = quantization_error(som.initial_units, x);
  const double qe = quantization_error(som.units, x);

  // Cluster means through the library path: the blobs embedded in 26-d.
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(x.rows(), kFeatureDim);
  full.leftCols(3) = x;
  const auto pca = fit_pca(full, 3);
  const auto set = build_prototypes(full, pca, cfg);
  double worst = 0;
  for (std::size_t p = 0; p < set.prototypes.size(); ++p) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(kFeatureDim);
    int n = 0;
    for (std::size_t i = 0; i < set.membership.size(); ++i)
      if (set.membership[i] == static_cast<int>(p)) {
        sum += full.row(static_cast<Eigen::Index>(i)).transpose();
        ++n;
      }
    worst = n == 0 ? INFINITY : std::max(worst, (sum / n - set.prototypes[p].full).cwiseAbs().maxCoeff());
  }
  const double dt = seconds_since(t0);
  const bool ok = qe <= kA4QeRatio * qe0 && set.prototypes.size() <= static_cast<std::size_t>(cfg.units()) &&
                  worst <= kA4MeanTol && dt < kA4Budget;
  return {ok, fmt("QE %.4f vs random-init %.4f, %zu prototypes, mean diff %.2e, %.2f s", qe, qe0,
                  set.prototypes.size(), worst, dt)};
}

// ---------------------------------------------------------------- A5

// Cyclic Jacobi eigendecomposition of a symmetric matrix; columns of `vectors`.
void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index n = a.rows();
  vectors = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * a.squaredNorm()) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
  }
  values = a.diagonal();
}

Outcome a5() {
  Rng rng(505);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_eig = 0, worst_sin = 0;
  for (int d = 0; d < 20; ++d) {
    const int n = 40 + 10 * d;
    const int m = 1 + d % 8;
    Eigen::MatrixXd z(n, kFeatureDim), r(kFeatureDim, kFeatureDim);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = g(rng);
    Eigen::VectorXd spread(kFeatureDim);
    for (int k = 0; k < kFeatureDim; ++k) spread(k) = std::pow(0.8, k);
    const Eigen::MatrixXd rot = Eigen::HouseholderQR<Eigen::MatrixXd>(r).householderQ();
    Eigen::MatrixXd data = z * spread.asDiagonal() * rot.transpose();
    data.rowwise() += Eigen::RowVectorXd::Constant(kFeatureDim, 3.0 * d);

    const auto model = fit_pca(data, m);

    // Oracle: explicit double-loop covariance and Jacobi rotations.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(kFeatureDim);
    for (int i = 0; i < n; ++i) mean += data.row(i).transpose();
    mean /= n;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(kFeatureDim, kFeatureDim);
    for (int i = 0; i < n; ++i)
      for (int p = 0; p < kFeatureDim; ++p)
        for (int q = 0; q < kFeatureDim; ++q) cov(p, q) += (data(i, p) - mean(p)) * (data(i, q) - mean(q));
    cov /= n - 1;
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    jacobi_eigen(cov, values, vectors);
    std::vector<Eigen::Index> order(kFeatureDim);
    for (int k = 0; k < kFeatureDim; ++k) order[static_cast<std::size_t>(k)] = k;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return values(x) > values(y); });

    Eigen::MatrixXd top(kFeatureDim, m);
    for (int k = 0; k < m; ++k) {
      const double want = values(order[static_cast<std::size_t>(k)]);
      worst_eig = std::max(worst_eig, std::abs(model.eigenvalues(k) - want) / std::abs(want));
      top.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
    }
    // Sine of the largest principal angle: spectral norm of the component outside the oracle subspace.
    const Eigen::MatrixXd outside = model.components - top * (top.transpose() * model.components);
    worst_sin = std::max(worst_sin, Eigen::JacobiSVD<Eigen::MatrixXd>(outside).singularValues()(0));
  }
  return {worst_eig < kA5EigTol && worst_sin < kA5AngleTol,
          fmt("max eigenvalue rel err %.2e, max principal-angle sine %.2e", worst_eig, worst_sin)};
}

// ---------------------------------------------------------------- A6

Outcome a6() {
  const auto t0 = Clock::now();
  double worst = 0;
  std::string worst_group;
  std::size_t groups = 0;
  for (bool attention : {true, false}) {
    auto cfg = testsupport::toy_config();
    cfg.attention = attention;
    const auto model = init_model(cfg);
    for (const auto& [name, e] : testsupport::gradient_check(model, testsupport::toy_batch(3), kA6Step, kA6Floor)) {
      ++groups;
      if (e.max_relative > worst) {
        worst = e.max_relative;
        worst_group = name;
      }
    }
  }
  const double dt = seconds_since(t0);
  return {worst < kA6RelTol && dt < kA6Budget,
          fmt("%zu groups, max rel err %.2e (%s), %.2f s", groups, worst, worst_group.c_str(), dt)};
}

// ---------------------------------------------------------------- A7

Outcome a7() {
  Rng rng(707);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> len(3, 40);
  ClassifierConfig cfg;
  cfg.conv_blocks = {{8, 5}, {6, 3}};
  cfg.recurrent_units = 5;
  cfg.channels = 6;
  cfg.classes = 3;
  cfg.seed = 77;
  ClassifierModel model = init_model(cfg);
  // Non-trivial running statistics so the eval path is exercised fully.
  for (auto& bn : model.running) {
    for (Eigen::Index i = 0; i < bn.mean.size(); ++i) {
      bn.mean(i) = 0.1 * g(rng);
      bn.var(i) = 1.0 + 0.5 * std::abs(g(rng));
    }
  }
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    SeriesExample ex;
    ex.values.resize(cfg.channels, len(rng));
    for (Eigen::Index k = 0; k < ex.values.size(); ++k) ex.values.data()[k] = g(rng);
    const std::vector<SeriesExample> one = {ex};
    const auto plain = forward(model, make_batch(one)).probabilities;
    const auto padded = forward(model, make_batch(one, static_cast<int>(ex.values.cols()) + 25)).probabilities;
    worst = std::max(worst, (plain - padded).cwiseAbs().maxCoeff());
  }
  return {worst < kA7Tol, fmt("max probability delta %.2e over 50 inputs", worst)};
}

// ---------------------------------------------------------------- A8

Outcome a8() {
  const auto t0 = Clock::now();
  CorpusConfig corpus_cfg;
  corpus_cfg.archetypes = {Archetype::WaveOneArm, Archetype::WaveTwoArms, Archetype::Squat, Archetype::March};
  corpus_cfg.viewpoints = {Viewpoint::Front, Viewpoint::FrontLeft, Viewpoint::Left};
  corpus_cfg.n_per_class = 3 * 12;
  corpus_cfg.seed = 2024;
  const auto corpus = generate_corpus(corpus_cfg).samples;

  // Each actor is moved to its own place in the frame for the baseline run.
  auto shifted = corpus;
  Rng rng(99);
  std::uniform_real_distribution<double> ox(-600.0, 600.0), oy(-300.0, 300.0);
  std::map<std::string, Point2> offset;
  for (auto& s : shifted) {
    if (!offset.count(s.actor)) offset[s.actor] = Point2(ox(rng), oy(rng));
    for (auto& p : s.poses)
      for (int j = 1; j <= kNumLandmarks; ++j)
        if (p.present(LandmarkId{j})) p.set(LandmarkId{j}, p.at(LandmarkId{j}) + offset[s.actor]);
  }

  PipelineConfig cfg;
  cfg.seed = 7;
  cfg.threads = 0;
  cfg.classifier.conv_blocks = {{32, 8}, {64, 5}, {32, 3}};
  cfg.classifier.recurrent_units = 16;
  cfg.classifier.max_epochs = 60;
  cfg.classifier.patience = 15;
  Protocol protocol;
  protocol.kind = ProtocolKind::KFold;
  protocol.folds = 10;

  cfg.mode = PipelineMode::Advanced;
  const double advanced = run_experiment(corpus, protocol, cfg).absolute;
  cfg.mode = PipelineMode::Baseline;
  const double baseline = run_experiment(shifted, protocol, cfg).absolute;
  const double dt = seconds_since(t0);
  return {advanced >= kA8MinAccuracy && advanced - baseline >= kA8MinGap && dt < kA8Budget,
          fmt("advanced %.3f, baseline (translated) %.3f, gap %.3f, %.0f s", advanced, baseline, advanced - baseline, dt)};
}

// ---------------------------------------------------------------- A9

Outcome a9() {
  CorpusConfig cc;
  cc.n_per_class = 4;
  cc.T = 20;
  cc.seed = 9;
  std::vector<LabeledSequence> train;
  for (const auto& s : generate_corpus(cc).samples) train.push_back(preprocess(s));
  const std::size_t N = train.size();

  AugmentConfig cfg;
  cfg.z = 2;
  cfg.sigma = 0.05;
  cfg.flip = true;
  cfg.seed = 123;
  const auto once = augment_training_set(train, cfg);
  const auto twice = augment_training_set(train, cfg);

  bool involution = true;
  for (const auto& s : once) involution = involution && flip(flip(s)) == s;
  Rng r1(5), r2(5);
  const bool noise_repro = once == twice && noise(train[0].seq, cfg, r1) == noise(train[0].seq, cfg, r2);
  return {once.size() == 6 * N && involution && noise_repro,
          fmt("N=%zu -> %zu sequences, involution %s, noise reproducible %s", N, once.size(),
              involution ? "exact" : "broken", noise_repro ? "yes" : "no")};
}

// ---------------------------------------------------------------- A10

Outcome a10() {
  CorpusConfig cc;
  cc.n_per_class = 1;
  cc.T = 12;
  const auto seq = preprocess(generate_corpus(cc).samples[0]).seq;
  std::string detail;
  bool ok = true;
  for (int L : {2, 17}) {
    const Embedder embedder(random_bundle(L, 8, static_cast<std::uint64_t>(L)));
    const auto rows = embedder.embed_sequence(seq, PipelineMode::Advanced).rows();
    ok = ok && rows == 56 + 10 * L && channel_count(PipelineMode::Advanced, static_cast<std::size_t>(L)) == rows;
    detail += fmt("|L|=%d -> %ld, ", L, static_cast<long>(rows));
  }
  const auto basic = basic_channels(seq).rows();
  ok = ok && basic == 56 && channel_count(PipelineMode::Basic, 17) == 56;
  return {ok, detail + fmt("basic -> %ld", static_cast<long>(basic))};
}

// ---------------------------------------------------------------- A11

Outcome a11() {
  BenchConfig cfg;
  cfg.actions = 17;
  cfg.prototypes = 64;
  cfg.frames = 60;
  cfg.min_seconds = 1.0;
  cfg.classifier.conv_blocks = {{64, 8}, {128, 5}, {64, 3}};
  const auto r = run_bench(cfg);
  return {r.embed_frames_per_second >= kA11MinFps,
          fmt("%.0f frames/s (%d channels), clip latency %.1f ms", r.embed_frames_per_second, r.channels,
              1e3 * r.clip_latency_seconds)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},  {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}};
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : checks) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%-4s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

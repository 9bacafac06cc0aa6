#include "posehar/embed.hpp"

#include <cmath>
#include <limits>

namespace posehar {

std::string_view to_string(PipelineMode mode) noexcept {
  switch (mode) {
    case PipelineMode::Basic: return "basic";
    case PipelineMode::Advanced: return "advanced";
    case PipelineMode::Baseline: return "baseline";
  }
  return "advanced";
}

PipelineMode parse_mode(std::string_view name) {
  if (name == "basic") return PipelineMode::Basic;
  if (name == "advanced") return PipelineMode::Advanced;
  if (name == "baseline") return PipelineMode::Baseline;
  throw Error(Errc::InvalidConfig, "unknown mode '" + std::string(name) + "'");
}

int channel_count(PipelineMode mode, std::size_t n_actions) noexcept {
  switch (mode) {
    case PipelineMode::Baseline: return kPoseChannels;
    case PipelineMode::Basic: return 2 * kPoseChannels;
    case PipelineMode::Advanced: return 2 * kPoseChannels + 10 * static_cast<int>(n_actions);
  }
  return 0;
}

std::vector<std::string> channel_names(PipelineMode mode, const std::vector<std::string>& actions) {
  std::vector<std::string> names;
  auto coords = [&](const char* prefix) {
    for (int j = 1; j <= kNumLandmarks; ++j) {
      names.push_back(std::string(prefix) + "/" + std::to_string(j) + "/x");
      names.push_back(std::string(prefix) + "/" + std::to_string(j) + "/y");
    }
  };
  coords("pose");
  if (mode == PipelineMode::Baseline) return names;
  coords("delta");
  if (mode == PipelineMode::Basic) return names;
  for (const char* kind : {"spatial", "temporal"})
    for (const auto& a : actions)
      for (LandmarkSubset s : kAllSubsets) names.push_back(std::string(kind) + "/" + a + "/" + std::string(to_string(s)));
  return names;
}

double subset_distance(const Pose::Coords& coords, const Prototype& proto, LandmarkSubset subset,
                       const LandmarkSet& missing) {
  const Pose::Coords ref = reroll(proto.full);
  double sum = 0.0;
  int count = 0;
  for (int j : landmarks_of(subset)) {
    if (missing.contains(LandmarkId{j})) continue;
    const double dx = coords(0, j - 1) - ref(0, j - 1);
    const double dy = coords(1, j - 1) - ref(1, j - 1);
    sum += std::sqrt(dx * dx + dy * dy);
    ++count;
  }
  if (count == 0) throw Error(Errc::EmptySubset, "every landmark of the subset is missing");
  return sum / count;
}

namespace {

// Membership masks of the five subsets over slots 0..13.
constexpr std::array<unsigned, 5> kSubsetMasks = {0x3FFFu, 0x1Cu, 0xE0u, 0x700u, 0x3800u};

// Minimum over the columns of `protos` (28 x P, interleaved x/y) of the averaged
// subset distance. Summation runs over ascending landmark index, matching subset_distance.
SubsetDistances min_distances(const Pose::Coords& coords, unsigned missing_bits, const Eigen::MatrixXd& protos) {
  std::array<int, 5> counts{};
  for (std::size_t s = 0; s < 5; ++s) counts[s] = __builtin_popcount(kSubsetMasks[s] & ~missing_bits);

  SubsetDistances best;
  best.fill(std::numeric_limits<double>::infinity());
  std::array<double, kNumLandmarks> d{};
  for (Eigen::Index p = 0; p < protos.cols(); ++p) {
    const double* ref = protos.col(p).data();
    for (int k = 0; k < kNumLandmarks; ++k) {
      const double dx = coords(0, k) - ref[2 * k];
      const double dy = coords(1, k) - ref[2 * k + 1];
      d[static_cast<std::size_t>(k)] = std::sqrt(dx * dx + dy * dy);
    }
    for (std::size_t s = 0; s < 5; ++s) {
      if (counts[s] == 0) continue;
      const unsigned mask = kSubsetMasks[s] & ~missing_bits;
      double sum = 0.0;
      for (int k = 0; k < kNumLandmarks; ++k)
        if ((mask >> k) & 1u) sum += d[static_cast<std::size_t>(k)];
      const double v = sum / counts[s];
      if (v < best[s]) best[s] = v;
    }
  }
  for (std::size_t s = 0; s < 5; ++s)
    if (counts[s] == 0) best[s] = kEmptySubsetDistance;
  return best;
}

Eigen::MatrixXd flatten(const PoseLibrary& lib) {
  Eigen::MatrixXd out(kPoseChannels, static_cast<Eigen::Index>(lib.prototypes.size()));
  for (std::size_t p = 0; p < lib.prototypes.size(); ++p) {
    const Pose::Coords c = reroll(lib.prototypes[p].full);
    out.col(static_cast<Eigen::Index>(p)) = Eigen::Map<const Eigen::VectorXd>(c.data(), kPoseChannels);
  }
  return out;
}

}  // namespace

SubsetDistances embed_frame(const Pose::Coords& coords, const PoseLibrary& lib, const LandmarkSet& missing) {
  if (lib.prototypes.empty()) throw Error(Errc::MissingLibrary, "library for '" + lib.action + "' is empty");
  return min_distances(coords, missing.bits(), flatten(lib));
}

Embedder::Embedder(const ModelBundle& bundle) : actions_(bundle.actions) {
  for (const auto& a : actions_) {
    for (const auto* libs : {&bundle.spatial, &bundle.temporal}) {
      const auto it = libs->find(a);
      if (it == libs->end() || it->second.prototypes.empty())
        throw Error(Errc::MissingLibrary, "no " + std::string(libs == &bundle.spatial ? "spatial" : "temporal") +
                                              " library for action '" + a + "'");
      (libs == &bundle.spatial ? spatial_ : temporal_).push_back(flatten(it->second));
    }
  }
}

SubsetDistances Embedder::embed_frame(const Pose::Coords& coords, const LandmarkSet& missing, LibraryKind kind,
                                      std::size_t action) const {
  const auto& protos = kind == LibraryKind::Spatial ? spatial_.at(action) : temporal_.at(action);
  return min_distances(coords, missing.bits(), protos);
}

namespace {

void write_coords(Eigen::MatrixXd& out, Eigen::Index row0, Eigen::Index t, const Pose::Coords& c,
                  const LandmarkSet& missing) {
  for (int k = 0; k < kNumLandmarks; ++k) {
    const bool gone = missing.contains(LandmarkId{k + 1});
    out(row0 + 2 * k, t) = gone ? kMissingCoordinate : c(0, k);
    out(row0 + 2 * k + 1, t) = gone ? kMissingCoordinate : c(1, k);
  }
}

// Displacement index feeding output column t (front padding repeats the first one).
std::size_t displacement_at(Eigen::Index t) { return t == 0 ? 0 : static_cast<std::size_t>(t - 1); }

}  // namespace

Eigen::MatrixXd basic_channels(const NormalizedSequence& seq) {
  const auto T = static_cast<Eigen::Index>(seq.poses.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * kPoseChannels, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    write_coords(out, 0, t, seq.poses[static_cast<std::size_t>(t)].coords(), seq.persistent_missing);
    if (!seq.derivatives.empty())
      write_coords(out, kPoseChannels, t, seq.derivatives[displacement_at(t)], seq.persistent_missing);
    else
      write_coords(out, kPoseChannels, t, Pose::Coords::Zero(), seq.persistent_missing);
  }
  return out;
}

Eigen::MatrixXd Embedder::embed_sequence(const NormalizedSequence& seq, PipelineMode mode) const {
  if (mode == PipelineMode::Baseline)
    throw Error(Errc::InvalidConfig, "baseline channels are built from raw samples");
  Eigen::MatrixXd basic = basic_channels(seq);
  if (mode == PipelineMode::Basic) return basic;

  const auto T = basic.cols();
  const auto L = static_cast<Eigen::Index>(actions_.size());
  Eigen::MatrixXd out(channel_count(mode, actions_.size()), T);
  out.topRows(2 * kPoseChannels) = basic;
  const Eigen::Index spatial0 = 2 * kPoseChannels;
  const Eigen::Index temporal0 = spatial0 + 5 * L;

  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& pose = seq.poses[static_cast<std::size_t>(t)].coords();
    for (Eigen::Index a = 0; a < L; ++a) {
      const auto d = embed_frame(pose, seq.persistent_missing, LibraryKind::Spatial, static_cast<std::size_t>(a));
      for (Eigen::Index s = 0; s < 5; ++s) out(spatial0 + 5 * a + s, t) = d[static_cast<std::size_t>(s)];
    }
  }
  // Temporal channels exist for T-1 displacements; column 0 repeats column 1.
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index a = 0; a < L; ++a) {
      SubsetDistances d;
      if (seq.derivatives.empty()) {
        d = embed_frame(Pose::Coords::Zero(), seq.persistent_missing, LibraryKind::Temporal, static_cast<std::size_t>(a));
      } else if (t == 0) {
        continue;
      } else {
        d = embed_frame(seq.derivatives[displacement_at(t)], seq.persistent_missing, LibraryKind::Temporal,
                        static_cast<std::size_t>(a));
      }
      for (Eigen::Index s = 0; s < 5; ++s) out(temporal0 + 5 * a + s, t) = d[static_cast<std::size_t>(s)];
    }
  }
  if (!seq.derivatives.empty()) {
    if (T > 1)
      out.block(temporal0, 0, 5 * L, 1) = out.block(temporal0, 1, 5 * L, 1);
  }
  return out;
}

Eigen::MatrixXd baseline_channels(const Sample& sample) {
  const auto T = static_cast<Eigen::Index>(sample.poses.size());
  Eigen::MatrixXd out(kPoseChannels, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Pose& p = sample.poses[static_cast<std::size_t>(t)];
    for (int k = 0; k < kNumLandmarks; ++k) {
      const bool present = p.presence()[static_cast<std::size_t>(k)];
      out(2 * k, t) = present ? p.coords()(0, k) : kMissingCoordinate;
      out(2 * k + 1, t) = present ? p.coords()(1, k) : kMissingCoordinate;
    }
  }
  return out;
}

}  // namespace posehar

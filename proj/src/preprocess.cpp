#include "posehar/preprocess.hpp"

#include <cstdlib>

namespace posehar {

bool is_usable_frame(const Pose& pose) noexcept {
  return pose.present(kRoot) && missing_count(pose) <= kMaxMissingLandmarks;
}

namespace {

// Frame indices where landmark j is observed.
std::vector<std::size_t> observed_frames(const std::vector<Pose>& poses, LandmarkId j) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < poses.size(); ++t)
    if (poses[t].present(j)) out.push_back(t);
  return out;
}

// Fill each gap of track j from the nearest observed frame; ties go to the earlier frame.
void nearest_neighbour_fill(std::vector<Pose>& poses, LandmarkId j,
                            const std::vector<std::size_t>& observed) {
  std::size_t next = 0;  // first observed frame >= t
  for (std::size_t t = 0; t < poses.size(); ++t) {
    while (next < observed.size() && observed[next] < t) ++next;
    if (next < observed.size() && observed[next] == t) continue;

    std::size_t source;
    if (next == observed.size()) {
      source = observed.back();
    } else if (next == 0) {
      source = observed.front();
    } else {
      const std::size_t before = observed[next - 1];
      const std::size_t after = observed[next];
      source = (t - before <= after - t) ? before : after;
    }
    poses[t].set(j, poses[source].coords().col(j.slot()));
  }
}

}  // namespace

CleanSequence treat_missing(const Sample& sample) {
  CleanSequence out;
  out.poses.reserve(sample.poses.size());
  for (const Pose& p : sample.poses) {
    if (is_usable_frame(p))
      out.poses.push_back(p);
    else
      ++out.dropped_frames;
  }
  if (out.poses.empty())
    throw Error(Errc::EmptySequence, "no usable frame in sample (actor '" + sample.actor +
                                         "', action '" + sample.action + "')");

  LandmarkSet all_absent;
  for (int j = 1; j <= kNumLandmarks; ++j) {
    if (j == kRoot.index()) continue;
    const LandmarkId id{j};
    const auto observed = observed_frames(out.poses, id);
    if (observed.empty())
      all_absent.insert(id);
    else if (observed.size() < out.poses.size())
      nearest_neighbour_fill(out.poses, id, observed);
  }

  // The head has no mirror partner; limbs borrow the opposite side if it was observed.
  for (int j : all_absent.indices()) {
    const LandmarkId id{j};
    const LandmarkId partner = mirror(id);
    if (j == kHead.index() || all_absent.contains(partner)) {
      out.persistent_missing.insert(id);
      continue;
    }
    for (Pose& p : out.poses) p.set(id, p.coords().col(partner.slot()));
    out.mirrored.insert(id);
  }
  return out;
}

Pose center(const Pose& pose) {
  if (!pose.present(kRoot)) throw Error(Errc::AbsentRoot, "cannot center a pose without root");
  const Point2 root = pose.coords().col(kRoot.slot());
  Pose out = pose;
  for (int k = 0; k < kNumLandmarks; ++k)
    if (pose.presence()[k]) out.coords().col(k) -= root;
  return out;
}

Pose scale(const Pose& pose, LandmarkId hip) {
  if (!pose.present(hip))
    throw Error(Errc::AbsentHip, "scale reference landmark " + std::to_string(hip.index()) +
                                     " is absent");
  const double torso = link(pose, kRoot, hip).norm();
  if (!(torso > kDegenerateTorso))
    throw Error(Errc::DegenerateTorso, "root-hip link length " + std::to_string(torso));
  Pose out = pose;
  for (int k = 0; k < kNumLandmarks; ++k)
    if (pose.presence()[k]) out.coords().col(k) /= torso;
  return out;
}

LandmarkId scale_reference(const LandmarkSet& persistent_missing) {
  if (!persistent_missing.contains(kRightHip)) return kRightHip;
  if (!persistent_missing.contains(kLeftHip)) return kLeftHip;
  throw Error(Errc::AbsentHip, "both hips are persistently missing");
}

void recompute_derivatives(NormalizedSequence& seq) {
  seq.derivatives.clear();
  if (seq.poses.size() < 2) return;
  seq.derivatives.reserve(seq.poses.size() - 1);
  for (std::size_t t = 0; t + 1 < seq.poses.size(); ++t)
    seq.derivatives.push_back(seq.poses[t + 1].coords() - seq.poses[t].coords());
}

NormalizedSequence normalize(const CleanSequence& seq) {
  const LandmarkId hip = scale_reference(seq.persistent_missing);
  NormalizedSequence out;
  out.persistent_missing = seq.persistent_missing;
  out.poses.reserve(seq.poses.size());
  for (const Pose& p : seq.poses) {
    try {
      out.poses.push_back(scale(center(p), hip));
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateTorso) throw;
      ++out.degenerate_frames;
    }
  }
  if (out.poses.empty())
    throw Error(Errc::EmptySequence, "every frame has a degenerate torso");
  recompute_derivatives(out);
  return out;
}

LabeledSequence preprocess(const Sample& sample) {
  return LabeledSequence{normalize(treat_missing(sample)), sample.action, sample.viewpoint,
                         sample.actor, sample.dataset};
}

}  // namespace posehar

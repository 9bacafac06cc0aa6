#include "posehar/library.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "posehar/binary_io.hpp"
#include "posehar/random.hpp"

namespace posehar {

std::string_view to_string(LibraryKind kind) noexcept {
  return kind == LibraryKind::Spatial ? "spatial" : "temporal";
}

Eigen::MatrixXd feature_rows(const NormalizedSequence& seq, LibraryKind kind) {
  if (kind == LibraryKind::Spatial) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(seq.poses.size()), kFeatureDim);
    for (std::size_t t = 0; t < seq.poses.size(); ++t)
      rows.row(static_cast<Eigen::Index>(t)) = unroll(seq.poses[t].coords(), seq.persistent_missing).transpose();
    return rows;
  }
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(seq.derivatives.size()), kFeatureDim);
  for (std::size_t t = 0; t < seq.derivatives.size(); ++t)
    rows.row(static_cast<Eigen::Index>(t)) = unroll(seq.derivatives[t], seq.persistent_missing).transpose();
  return rows;
}

namespace {

Eigen::MatrixXd stack_rows(const std::vector<const LabeledSequence*>& seqs, LibraryKind kind) {
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index total = 0;
  for (const auto* s : seqs) {
    blocks.push_back(feature_rows(s->seq, kind));
    total += blocks.back().rows();
  }
  Eigen::MatrixXd out(total, kFeatureDim);
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

std::vector<std::string> sorted_actions(const std::vector<LabeledSequence>& train) {
  std::set<std::string> names;
  for (const auto& s : train) names.insert(s.action);
  return {names.begin(), names.end()};
}

}  // namespace

PrototypeSet build_prototypes(const Eigen::MatrixXd& full, const PcaModel& pca, const SomConfig& cfg,
                              Viewpoint viewpoint) {
  const Eigen::MatrixXd reduced = pca.project_rows(full);
  SomConfig som_cfg = cfg;
  som_cfg.m = pca.rank();
  const SomResult som = train_som(reduced, som_cfg);

  const int n_units = som_cfg.units();
  std::vector<int> counts(static_cast<std::size_t>(n_units), 0);
  Eigen::MatrixXd full_sum = Eigen::MatrixXd::Zero(n_units, full.cols());
  Eigen::MatrixXd reduced_sum = Eigen::MatrixXd::Zero(n_units, reduced.cols());
  for (Eigen::Index i = 0; i < full.rows(); ++i) {
    const int u = som.assignment[static_cast<std::size_t>(i)];
    ++counts[static_cast<std::size_t>(u)];
    full_sum.row(u) += full.row(i);
    reduced_sum.row(u) += reduced.row(i);
  }

  PrototypeSet out;
  std::vector<int> unit_to_proto(static_cast<std::size_t>(n_units), -1);
  for (int u = 0; u < n_units; ++u) {
    const int n = counts[static_cast<std::size_t>(u)];
    if (n == 0) continue;
    Prototype p;
    p.full = (full_sum.row(u) / n).transpose();
    p.reduced = (reduced_sum.row(u) / n).transpose();
    p.weight = n;
    p.viewpoint = viewpoint;
    unit_to_proto[static_cast<std::size_t>(u)] = static_cast<int>(out.prototypes.size());
    out.prototypes.push_back(std::move(p));
  }
  out.membership.reserve(som.assignment.size());
  for (int u : som.assignment) out.membership.push_back(unit_to_proto[static_cast<std::size_t>(u)]);
  return out;
}

LibraryMap build_library(const std::vector<LabeledSequence>& train, LibraryKind kind, const PcaModel& pca,
                         const SomConfig& cfg, std::vector<std::string>* warnings) {
  const auto actions = sorted_actions(train);
  LibraryMap out;
  for (std::size_t a = 0; a < actions.size(); ++a) {
    PoseLibrary lib;
    lib.action = actions[a];
    lib.kind = kind;
    for (Viewpoint w : kAllViewpoints) {
      std::vector<const LabeledSequence*> slice;
      for (const auto& s : train)
        if (s.action == actions[a] && s.viewpoint == w) slice.push_back(&s);
      if (slice.empty()) continue;
      const Eigen::MatrixXd rows = stack_rows(slice, kind);
      if (rows.rows() == 0) {
        if (warnings)
          warnings->push_back(std::string(to_string(Errc::EmptyActionViewpoint)) + ": no " +
                              std::string(to_string(kind)) + " frames for action '" + actions[a] +
                              "', viewpoint '" + std::string(to_string(w)) + "'");
        continue;
      }
      SomConfig cell_cfg = cfg;
      cell_cfg.seed = derive_seed(cfg.seed, 16 * a + 2 * static_cast<std::size_t>(w) +
                                                (kind == LibraryKind::Temporal ? 1 : 0));
      auto set = build_prototypes(rows, pca, cell_cfg, w);
      for (auto& p : set.prototypes) lib.prototypes.push_back(std::move(p));
    }
    out.emplace(actions[a], std::move(lib));
  }
  return out;
}

PcaModel fit_feature_pca(const std::vector<LabeledSequence>& train, LibraryKind kind, int rank) {
  std::vector<const LabeledSequence*> all;
  all.reserve(train.size());
  for (const auto& s : train) all.push_back(&s);
  return fit_pca(stack_rows(all, kind), rank);
}

ModelBundle fit_bundle(const std::vector<LabeledSequence>& train, int pca_rank, const SomConfig& cfg,
                       std::vector<std::string>* warnings) {
  ModelBundle b;
  b.actions = sorted_actions(train);
  b.pca_rank = pca_rank;
  b.som = cfg;
  b.som.m = pca_rank;
  b.spatial_pca = fit_feature_pca(train, LibraryKind::Spatial, pca_rank);
  b.temporal_pca = fit_feature_pca(train, LibraryKind::Temporal, pca_rank);
  b.spatial = build_library(train, LibraryKind::Spatial, b.spatial_pca, b.som, warnings);
  b.temporal = build_library(train, LibraryKind::Temporal, b.temporal_pca, b.som, warnings);
  return b;
}

// ---------------------------------------------------------------------------
// Bundle file. Layout is documented in docs/formats.md.

namespace {

constexpr char kBundleMagic[9] = "PXHBNDL\0";

void write_pca(std::ostream& out, const PcaModel& pca) {
  binio::write_matrix(out, pca.mean);
  binio::write_matrix(out, pca.components);
  binio::write_matrix(out, pca.eigenvalues);
  binio::write_f64(out, pca.total_variance);
}

PcaModel read_pca(std::istream& in) {
  PcaModel pca;
  pca.mean = binio::read_matrix(in);
  pca.components = binio::read_matrix(in);
  pca.eigenvalues = binio::read_matrix(in);
  pca.total_variance = binio::read_f64(in);
  if (pca.mean.size() != kFeatureDim || pca.components.rows() != kFeatureDim ||
      pca.eigenvalues.size() != pca.components.cols())
    throw Error(Errc::ParseError, "inconsistent PCA block in bundle");
  return pca;
}

void write_libraries(std::ostream& out, const LibraryMap& libs) {
  binio::write_u32(out, static_cast<std::uint32_t>(libs.size()));
  for (const auto& [action, lib] : libs) {
    binio::write_string(out, action);
    binio::write_u32(out, lib.kind == LibraryKind::Spatial ? 0u : 1u);
    binio::write_u32(out, static_cast<std::uint32_t>(lib.prototypes.size()));
    for (const auto& p : lib.prototypes) {
      binio::write_u32(out, static_cast<std::uint32_t>(p.viewpoint));
      binio::write_i32(out, p.weight);
      binio::write_matrix(out, p.reduced);
      binio::write_matrix(out, p.full);
    }
  }
}

LibraryMap read_libraries(std::istream& in) {
  LibraryMap libs;
  const auto n = binio::read_u32(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    PoseLibrary lib;
    lib.action = binio::read_string(in);
    lib.kind = binio::read_u32(in) == 0 ? LibraryKind::Spatial : LibraryKind::Temporal;
    const auto count = binio::read_u32(in);
    for (std::uint32_t k = 0; k < count; ++k) {
      Prototype p;
      const auto w = binio::read_u32(in);
      if (w >= kAllViewpoints.size()) throw Error(Errc::ParseError, "bad viewpoint code in bundle");
      p.viewpoint = kAllViewpoints[w];
      p.weight = binio::read_i32(in);
      p.reduced = binio::read_matrix(in);
      const Eigen::MatrixXd full = binio::read_matrix(in);
      if (full.size() != kFeatureDim) throw Error(Errc::ParseError, "bad prototype dimension in bundle");
      p.full = Eigen::Map<const FeatureVector>(full.data());
      lib.prototypes.push_back(std::move(p));
    }
    libs.emplace(lib.action, std::move(lib));
  }
  return libs;
}

}  // namespace

void save_bundle(const ModelBundle& b, std::ostream& out) {
  binio::write_bytes(out, kBundleMagic, 8);
  binio::write_u32(out, ModelBundle::kVersion);
  binio::write_string(out, b.config_echo);
  binio::write_u32(out, static_cast<std::uint32_t>(b.actions.size()));
  for (const auto& a : b.actions) binio::write_string(out, a);
  binio::write_i32(out, b.pca_rank);
  binio::write_i32(out, b.som.q);
  binio::write_i32(out, b.som.m);
  binio::write_i32(out, b.som.epochs);
  binio::write_f64(out, b.som.lr0);
  binio::write_f64(out, b.som.radius0);
  binio::write_u32(out, b.som.init == SomInit::Linear ? 0u : 1u);
  binio::write_u64(out, b.som.seed);
  write_pca(out, b.spatial_pca);
  write_pca(out, b.temporal_pca);
  write_libraries(out, b.spatial);
  write_libraries(out, b.temporal);
  if (!out) throw Error(Errc::IoError, "failed writing bundle");
}

ModelBundle load_bundle(std::istream& in) {
  binio::expect_magic(in, kBundleMagic);
  const auto version = binio::read_u32(in);
  if (version != ModelBundle::kVersion)
    throw Error(Errc::ParseError, "unsupported bundle version " + std::to_string(version));
  ModelBundle b;
  b.config_echo = binio::read_string(in);
  const auto n_actions = binio::read_u32(in);
  for (std::uint32_t i = 0; i < n_actions; ++i) b.actions.push_back(binio::read_string(in));
  b.pca_rank = binio::read_i32(in);
  b.som.q = binio::read_i32(in);
  b.som.m = binio::read_i32(in);
  b.som.epochs = binio::read_i32(in);
  b.som.lr0 = binio::read_f64(in);
  b.som.radius0 = binio::read_f64(in);
  b.som.init = binio::read_u32(in) == 0 ? SomInit::Linear : SomInit::Random;
  b.som.seed = binio::read_u64(in);
  b.spatial_pca = read_pca(in);
  b.temporal_pca = read_pca(in);
  b.spatial = read_libraries(in);
  b.temporal = read_libraries(in);
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path + "' for writing");
  save_bundle(bundle, out);
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
  return load_bundle(in);
}

}  // namespace posehar

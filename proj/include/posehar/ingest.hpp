#pragma once

// Reading pose-detector exports (18 COCO body keypoints per person per frame) and the
// internal line-based sequence format, plus the JSON dataset manifest.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "posehar/preprocess.hpp"

namespace posehar {

inline constexpr int kDetectorKeypoints = 18;

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
};

/// One detected person in one frame, keypoints in detector order
/// (nose, neck, r-shoulder, r-elbow, r-wrist, l-shoulder, l-elbow, l-wrist, r-hip,
/// r-knee, r-ankle, l-hip, l-knee, l-ankle, r-eye, l-eye, r-ear, l-ear).
struct RawDetectionFrame {
  std::vector<Keypoint> keypoints;
  int frame_index = 0;
};

/// Facial keypoints (nose, eyes, ears) above `threshold` are averaged into the head;
/// keypoints 1..13 map to landmarks 2..14. Throws MalformedFrame unless there are 18.
Pose merge_head(const RawDetectionFrame& frame, double threshold = 0.0);

/// Every person of one detector JSON record ({"people":[{"pose_keypoints_2d":[...]}]}).
/// Throws ParseError.
std::vector<RawDetectionFrame> parse_detector_record(std::string_view json_text, int frame_index = 0);

/// Picks one person per frame: the first non-empty frame takes the highest total
/// confidence, later frames the person whose root is nearest the previous root.
/// Frames without people become all-absent poses.
std::vector<Pose> track_single_person(const std::vector<std::vector<RawDetectionFrame>>& frames,
                                      double threshold = 0.0);

/// Reads a directory of per-frame detector records, in lexicographic file order.
std::vector<Pose> load_detector_directory(const std::filesystem::path& dir, double threshold = 0.0);

/// Internal sequence format (see docs/formats.md).
void write_sample(std::ostream& out, const Sample& sample);
Sample read_sample(std::istream& in, const std::string& source = "<stream>");
void save_sample(const Sample& sample, const std::filesystem::path& path);
Sample load_sample(const std::filesystem::path& path);

/// Normalized sequence format; derivatives are recomputed on reading.
void write_normalized(std::ostream& out, const LabeledSequence& seq);
LabeledSequence read_normalized(std::istream& in, const std::string& source = "<stream>");
void save_normalized(const LabeledSequence& seq, const std::filesystem::path& path);
LabeledSequence load_normalized(const std::filesystem::path& path);

/// Labelled multivariate series, stored channel-major with channel names.
struct SeriesRecord {
  std::string action;
  Viewpoint viewpoint = Viewpoint::Front;
  std::string actor;
  std::string dataset;
  std::string mode;
  std::vector<std::string> channel_names;
  /// channels x T
  Eigen::MatrixXd values;
};

void write_series(std::ostream& out, const SeriesRecord& rec);
SeriesRecord read_series(std::istream& in, const std::string& source = "<stream>");
void save_series(const SeriesRecord& rec, const std::filesystem::path& path);
SeriesRecord load_series(const std::filesystem::path& path);

/// Files with the given extension directly inside `dir`, sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, std::string_view extension);

enum class EntryFormat { Internal, Detector };

struct ManifestEntry {
  /// Relative paths resolve against the manifest's directory.
  std::string path;
  std::string action;
  Viewpoint viewpoint = Viewpoint::Front;
  std::string actor;
  std::string dataset;
  EntryFormat format = EntryFormat::Internal;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  /// Declared action vocabulary; entries must use these labels.
  std::vector<std::string> actions;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  /// Throws UnknownLabel for undeclared actions and ParseError for duplicate paths.
  void validate() const;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// One Sample per entry, labels taken from the manifest.
std::vector<Sample> load_dataset(const DatasetManifest& manifest, double threshold = 0.0);

}  // namespace posehar

#include "posehar/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "posehar/error.hpp"

namespace posehar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr std::array<int, 5> kFacialKeypoints = {0, 14, 15, 16, 17};
constexpr char kSequenceMagic[] = "POSEHAR-SEQ";
constexpr int kSequenceVersion = 1;
constexpr int kManifestVersion = 1;
}  // namespace

Pose merge_head(const RawDetectionFrame& frame, double threshold) {
  if (frame.keypoints.size() != static_cast<std::size_t>(kDetectorKeypoints))
    throw Error(Errc::MalformedFrame, "frame " + std::to_string(frame.frame_index) + " has " +
                                          std::to_string(frame.keypoints.size()) + " keypoints, expected 18");
  Pose pose;
  double sx = 0.0, sy = 0.0;
  int n = 0;
  for (int k : kFacialKeypoints) {
    const auto& kp = frame.keypoints[static_cast<std::size_t>(k)];
    if (kp.confidence > threshold) {
      sx += kp.x;
      sy += kp.y;
      ++n;
    }
  }
  if (n > 0) pose.set(kHead, sx / n, sy / n);
  for (int k = 1; k <= 13; ++k) {
    const auto& kp = frame.keypoints[static_cast<std::size_t>(k)];
    if (kp.confidence > threshold) pose.set(LandmarkId{k + 1}, kp.x, kp.y);
  }
  return pose;
}

std::vector<RawDetectionFrame> parse_detector_record(std::string_view json_text, int frame_index) {
  const std::string where = "frame " + std::to_string(frame_index);
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, where + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("people") || !doc["people"].is_array())
    throw Error(Errc::ParseError, where + ": missing 'people' array");
  std::vector<RawDetectionFrame> people;
  for (const auto& person : doc["people"]) {
    const auto it = person.find("pose_keypoints_2d");
    if (it == person.end() || !it->is_array())
      throw Error(Errc::ParseError, where + ": person without 'pose_keypoints_2d'");
    if (it->size() % 3 != 0) throw Error(Errc::ParseError, where + ": keypoint list length is not a multiple of 3");
    RawDetectionFrame f;
    f.frame_index = frame_index;
    for (std::size_t i = 0; i < it->size(); i += 3) {
      Keypoint kp;
      try {
        kp.x = (*it)[i].get<double>();
        kp.y = (*it)[i + 1].get<double>();
        kp.confidence = (*it)[i + 2].get<double>();
      } catch (const json::exception& e) {
        throw Error(Errc::ParseError, where + ": non-numeric keypoint value");
      }
      f.keypoints.push_back(kp);
    }
    people.push_back(std::move(f));
  }
  return people;
}

std::vector<Pose> track_single_person(const std::vector<std::vector<RawDetectionFrame>>& frames, double threshold) {
  std::vector<Pose> out;
  out.reserve(frames.size());
  bool have_prev = false;
  Point2 prev_root = Point2::Zero();
  for (const auto& people : frames) {
    if (people.empty()) {
      out.emplace_back();
      continue;
    }
    std::vector<Pose> poses;
    std::vector<double> confidence;
    for (const auto& p : people) {
      poses.push_back(merge_head(p, threshold));
      double c = 0.0;
      for (const auto& kp : p.keypoints) c += kp.confidence;
      confidence.push_back(c);
    }
    std::size_t pick = 0;
    bool by_distance = false;
    if (have_prev) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < poses.size(); ++i) {
        if (!poses[i].present(kRoot)) continue;
        const double d = (poses[i].at(kRoot) - prev_root).squaredNorm();
        if (d < best) {
          best = d;
          pick = i;
          by_distance = true;
        }
      }
    }
    if (!by_distance)
      pick = static_cast<std::size_t>(std::max_element(confidence.begin(), confidence.end()) - confidence.begin());
    if (poses[pick].present(kRoot)) {
      prev_root = poses[pick].at(kRoot);
      have_prev = true;
    }
    out.push_back(poses[pick]);
  }
  return out;
}

std::vector<Pose> load_detector_directory(const fs::path& dir, double threshold) {
  const auto files = list_files(dir, ".json");
  std::vector<std::vector<RawDetectionFrame>> frames;
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::ifstream in(files[i]);
    if (!in) throw Error(Errc::IoError, "cannot open '" + files[i].string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      frames.push_back(parse_detector_record(buf.str(), static_cast<int>(i)));
    } catch (const Error& e) {
      throw Error(e.code(), files[i].string() + ": " + e.what());
    }
  }
  try {
    return track_single_person(frames, threshold);
  } catch (const Error& e) {
    throw Error(e.code(), dir.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Line-based record formats.

namespace {

constexpr char kNormalizedMagic[] = "POSEHAR-NORM";
constexpr char kSeriesMagic[] = "POSEHAR-SERIES";

void check_token(const std::string& value, const char* field) {
  if (value.empty()) throw Error(Errc::InvalidConfig, std::string(field) + " must not be empty");
  for (char c : value)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
      throw Error(Errc::InvalidConfig, std::string(field) + " '" + value + "' contains whitespace");
}

void append_double(std::string& line, double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  line.append(buf, r.ptr);
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t j = line.find(' ', i);
    const std::size_t end = j == std::string_view::npos ? line.size() : j;
    if (end > i) out.push_back(line.substr(i, end - i));
    i = end;
  }
  return out;
}

class LineReader {
public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  const std::string& next(const char* what) {
    if (!std::getline(in_, line_)) fail(std::string("expected ") + what, line_no_ + 1);
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    return line_;
  }

  std::string field(const char* key) {
    const std::string& l = next(key);
    const std::string prefix = std::string(key) + " ";
    if (l.rfind(prefix, 0) != 0 || l.size() == prefix.size()) fail(std::string("expected '") + key + " <value>'");
    return l.substr(prefix.size());
  }

  void header(const char* magic, int version) {
    if (next("header") != std::string(magic) + " " + std::to_string(version))
      fail("not a " + std::string(magic) + " version " + std::to_string(version) + " file");
  }

  Viewpoint viewpoint() {
    const std::string v = field("viewpoint");
    try {
      return parse_viewpoint(v);
    } catch (const Error& e) {
      throw Error(Errc::UnknownLabel, where() + ": " + e.what());
    }
  }

  std::size_t count(const char* key) {
    const std::string v = field(key);
    std::size_t n = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), n);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) fail(std::string("bad ") + key);
    return n;
  }

  double number(std::string_view tok, const std::string& context) const {
    double v = 0.0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
      throw Error(Errc::ParseError, context + ": bad number '" + std::string(tok) + "'");
    return v;
  }

  std::string where() const { return source_ + ":" + std::to_string(line_no_); }
  std::string frame_where(std::size_t t) const {
    return source_ + ": frame " + std::to_string(t) + " (line " + std::to_string(line_no_) + ")";
  }

  [[noreturn]] void fail(const std::string& msg, int line = -1) const {
    throw Error(Errc::ParseError, source_ + ":" + std::to_string(line < 0 ? line_no_ : line) + ": " + msg);
  }

private:
  std::istream& in_;
  std::string source_;
  std::string line_;
  int line_no_ = 0;
};

void write_pose_line(std::string& line, const Pose& pose) {
  line.clear();
  for (int k = 0; k < kNumLandmarks; ++k) {
    if (k > 0) line += ' ';
    const bool present = pose.presence()[static_cast<std::size_t>(k)];
    append_double(line, present ? pose.coords()(0, k) : 0.0);
    line += ' ';
    append_double(line, present ? pose.coords()(1, k) : 0.0);
    line += present ? " 1" : " 0";
  }
  line += '\n';
}

Pose read_pose_line(LineReader& r, std::size_t t) {
  const std::string& l = r.next("frame record");
  const std::string where = r.frame_where(t);
  const auto tok = split_spaces(l);
  if (tok.size() != 3 * kNumLandmarks)
    throw Error(Errc::ParseError, where + ": expected 42 fields, got " + std::to_string(tok.size()));
  Pose p;
  for (int k = 0; k < kNumLandmarks; ++k) {
    const auto flag = tok[static_cast<std::size_t>(3 * k + 2)];
    if (flag != "0" && flag != "1") throw Error(Errc::ParseError, where + ": presence flag must be 0 or 1");
    const double x = r.number(tok[static_cast<std::size_t>(3 * k)], where);
    const double y = r.number(tok[static_cast<std::size_t>(3 * k + 1)], where);
    if (flag == "1") p.set(LandmarkId{k + 1}, x, y);
  }
  return p;
}

template <typename T>
void write_labels(std::ostream& out, const T& rec) {
  check_token(rec.action, "action");
  check_token(rec.actor, "actor");
  check_token(rec.dataset, "dataset");
  out << "action " << rec.action << '\n'
      << "viewpoint " << to_string(rec.viewpoint) << '\n'
      << "actor " << rec.actor << '\n'
      << "dataset " << rec.dataset << '\n';
}

template <typename T>
void read_labels(LineReader& r, T& rec) {
  rec.action = r.field("action");
  rec.viewpoint = r.viewpoint();
  rec.actor = r.field("actor");
  rec.dataset = r.field("dataset");
}

template <typename T, typename Writer>
void save_with(const T& value, const fs::path& path, Writer write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  write(out, value);
  if (!out) throw Error(Errc::IoError, "failed writing '" + path.string() + "'");
}

template <typename Reader>
auto load_with(const fs::path& path, Reader read) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  return read(in, path.string());
}

}  // namespace

void write_sample(std::ostream& out, const Sample& sample) {
  out << kSequenceMagic << ' ' << kSequenceVersion << '\n';
  write_labels(out, sample);
  out << "frames " << sample.poses.size() << '\n';
  std::string line;
  for (const auto& pose : sample.poses) {
    write_pose_line(line, pose);
    out << line;
  }
}

Sample read_sample(std::istream& in, const std::string& source) {
  LineReader r(in, source);
  r.header(kSequenceMagic, kSequenceVersion);
  Sample s;
  read_labels(r, s);
  const std::size_t n = r.count("frames");
  s.poses.reserve(n);
  for (std::size_t t = 0; t < n; ++t) s.poses.push_back(read_pose_line(r, t));
  return s;
}

void save_sample(const Sample& sample, const fs::path& path) {
  save_with(sample, path, [](std::ostream& o, const Sample& s) { write_sample(o, s); });
}

Sample load_sample(const fs::path& path) {
  return load_with(path, [](std::istream& i, const std::string& src) { return read_sample(i, src); });
}

void write_normalized(std::ostream& out, const LabeledSequence& seq) {
  out << kNormalizedMagic << ' ' << kSequenceVersion << '\n';
  write_labels(out, seq);
  out << "missing";
  if (seq.seq.persistent_missing.empty()) out << " -";
  for (int j : seq.seq.persistent_missing.indices()) out << ' ' << j;
  out << '\n' << "degenerate " << seq.seq.degenerate_frames << '\n' << "frames " << seq.seq.poses.size() << '\n';
  std::string line;
  for (const auto& pose : seq.seq.poses) {
    write_pose_line(line, pose);
    out << line;
  }
}

LabeledSequence read_normalized(std::istream& in, const std::string& source) {
  LineReader r(in, source);
  r.header(kNormalizedMagic, kSequenceVersion);
  LabeledSequence s;
  read_labels(r, s);
  const std::string missing = r.field("missing");
  if (missing != "-") {
    for (auto tok : split_spaces(missing)) {
      int j = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), j);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || j < 1 || j > kNumLandmarks)
        r.fail("bad landmark index '" + std::string(tok) + "'");
      s.seq.persistent_missing.insert(LandmarkId{j});
    }
  }
  s.seq.degenerate_frames = r.count("degenerate");
  const std::size_t n = r.count("frames");
  for (std::size_t t = 0; t < n; ++t) s.seq.poses.push_back(read_pose_line(r, t));
  recompute_derivatives(s.seq);
  return s;
}

void save_normalized(const LabeledSequence& seq, const fs::path& path) {
  save_with(seq, path, [](std::ostream& o, const LabeledSequence& s) { write_normalized(o, s); });
}

LabeledSequence load_normalized(const fs::path& path) {
  return load_with(path, [](std::istream& i, const std::string& src) { return read_normalized(i, src); });
}

void write_series(std::ostream& out, const SeriesRecord& rec) {
  if (static_cast<Eigen::Index>(rec.channel_names.size()) != rec.values.rows())
    throw Error(Errc::ShapeMismatch, "channel name count does not match the series");
  out << kSeriesMagic << ' ' << kSequenceVersion << '\n';
  write_labels(out, rec);
  check_token(rec.mode, "mode");
  out << "mode " << rec.mode << '\n' << "channels " << rec.values.rows() << '\n' << "length " << rec.values.cols() << '\n';
  out << "names";
  for (const auto& n : rec.channel_names) {
    check_token(n, "channel name");
    out << ' ' << n;
  }
  out << '\n';
  std::string line;
  for (Eigen::Index c = 0; c < rec.values.rows(); ++c) {
    line.clear();
    for (Eigen::Index t = 0; t < rec.values.cols(); ++t) {
      if (t > 0) line += ' ';
      append_double(line, rec.values(c, t));
    }
    line += '\n';
    out << line;
  }
}

SeriesRecord read_series(std::istream& in, const std::string& source) {
  LineReader r(in, source);
  r.header(kSeriesMagic, kSequenceVersion);
  SeriesRecord rec;
  read_labels(r, rec);
  rec.mode = r.field("mode");
  const std::size_t C = r.count("channels");
  const std::size_t T = r.count("length");
  const std::string names = r.field("names");
  for (auto tok : split_spaces(names)) rec.channel_names.emplace_back(tok);
  if (rec.channel_names.size() != C) r.fail("expected " + std::to_string(C) + " channel names");
  rec.values.resize(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(T));
  for (std::size_t c = 0; c < C; ++c) {
    const auto tok = split_spaces(r.next("channel values"));
    if (tok.size() != T) r.fail("channel " + std::to_string(c) + ": expected " + std::to_string(T) + " values");
    for (std::size_t t = 0; t < T; ++t)
      rec.values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = r.number(tok[t], r.where());
  }
  return rec;
}

void save_series(const SeriesRecord& rec, const fs::path& path) {
  save_with(rec, path, [](std::ostream& o, const SeriesRecord& s) { write_series(o, s); });
}

SeriesRecord load_series(const fs::path& path) {
  return load_with(path, [](std::istream& i, const std::string& src) { return read_series(i, src); });
}

std::vector<fs::path> list_files(const fs::path& dir, std::string_view extension) {
  if (!fs::is_directory(dir)) throw Error(Errc::IoError, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == extension) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------
// Manifest.

void DatasetManifest::validate() const {
  const std::set<std::string> declared(actions.begin(), actions.end());
  std::set<std::string> paths;
  for (const auto& e : entries) {
    if (!declared.count(e.action)) throw Error(Errc::UnknownLabel, "entry '" + e.path + "': undeclared action '" + e.action + "'");
    if (!paths.insert(e.path).second) throw Error(Errc::ParseError, "duplicate manifest path '" + e.path + "'");
  }
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open manifest '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.base_dir = path.parent_path();
  try {
    if (doc.value("version", 0) != kManifestVersion)
      throw Error(Errc::ParseError, path.string() + ": unsupported manifest version");
    m.actions = doc.at("actions").get<std::vector<std::string>>();
    const auto& entries = doc.at("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& j = entries[i];
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.action = j.at("action").get<std::string>();
      const std::string view = j.at("viewpoint").get<std::string>();
      try {
        e.viewpoint = parse_viewpoint(view);
      } catch (const Error& err) {
        throw Error(Errc::UnknownLabel, path.string() + ": entry " + std::to_string(i) + ": " + err.what());
      }
      e.actor = j.at("actor").get<std::string>();
      e.dataset = j.value("dataset", std::string("default"));
      const std::string fmt = j.value("format", std::string("internal"));
      if (fmt == "internal")
        e.format = EntryFormat::Internal;
      else if (fmt == "detector")
        e.format = EntryFormat::Detector;
      else
        throw Error(Errc::ParseError, path.string() + ": entry " + std::to_string(i) + ": unknown format '" + fmt + "'");
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  json doc;
  doc["version"] = kManifestVersion;
  doc["actions"] = manifest.actions;
  doc["entries"] = json::array();
  for (const auto& e : manifest.entries) {
    doc["entries"].push_back({{"path", e.path},
                              {"action", e.action},
                              {"viewpoint", std::string(to_string(e.viewpoint))},
                              {"actor", e.actor},
                              {"dataset", e.dataset},
                              {"format", e.format == EntryFormat::Internal ? "internal" : "detector"}});
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
}

std::vector<Sample> load_dataset(const DatasetManifest& manifest, double threshold) {
  manifest.validate();
  std::vector<Sample> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : manifest.base_dir / e.path;
    Sample s;
    if (e.format == EntryFormat::Internal) {
      s = load_sample(p);
    } else {
      s.poses = load_detector_directory(p, threshold);
    }
    s.action = e.action;
    s.viewpoint = e.viewpoint;
    s.actor = e.actor;
    s.dataset = e.dataset;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace posehar

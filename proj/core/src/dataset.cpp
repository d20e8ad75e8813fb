#include "egoexo/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "egoexo/error.hpp"
#include "json.hpp"

namespace egoexo {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array kRealVocabulary{Action::walking, Action::jogging,  Action::running, Action::waving,
                                     Action::boxing,  Action::clapping, Action::jumping, Action::push_ups};
constexpr std::array kSyntheticVocabulary{Action::walking, Action::running, Action::crouching, Action::strafing,
                                          Action::jumping};

constexpr std::array kActionNames{
    std::pair{Action::walking, "walking"},     std::pair{Action::jogging, "jogging"},
    std::pair{Action::running, "running"},     std::pair{Action::waving, "waving"},
    std::pair{Action::boxing, "boxing"},       std::pair{Action::clapping, "clapping"},
    std::pair{Action::jumping, "jumping"},     std::pair{Action::push_ups, "push-ups"},
    std::pair{Action::crouching, "crouching"}, std::pair{Action::strafing, "strafing"},
};

std::string frame_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d.png", t);
  return buf;
}

}  // namespace

std::string_view to_string(View v) {
  switch (v) {
    case View::ego: return "ego";
    case View::exo_side: return "exo_side";
    case View::exo_top: return "exo_top";
  }
  return "?";
}

std::string_view to_string(Modality m) { return m == Modality::real ? "real" : "synthetic"; }
std::string_view to_string(ExoKind k) { return k == ExoKind::side ? "side" : "top"; }

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::string_view to_string(Action a) {
  for (auto [act, name] : kActionNames) {
    if (act == a) return name;
  }
  return "?";
}

Modality parse_modality(std::string_view s) {
  if (s == "real") return Modality::real;
  if (s == "synthetic") return Modality::synthetic;
  fail(ErrorKind::SchemaError, "unknown modality '" + std::string(s) + "'");
}

ExoKind parse_exo_kind(std::string_view s) {
  if (s == "side") return ExoKind::side;
  if (s == "top") return ExoKind::top;
  fail(ErrorKind::SchemaError, "unknown exo kind '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  fail(ErrorKind::SchemaError, "unknown split '" + std::string(s) + "'");
}

Action parse_action(std::string_view s) {
  for (auto [act, name] : kActionNames) {
    if (s == name) return act;
  }
  fail(ErrorKind::SchemaError, "unknown action label '" + std::string(s) + "'");
}

View exo_view(ExoKind kind) { return kind == ExoKind::side ? View::exo_side : View::exo_top; }

std::span<const Action> vocabulary(Modality m) {
  if (m == Modality::real) return kRealVocabulary;
  return kSyntheticVocabulary;
}

bool in_vocabulary(Modality m, Action a) {
  const auto v = vocabulary(m);
  return std::find(v.begin(), v.end(), a) != v.end();
}

int class_index(Modality m, Action a) {
  const auto v = vocabulary(m);
  const auto it = std::find(v.begin(), v.end(), a);
  if (it == v.end()) fail(ErrorKind::SchemaError, std::string(to_string(a)) + " outside vocabulary");
  return static_cast<int>(it - v.begin());
}

fs::path PairedSequence::ego_frame_path(int t) const { return ego_dir / frame_name(t); }
fs::path PairedSequence::exo_frame_path(int t) const { return exo_dir / frame_name(t); }

void PairedSequence::validate() const {
  if (ego_frames.size() != exo_frames.size()) {
    fail(ErrorKind::AlignmentError, "sequence " + id + ": " + std::to_string(ego_frames.size()) + " ego vs " +
                                        std::to_string(exo_frames.size()) + " exo frames");
  }
  const View exo = exo_view(exo_kind);
  for (std::size_t i = 0; i < ego_frames.size(); ++i) {
    const auto& e = ego_frames[i];
    const auto& x = exo_frames[i];
    if (e.time_index != static_cast<int>(i) || x.time_index != static_cast<int>(i)) {
      fail(ErrorKind::AlignmentError, "sequence " + id + ": time index gap at " + std::to_string(i));
    }
    if (e.action != x.action) {
      fail(ErrorKind::AlignmentError, "sequence " + id + ": label mismatch at " + std::to_string(i));
    }
    if (e.view != View::ego || x.view != exo) {
      fail(ErrorKind::SchemaError, "sequence " + id + ": wrong view tag at " + std::to_string(i));
    }
    if (!in_vocabulary(modality, e.action)) {
      fail(ErrorKind::SchemaError, "sequence " + id + ": label '" + std::string(to_string(e.action)) +
                                       "' not in the " + std::string(to_string(modality)) + " vocabulary");
    }
  }
}

SplitTally& SplitCounts::operator[](Split s) {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return train;
}

const SplitTally& SplitCounts::operator[](Split s) const { return const_cast<SplitCounts&>(*this)[s]; }

SplitTally SplitCounts::total() const {
  return {train.videos + val.videos + test.videos, train.frames + val.frames + test.frames};
}

SplitCounts published_counts(Modality m, ExoKind kind) {
  if (m == Modality::synthetic) return {{208, 119115}, {109, 6702}, {95, 6778}};
  if (kind == ExoKind::side) return {{124, 26764}, {61, 13412}, {70, 13788}};
  return {{135, 28408}, {68, 12904}, {73, 14064}};
}

SplitCounts Manifest::recount() const {
  SplitCounts c;
  for (const auto& s : sequences) {
    c[s.split].videos += 1;
    c[s.split].frames += static_cast<std::int64_t>(s.length());
  }
  return c;
}

const PairedSequence* Manifest::find(std::string_view id) const {
  for (const auto& s : sequences) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

namespace {

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorKind::SchemaError, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, where + ": field '" + key + "': " + e.what());
  }
}

std::optional<Pose> parse_pose(const json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  Pose p;
  try {
    p.position = j.at("position").get<std::array<double, 3>>();
    p.orientation = j.at("orientation").get<std::array<double, 4>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, where + ": bad pose: " + e.what());
  }
  return p;
}

json pose_json(const std::optional<Pose>& p) {
  if (!p) return nullptr;
  return json{{"position", p->position}, {"orientation", p->orientation}};
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::size_t count_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) return 0;
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".png") ++n;
  }
  return n;
}

void check_media(const PairedSequence& s) {
  if (!fs::is_directory(s.ego_dir)) fail(ErrorKind::MissingFile, "ego dir " + s.ego_dir.string());
  if (!fs::is_directory(s.exo_dir)) fail(ErrorKind::MissingFile, "exo dir " + s.exo_dir.string());
  const auto n_ego = count_pngs(s.ego_dir);
  const auto n_exo = count_pngs(s.exo_dir);
  if (n_ego != n_exo) {
    fail(ErrorKind::AlignmentError, "sequence " + s.id + ": " + std::to_string(n_ego) + " ego frames vs " +
                                        std::to_string(n_exo) + " exo frames on disk");
  }
  for (int t = 0; t < static_cast<int>(s.length()); ++t) {
    if (!fs::exists(s.ego_frame_path(t))) fail(ErrorKind::MissingFile, s.ego_frame_path(t).string());
    if (!fs::exists(s.exo_frame_path(t))) fail(ErrorKind::MissingFile, s.exo_frame_path(t).string());
  }
}

SplitCounts parse_counts(const json& j) {
  SplitCounts c;
  for (Split s : {Split::train, Split::val, Split::test}) {
    const auto key = std::string(to_string(s));
    if (!j.contains(key)) continue;
    c[s].videos = field<std::int64_t>(j[key], "videos", "counts." + key);
    c[s].frames = field<std::int64_t>(j[key], "frames", "counts." + key);
  }
  return c;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.generic_string();
  auto rel = p.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

}  // namespace

Manifest parse_manifest(std::string_view json_text, const fs::path& base_dir, const ManifestLoadOptions& opts) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::SchemaError, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::SchemaError, "manifest root must be an object");

  Manifest m;
  m.modality = parse_modality(field<std::string>(doc, "modality", "manifest"));
  m.exo_kind = parse_exo_kind(field<std::string>(doc, "exo_kind", "manifest"));
  if (!doc.contains("sequences") || !doc["sequences"].is_array()) {
    fail(ErrorKind::SchemaError, "manifest: 'sequences' must be an array");
  }

  std::set<std::string> ids;
  for (const auto& js : doc["sequences"]) {
    PairedSequence s;
    s.id = field<std::string>(js, "id", "sequence");
    const std::string where = "sequence " + s.id;
    if (!ids.insert(s.id).second) fail(ErrorKind::SchemaError, "duplicate sequence id " + s.id);
    s.scene_id = field<std::string>(js, "scene_id", where);
    s.actor_id = field<std::string>(js, "actor_id", where);
    s.split = parse_split(field<std::string>(js, "split", where));
    s.modality = m.modality;
    s.exo_kind = m.exo_kind;
    s.ego_dir = resolve(base_dir, field<std::string>(js, "ego_dir", where));
    s.exo_dir = resolve(base_dir, field<std::string>(js, "exo_dir", where));
    s.width = js.value("width", 0);
    s.height = js.value("height", 0);

    const auto length = field<std::int64_t>(js, "length", where);
    if (length < 0) fail(ErrorKind::SchemaError, where + ": negative length");
    const auto labels = field<std::vector<std::string>>(js, "labels", where);
    if (static_cast<std::int64_t>(labels.size()) != length) {
      fail(ErrorKind::AlignmentError, where + ": " + std::to_string(labels.size()) + " labels for length " +
                                          std::to_string(length));
    }
    const json poses_ego = js.value("poses_ego", json::array());
    const json poses_exo = js.value("poses_exo", json::array());
    if (poses_ego.size() != poses_exo.size()) {
      fail(ErrorKind::AlignmentError, where + ": " + std::to_string(poses_ego.size()) + " ego poses vs " +
                                          std::to_string(poses_exo.size()) + " exo poses");
    }
    if (!poses_ego.empty() && static_cast<std::int64_t>(poses_ego.size()) != length) {
      fail(ErrorKind::AlignmentError, where + ": pose count does not match length");
    }

    const View exo = exo_view(m.exo_kind);
    s.ego_frames.reserve(length);
    s.exo_frames.reserve(length);
    for (std::int64_t t = 0; t < length; ++t) {
      const Action a = parse_action(labels[t]);
      FrameRecord e{View::ego, static_cast<int>(t), a, std::nullopt};
      FrameRecord x{exo, static_cast<int>(t), a, std::nullopt};
      if (!poses_ego.empty()) {
        e.camera_pose = parse_pose(poses_ego[t], where);
        x.camera_pose = parse_pose(poses_exo[t], where);
      }
      s.ego_frames.push_back(std::move(e));
      s.exo_frames.push_back(std::move(x));
    }
    s.validate();
    if (opts.check_media) check_media(s);
    m.sequences.push_back(std::move(s));
  }

  m.counts = m.recount();
  if (doc.contains("counts")) {
    const auto declared = parse_counts(doc["counts"]);
    if (declared != m.counts) fail(ErrorKind::SchemaError, "declared counts differ from recomputed tallies");
  }
  return m;
}

Manifest load_manifest(const fs::path& path, const ManifestLoadOptions& opts) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingFile, "manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path(), opts);
}

std::string dump_manifest(const Manifest& m, const fs::path& base_dir) {
  json doc;
  doc["modality"] = to_string(m.modality);
  doc["exo_kind"] = to_string(m.exo_kind);
  json seqs = json::array();
  for (const auto& s : m.sequences) {
    json js;
    js["id"] = s.id;
    js["scene_id"] = s.scene_id;
    js["actor_id"] = s.actor_id;
    js["split"] = to_string(s.split);
    js["ego_dir"] = relative_to(s.ego_dir, base_dir);
    js["exo_dir"] = relative_to(s.exo_dir, base_dir);
    js["length"] = s.length();
    if (s.width > 0) js["width"] = s.width;
    if (s.height > 0) js["height"] = s.height;
    json labels = json::array();
    for (const auto& r : s.ego_frames) labels.push_back(to_string(r.action));
    js["labels"] = std::move(labels);
    const bool has_pose = std::any_of(s.ego_frames.begin(), s.ego_frames.end(),
                                      [](const FrameRecord& r) { return r.camera_pose.has_value(); });
    if (has_pose) {
      json pe = json::array();
      json px = json::array();
      for (std::size_t t = 0; t < s.length(); ++t) {
        pe.push_back(pose_json(s.ego_frames[t].camera_pose));
        px.push_back(pose_json(s.exo_frames[t].camera_pose));
      }
      js["poses_ego"] = std::move(pe);
      js["poses_exo"] = std::move(px);
    }
    seqs.push_back(std::move(js));
  }
  doc["sequences"] = std::move(seqs);
  const auto c = m.recount();
  json counts;
  for (Split s : {Split::train, Split::val, Split::test}) {
    counts[std::string(to_string(s))] = {{"videos", c[s].videos}, {"frames", c[s].frames}};
  }
  doc["counts"] = std::move(counts);
  return doc.dump(1);
}

void write_manifest(const fs::path& path, const Manifest& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::MissingFile, "cannot create " + path.string());
  out << dump_manifest(m, path.parent_path()) << '\n';
}

AlignedPairRange::AlignedPairRange(const Manifest& m, Split split, ExoKind kind) {
  if (m.exo_kind != kind) return;
  sequences_ = sequences_in(m, split);
}

std::size_t AlignedPairRange::size() const {
  std::size_t n = 0;
  for (const auto* s : sequences_) n += s->length();
  return n;
}

AlignedPair AlignedPairRange::iterator::operator*() const {
  const auto* s = range_->sequences_[seq_];
  return {s, &s->ego_frames[t_], &s->exo_frames[t_]};
}

AlignedPairRange::iterator& AlignedPairRange::iterator::operator++() {
  ++t_;
  skip_empty();
  return *this;
}

void AlignedPairRange::iterator::skip_empty() {
  if (!range_) return;
  const auto& seqs = range_->sequences_;
  while (seq_ < seqs.size() && t_ >= seqs[seq_]->length()) {
    ++seq_;
    t_ = 0;
  }
}

AlignedPairRange iterate_aligned_pairs(const Manifest& m, Split split, ExoKind kind) {
  return AlignedPairRange(m, split, kind);
}

std::vector<const PairedSequence*> sequences_in(const Manifest& m, Split split) {
  std::vector<const PairedSequence*> out;
  for (const auto& s : m.sequences) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

}  // namespace egoexo

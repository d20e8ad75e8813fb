#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace egoexo {

enum class View { ego, exo_side, exo_top };
enum class Modality { real, synthetic };
enum class ExoKind { side, top };
enum class Split { train, val, test };

/// Union of the real (8-class) and synthetic (5-class) action vocabularies.
enum class Action {
  walking,
  jogging,
  running,
  waving,
  boxing,
  clapping,
  jumping,
  push_ups,
  crouching,
  strafing,
};

std::string_view to_string(View v);
std::string_view to_string(Modality m);
std::string_view to_string(ExoKind k);
std::string_view to_string(Split s);
std::string_view to_string(Action a);

Modality parse_modality(std::string_view s);
ExoKind parse_exo_kind(std::string_view s);
Split parse_split(std::string_view s);
Action parse_action(std::string_view s);

View exo_view(ExoKind kind);

std::span<const Action> vocabulary(Modality m);
bool in_vocabulary(Modality m, Action a);
/// Position of `a` in its modality's vocabulary, used as a class index.
int class_index(Modality m, Action a);

/// Position in meters plus unit quaternion (w, x, y, z), camera-to-world.
struct Pose {
  std::array<double, 3> position{};
  std::array<double, 4> orientation{1.0, 0.0, 0.0, 0.0};

  bool operator==(const Pose&) const = default;
};

struct FrameRecord {
  View view = View::ego;
  int time_index = 0;
  Action action = Action::walking;
  std::optional<Pose> camera_pose;

  bool operator==(const FrameRecord&) const = default;
};

struct PairedSequence {
  std::string id;
  std::string scene_id;
  std::string actor_id;
  Modality modality = Modality::synthetic;
  ExoKind exo_kind = ExoKind::side;
  Split split = Split::train;
  std::filesystem::path ego_dir;
  std::filesystem::path exo_dir;
  int width = 0;   // native resolution, 0 when unknown
  int height = 0;
  std::vector<FrameRecord> ego_frames;
  std::vector<FrameRecord> exo_frames;

  std::size_t length() const noexcept { return ego_frames.size(); }
  std::filesystem::path ego_frame_path(int t) const;
  std::filesystem::path exo_frame_path(int t) const;

  /// Throws AlignmentError or SchemaError when the pair invariants break.
  void validate() const;

  bool operator==(const PairedSequence&) const = default;
};

struct SplitTally {
  std::int64_t videos = 0;
  std::int64_t frames = 0;

  bool operator==(const SplitTally&) const = default;
};

struct SplitCounts {
  SplitTally train;
  SplitTally val;
  SplitTally test;

  SplitTally& operator[](Split s);
  const SplitTally& operator[](Split s) const;
  SplitTally total() const;

  bool operator==(const SplitCounts&) const = default;
};

/// Split tallies of the released real and synthetic ego/exo datasets.
SplitCounts published_counts(Modality m, ExoKind kind);

struct Manifest {
  Modality modality = Modality::synthetic;
  ExoKind exo_kind = ExoKind::side;
  std::vector<PairedSequence> sequences;
  SplitCounts counts;

  SplitCounts recount() const;
  const PairedSequence* find(std::string_view id) const;

  bool operator==(const Manifest&) const = default;
};

struct ManifestLoadOptions {
  /// Verify every referenced frame file exists and the ego/exo frame counts
  /// on disk agree.
  bool check_media = true;
};

Manifest load_manifest(const std::filesystem::path& path, const ManifestLoadOptions& opts = {});

/// Serializes `m` with paths relative to the manifest's directory where
/// possible. Counts are recomputed before writing.
void write_manifest(const std::filesystem::path& path, const Manifest& m);

Manifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir,
                        const ManifestLoadOptions& opts = {});
std::string dump_manifest(const Manifest& m, const std::filesystem::path& base_dir);

struct AlignedPair {
  const PairedSequence* sequence = nullptr;
  const FrameRecord* ego = nullptr;
  const FrameRecord* exo = nullptr;
};

/// Single-pass range over aligned (ego, exo) records of one split. Yields
/// nothing when the manifest's exo kind differs from `kind` or the split has
/// no sequences.
class AlignedPairRange {
 public:
  class iterator {
   public:
    using value_type = AlignedPair;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const AlignedPairRange* range, std::size_t seq, std::size_t t) : range_(range), seq_(seq), t_(t) {
      skip_empty();
    }

    AlignedPair operator*() const;
    iterator& operator++();
    iterator operator++(int) {
      auto tmp = *this;
      ++*this;
      return tmp;
    }
    bool operator==(const iterator& o) const { return seq_ == o.seq_ && t_ == o.t_; }

   private:
    void skip_empty();

    const AlignedPairRange* range_ = nullptr;
    std::size_t seq_ = 0;
    std::size_t t_ = 0;
  };

  AlignedPairRange(const Manifest& m, Split split, ExoKind kind);

  iterator begin() const { return iterator(this, 0, 0); }
  iterator end() const { return iterator(this, sequences_.size(), 0); }
  bool empty() const { return begin() == end(); }
  std::size_t size() const;

  std::span<const PairedSequence* const> sequences() const { return sequences_; }

 private:
  std::vector<const PairedSequence*> sequences_;
};

AlignedPairRange iterate_aligned_pairs(const Manifest& m, Split split, ExoKind kind);

/// Sequences of `m` in `split`, manifest order.
std::vector<const PairedSequence*> sequences_in(const Manifest& m, Split split);

}  // namespace egoexo

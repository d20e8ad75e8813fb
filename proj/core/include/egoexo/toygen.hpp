#pragma once

#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "egoexo/dataset.hpp"
#include "egoexo/image.hpp"

namespace egoexo::toygen {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// Axis-aligned (before yaw) box resting anywhere in world space. World frame:
/// z up, ground plane at z = 0.
struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  Rgb color;
};

struct Bounds {
  double min_x = -5.0;
  double max_x = 5.0;
  double min_y = -5.0;
  double max_y = 5.0;

  bool contains(double x, double y) const { return x >= min_x && x <= max_x && y >= min_y && y <= max_y; }
  double center_x() const { return 0.5 * (min_x + max_x); }
  double center_y() const { return 0.5 * (min_y + max_y); }
};

struct SceneSpec {
  bool has_ground = true;
  Rgb ground_color{96, 140, 80};
  Rgb ground_alt_color{86, 128, 72};
  double tile_size = 1.0;
  double ground_margin = 20.0;
  Rgb sky_color{150, 190, 230};
  Rgb actor_color{200, 60, 50};
  Rgb head_color{230, 190, 160};
  Eigen::Vector3d light_dir = Eigen::Vector3d(0.4, 0.3, 0.85).normalized();
  std::vector<Box> obstacles;
  Bounds bounds;
  Eigen::Vector2d actor_start = Eigen::Vector2d::Zero();
  double actor_heading = 0.0;
  std::uint64_t rng_seed = 0;

  /// Throws InvalidArgument if an obstacle leaves the bounds or the actor
  /// starts inside an obstacle footprint.
  void validate() const;
};

struct ActionScript {
  Action action = Action::walking;
  int duration = 50;
  /// Meters per frame along the trajectory.
  double speed = 0.05;
  /// Heading change per frame (rad); 0 gives a straight line.
  double turn_rate = 0.0;
  /// Standard deviation of the random per-frame heading perturbation (rad).
  double wander = 0.0;
  double standing_height = 1.7;
  double crouch_height = 1.1;
  double jump_height = 0.4;
  /// Frames per hop for jumping scripts.
  int jump_period = 16;
};

/// Per-action speed used by the dataset generator.
double default_speed(Action a);

struct ActorState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double heading = 0.0;
  /// Head-top height above ground, including `lift`.
  double body_height = 1.7;
  /// Height of the feet above ground (nonzero mid-jump).
  double lift = 0.0;
  Action action = Action::walking;
};

/// Pinhole intrinsics; pixel centers sit at integer + 0.5.
struct Intrinsics {
  double focal = 64.0;
  double cx = 64.0;
  double cy = 64.0;
  int width = 128;
  int height = 128;

  static Intrinsics with_fov(int width, int height, double horizontal_fov_deg);
};

/// Camera-to-world rigid transform. Camera axes: x right, y down, z forward.
struct CameraPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  Pose to_pose() const;
};

/// Orientation looking along `forward` with the given world-space up hint.
Eigen::Quaterniond look_rotation(const Eigen::Vector3d& forward, const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

/// Projects a world point; nullopt when behind the camera.
std::optional<Eigen::Vector2d> project(const CameraPose& cam, const Intrinsics& k, const Eigen::Vector3d& world);

struct CameraRig {
  Intrinsics intrinsics;
  double eye_offset = -0.1;           // eye height relative to body height
  double ego_pitch_deg = 12.0;        // downward tilt of the head camera
  double jitter_max_deg = 3.0;
  CameraPose exo;
  ExoKind exo_kind = ExoKind::side;

  /// Head pose without jitter.
  CameraPose ego_base(const ActorState& s) const;
};

/// Static side or top camera framing the scene bounds.
CameraPose make_exo_camera(const SceneSpec& scene, ExoKind kind, double horizontal_fov_deg);

std::vector<ActorState> simulate_actor(const ActionScript& script, const SceneSpec& scene);

/// Z-buffered flat-shaded rendering. `actor` is drawn when given.
Frame render_view(const SceneSpec& scene, const CameraPose& cam, const Intrinsics& k,
                  const ActorState* actor = nullptr);

struct SequenceOptions {
  std::filesystem::path out_dir;  // frames go to out_dir/<id>/{ego,exo}
  std::string id = "seq0000";
  std::string scene_id = "scene0";
  std::string actor_id = "actor0";
  Split split = Split::train;
  ExoKind exo_kind = ExoKind::side;
  int image_size = 128;
  double jitter_max_deg = 3.0;
  double exo_fov_deg = 60.0;
  double ego_fov_deg = 80.0;
  bool write_frames = true;
};

/// Renders and writes an aligned ego/exo sequence. Also returns per-frame
/// ego camera poses in the frame records.
PairedSequence generate_pair_sequence(const SceneSpec& scene, const ActionScript& script,
                                      const SequenceOptions& opts);

enum class Style { A, B };
Style parse_style(const std::string& s);

struct DatasetOptions {
  int scenes = 4;
  int sequences_per_scene = 5;
  int length = 50;
  std::uint64_t seed = 7;
  ExoKind exo_kind = ExoKind::side;
  int image_size = 128;
  double jitter_max_deg = 3.0;
  Style style = Style::A;
  std::string id_prefix;
};

SceneSpec make_scene(std::uint64_t seed, Style style);

/// Split role of sequence `seq` in scene `scene`: one test and one validation
/// sequence per scene (when there are enough), rotating across scenes.
Split assign_split(int scene, int seq, int sequences_per_scene);

/// Generates the full toy dataset under `out_dir` and writes
/// `out_dir/manifest.json`.
Manifest generate_dataset(const DatasetOptions& opts, const std::filesystem::path& out_dir);

/// One sequence described by a JSON spec: `{"scene": {...}, "script": {...},
/// "sequence": {...}}`. Absent keys keep their defaults.
struct SequenceRequest {
  SceneSpec scene;
  ActionScript script;
  SequenceOptions options;
};

/// Throws SchemaError on malformed JSON or mistyped fields.
SequenceRequest parse_sequence_request(const std::string& json_text);
std::string to_json(const SequenceRequest& r);

}  // namespace egoexo::toygen

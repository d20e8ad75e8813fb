#include "egoexo/toygen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "egoexo/error.hpp"

namespace egoexo::toygen {

using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double footprint_radius(const Box& b) { return 0.5 * std::hypot(b.size.x(), b.size.y()); }

bool inside_footprint(const Box& b, const Vector2d& p, double pad) {
  const Vector2d d = p - b.center.head<2>();
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double lx = c * d.x() + s * d.y();
  const double ly = -s * d.x() + c * d.y();
  return std::abs(lx) <= 0.5 * b.size.x() + pad && std::abs(ly) <= 0.5 * b.size.y() + pad;
}

// Reflects `p` into [lo, hi] and reports whether a reflection happened.
bool reflect(double& p, double lo, double hi) {
  bool hit = false;
  for (int i = 0; i < 4 && (p < lo || p > hi); ++i) {
    p = p < lo ? 2.0 * lo - p : 2.0 * hi - p;
    hit = true;
  }
  p = std::clamp(p, lo, hi);
  return hit;
}

std::uint8_t jitter_channel(std::mt19937_64& rng, std::uint8_t v, int amount) {
  std::uniform_int_distribution<int> d(-amount, amount);
  return static_cast<std::uint8_t>(std::clamp(v + d(rng), 0, 255));
}

std::string pad2(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

}  // namespace

void SceneSpec::validate() const {
  if (bounds.min_x >= bounds.max_x || bounds.min_y >= bounds.max_y) {
    fail(ErrorKind::InvalidArgument, "scene bounds are empty");
  }
  for (const auto& b : obstacles) {
    const double r = footprint_radius(b);
    if (b.center.x() - r < bounds.min_x || b.center.x() + r > bounds.max_x || b.center.y() - r < bounds.min_y ||
        b.center.y() + r > bounds.max_y) {
      fail(ErrorKind::InvalidArgument, "obstacle outside scene bounds");
    }
    if (inside_footprint(b, actor_start, 0.0)) fail(ErrorKind::InvalidArgument, "actor starts inside an obstacle");
  }
  if (!bounds.contains(actor_start.x(), actor_start.y())) {
    fail(ErrorKind::InvalidArgument, "actor starts outside scene bounds");
  }
}

double default_speed(Action a) {
  switch (a) {
    case Action::running: return 0.30;
    case Action::crouching: return 0.08;
    case Action::jumping: return 0.15;
    case Action::strafing: return 0.12;
    default: return 0.12;
  }
}

std::vector<ActorState> simulate_actor(const ActionScript& script, const SceneSpec& scene) {
  if (script.duration < 1) fail(ErrorKind::InvalidScript, "duration must be >= 1");
  if (!(script.speed >= 0.0) || !std::isfinite(script.speed)) fail(ErrorKind::InvalidScript, "speed must be >= 0");
  if (script.action == Action::jumping && script.jump_period < 2) {
    fail(ErrorKind::InvalidScript, "jump period must be >= 2");
  }

  std::mt19937_64 rng(scene.rng_seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(script.action) + 1)));
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto& b = scene.bounds;
  const bool strafe = script.action == Action::strafing;
  const int span = script.duration - 1;
  const int hops = span > 0 ? std::max(1, static_cast<int>(std::lround(static_cast<double>(span) / script.jump_period)))
                            : 0;

  std::vector<ActorState> out;
  out.reserve(script.duration);
  Vector2d pos = scene.actor_start;
  double heading = scene.actor_heading;
  for (int t = 0; t < script.duration; ++t) {
    ActorState s;
    s.position = pos;
    s.heading = heading;
    s.action = script.action;
    s.body_height = script.standing_height;
    if (script.action == Action::crouching) {
      s.body_height = script.crouch_height;
    } else if (script.action == Action::jumping && span > 0) {
      const long phase = (static_cast<long>(hops) * t) % span;
      if (phase != 0) {
        s.lift = script.jump_height * std::abs(std::sin(std::numbers::pi * hops * t / span));
      }
      s.body_height = script.standing_height + s.lift;
    }
    out.push_back(s);

    const double move_dir = strafe ? heading + 0.5 * std::numbers::pi : heading;
    double vx = std::cos(move_dir);
    double vy = std::sin(move_dir);
    double nx = pos.x() + script.speed * vx;
    double ny = pos.y() + script.speed * vy;
    if (reflect(nx, b.min_x, b.max_x)) vx = -vx;
    if (reflect(ny, b.min_y, b.max_y)) vy = -vy;
    pos = Vector2d(nx, ny);
    const double new_dir = std::atan2(vy, vx);
    heading = strafe ? new_dir - 0.5 * std::numbers::pi : new_dir;
    if (script.speed == 0.0) heading = s.heading;
    heading += script.turn_rate;
    if (script.wander > 0.0) heading += script.wander * noise(rng);
  }
  return out;
}

CameraPose CameraRig::ego_base(const ActorState& s) const {
  const double p = ego_pitch_deg * kDeg;
  CameraPose c;
  c.position = Vector3d(s.position.x(), s.position.y(), s.body_height + eye_offset);
  const Vector3d fwd(std::cos(s.heading) * std::cos(p), std::sin(s.heading) * std::cos(p), -std::sin(p));
  c.orientation = look_rotation(fwd);
  return c;
}

CameraPose make_exo_camera(const SceneSpec& scene, ExoKind kind, double horizontal_fov_deg) {
  const auto& b = scene.bounds;
  const double half = 0.5 * std::max(b.max_x - b.min_x, b.max_y - b.min_y);
  const double reach = half / std::tan(0.5 * horizontal_fov_deg * kDeg);
  CameraPose c;
  if (kind == ExoKind::side) {
    // Raised and tilted down so the whole region fills the frame.
    c.position = Vector3d(b.center_x(), b.min_y - 0.5 * half, 1.3 * half);
    const Vector3d target(b.center_x(), b.center_y() + 0.1 * half, 0.0);
    c.orientation = look_rotation(target - c.position);
  } else {
    c.position = Vector3d(b.center_x(), b.center_y(), reach + 2.0);
    c.orientation = look_rotation(-Vector3d::UnitZ(), Vector3d::UnitY());
  }
  return c;
}

PairedSequence generate_pair_sequence(const SceneSpec& scene, const ActionScript& script, const SequenceOptions& opts) {
  scene.validate();
  const auto states = simulate_actor(script, scene);

  CameraRig rig;
  rig.intrinsics = Intrinsics::with_fov(opts.image_size, opts.image_size, opts.ego_fov_deg);
  rig.jitter_max_deg = opts.jitter_max_deg;
  rig.exo_kind = opts.exo_kind;
  rig.exo = make_exo_camera(scene, opts.exo_kind, opts.exo_fov_deg);
  const Intrinsics exo_k = Intrinsics::with_fov(opts.image_size, opts.image_size, opts.exo_fov_deg);

  std::mt19937_64 rng(scene.rng_seed * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL);
  std::normal_distribution<double> gauss(0.0, 1.0);

  PairedSequence seq;
  seq.id = opts.id;
  seq.scene_id = opts.scene_id;
  seq.actor_id = opts.actor_id;
  seq.modality = Modality::synthetic;
  seq.exo_kind = opts.exo_kind;
  seq.split = opts.split;
  seq.ego_dir = opts.out_dir / opts.id / "ego";
  seq.exo_dir = opts.out_dir / opts.id / "exo";
  seq.width = opts.image_size;
  seq.height = opts.image_size;

  const View exo = exo_view(opts.exo_kind);
  // Head sway: an AR(1) rotation vector, bounded by jitter_max, so consecutive
  // frames differ by a small rotation.
  constexpr double kSwayCorrelation = 0.9;
  const double max_rad = rig.jitter_max_deg * kDeg;
  const double sigma = 0.5 * max_rad / std::sqrt(3.0);
  Vector3d sway = Vector3d::Zero();
  for (int t = 0; t < static_cast<int>(states.size()); ++t) {
    const auto& s = states[t];
    CameraPose ego = rig.ego_base(s);
    if (max_rad > 0.0) {
      const Vector3d kick(gauss(rng), gauss(rng), gauss(rng));
      const double keep = t == 0 ? 0.0 : kSwayCorrelation;
      sway = keep * sway + std::sqrt(1.0 - keep * keep) * sigma * kick;
      if (sway.norm() > max_rad) sway *= max_rad / sway.norm();
      if (sway.norm() > 0.0) {
        ego.orientation =
            (ego.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(sway.norm(), sway.normalized()))).normalized();
      }
    }
    if (opts.write_frames) {
      write_png(seq.ego_frame_path(t), render_view(scene, ego, rig.intrinsics, nullptr));
      write_png(seq.exo_frame_path(t), render_view(scene, rig.exo, exo_k, &s));
    }
    seq.ego_frames.push_back({View::ego, t, s.action, ego.to_pose()});
    seq.exo_frames.push_back({exo, t, s.action, rig.exo.to_pose()});
  }
  seq.validate();
  return seq;
}

Style parse_style(const std::string& s) {
  if (s == "A" || s == "a") return Style::A;
  if (s == "B" || s == "b") return Style::B;
  fail(ErrorKind::InvalidArgument, "unknown style '" + s + "'");
}

SceneSpec make_scene(std::uint64_t seed, Style style) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SceneSpec scene;
  scene.rng_seed = seed;

  std::vector<Rgb> palette;
  if (style == Style::A) {
    scene.ground_color = {96, 140, 80};
    scene.ground_alt_color = {84, 124, 70};
    scene.sky_color = {150, 190, 230};
    scene.light_dir = Vector3d(0.4, 0.3, 0.85).normalized();
    palette = {{220, 200, 60}, {60, 90, 200}, {230, 130, 40}, {160, 70, 170}, {60, 190, 190}, {240, 240, 240}};
  } else {
    scene.ground_color = {176, 154, 112};
    scene.ground_alt_color = {160, 138, 100};
    scene.sky_color = {228, 176, 140};
    scene.light_dir = Vector3d(-0.5, 0.2, 0.7).normalized();
    palette = {{110, 110, 120}, {140, 90, 60}, {70, 110, 80}, {150, 140, 90}, {90, 70, 100}, {60, 60, 60}};
  }

  // Per-scene ground tint keeps scenes of one style apart.
  const double tint[3] = {0.7 + 0.6 * unit(rng), 0.7 + 0.6 * unit(rng), 0.7 + 0.6 * unit(rng)};
  auto tinted = [&](Rgb c) {
    auto ch = [](double v) { return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)); };
    return Rgb{ch(c.r * tint[0]), ch(c.g * tint[1]), ch(c.b * tint[2])};
  };
  scene.ground_color = tinted(scene.ground_color);
  scene.ground_alt_color = tinted(scene.ground_alt_color);

  const auto& b = scene.bounds;
  const int count = 6 + static_cast<int>(unit(rng) * 5.0);
  for (int i = 0; i < count; ++i) {
    Box box;
    box.size = Vector3d(0.4 + 1.1 * unit(rng), 0.4 + 1.1 * unit(rng), 0.5 + 2.0 * unit(rng));
    box.yaw = unit(rng) * std::numbers::pi;
    const double r = footprint_radius(box);
    box.center = Vector3d(b.min_x + r + (b.max_x - b.min_x - 2 * r) * unit(rng),
                          b.min_y + r + (b.max_y - b.min_y - 2 * r) * unit(rng), 0.5 * box.size.z());
    const Rgb base = palette[static_cast<std::size_t>(unit(rng) * palette.size()) % palette.size()];
    box.color = {jitter_channel(rng, base.r, 20), jitter_channel(rng, base.g, 20), jitter_channel(rng, base.b, 20)};
    scene.obstacles.push_back(box);
  }
  scene.actor_start = Vector2d(b.center_x(), b.center_y());
  return scene;
}

Split assign_split(int scene, int seq, int sequences_per_scene) {
  if (sequences_per_scene < 2) return Split::train;
  const int role = (seq + scene) % sequences_per_scene;
  if (role == sequences_per_scene - 1) return Split::test;
  if (sequences_per_scene >= 3 && role == sequences_per_scene - 2) return Split::val;
  return Split::train;
}

Manifest generate_dataset(const DatasetOptions& opts, const std::filesystem::path& out_dir) {
  if (opts.scenes < 0 || opts.sequences_per_scene < 0 || opts.length < 1) {
    fail(ErrorKind::InvalidArgument, "scene/sequence counts must be >= 0 and length >= 1");
  }
  std::mt19937_64 master(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Manifest m;
  m.modality = Modality::synthetic;
  m.exo_kind = opts.exo_kind;
  const auto vocab = vocabulary(Modality::synthetic);

  for (int sc = 0; sc < opts.scenes; ++sc) {
    const std::uint64_t scene_seed = master();
    const SceneSpec base = make_scene(scene_seed, opts.style);
    for (int q = 0; q < opts.sequences_per_scene; ++q) {
      SceneSpec scene = base;
      scene.rng_seed = master();
      const auto& b = scene.bounds;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        const Vector2d p(b.min_x + 0.5 + (b.max_x - b.min_x - 1.0) * unit(master),
                         b.min_y + 0.5 + (b.max_y - b.min_y - 1.0) * unit(master));
        const bool clear = std::none_of(scene.obstacles.begin(), scene.obstacles.end(),
                                        [&](const Box& o) { return inside_footprint(o, p, 0.4); });
        scene.actor_start = p;
        if (clear) break;
      }
      scene.actor_heading = unit(master) * 2.0 * std::numbers::pi;

      ActionScript script;
      script.action = vocab[static_cast<std::size_t>(q) % vocab.size()];
      script.duration = opts.length;
      script.speed = default_speed(script.action) * (0.8 + 0.4 * unit(master));
      script.turn_rate = (unit(master) - 0.5) * 0.04;
      script.wander = 0.01;

      SequenceOptions so;
      so.out_dir = out_dir;
      so.id = opts.id_prefix + "s" + pad2(sc) + "_q" + pad2(q);
      so.scene_id = opts.id_prefix + "scene" + pad2(sc);
      so.actor_id = "actor" + pad2(q % 3);
      so.split = assign_split(sc, q, opts.sequences_per_scene);
      so.exo_kind = opts.exo_kind;
      so.image_size = opts.image_size;
      so.jitter_max_deg = opts.jitter_max_deg;
      m.sequences.push_back(generate_pair_sequence(scene, script, so));
    }
  }
  m.counts = m.recount();
  write_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace egoexo::toygen

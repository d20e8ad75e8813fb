#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>

#include "egoexo/error.hpp"
#include "egoexo/toygen.hpp"

using namespace egoexo;
using namespace egoexo::toygen;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "egoexo_test_toygen" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no egoexo::Error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Camera, ProjectsCenterAndRejectsBehind) {
  const auto k = Intrinsics::with_fov(64, 64, 90.0);
  EXPECT_NEAR(k.focal, 32.0, 1e-12);
  CameraPose cam;
  cam.orientation = look_rotation(Eigen::Vector3d::UnitX());
  const auto center = project(cam, k, Eigen::Vector3d(5.0, 0.0, 0.0));
  ASSERT_TRUE(center.has_value());
  EXPECT_NEAR(center->x(), k.cx, 1e-9);
  EXPECT_NEAR(center->y(), k.cy, 1e-9);
  // Up in the world is up in the image (smaller y).
  const auto above = project(cam, k, Eigen::Vector3d(5.0, 0.0, 1.0));
  ASSERT_TRUE(above.has_value());
  EXPECT_LT(above->y(), k.cy);
  EXPECT_FALSE(project(cam, k, Eigen::Vector3d(-5.0, 0.0, 0.0)).has_value());
}

TEST(Camera, LookRotationIsUnit) {
  const auto q = look_rotation(Eigen::Vector3d(1.0, 2.0, -0.5));
  EXPECT_NEAR(q.norm(), 1.0, 1e-12);
  const Eigen::Vector3d fwd = q * Eigen::Vector3d::UnitZ();
  EXPECT_NEAR(fwd.dot(Eigen::Vector3d(1.0, 2.0, -0.5).normalized()), 1.0, 1e-12);
}

TEST(Simulate, StaysInsideBounds) {
  SceneSpec scene;
  scene.bounds = {-2.0, 2.0, -1.0, 1.0};
  ActionScript script;
  script.duration = 400;
  script.speed = 0.2;
  script.turn_rate = 0.07;
  script.wander = 0.1;
  for (Action a : vocabulary(Modality::synthetic)) {
    script.action = a;
    const auto states = simulate_actor(script, scene);
    ASSERT_EQ(states.size(), 400u);
    for (const auto& s : states) {
      EXPECT_TRUE(scene.bounds.contains(s.position.x(), s.position.y()));
      EXPECT_EQ(s.action, a);
    }
  }
}

TEST(Simulate, StepLengthEqualsSpeed) {
  SceneSpec scene;
  ActionScript script;
  script.duration = 20;
  script.speed = 0.1;
  const auto states = simulate_actor(script, scene);
  for (std::size_t t = 1; t < states.size(); ++t) {
    EXPECT_NEAR((states[t].position - states[t - 1].position).norm(), 0.1, 1e-12);
  }
}

TEST(Simulate, PosturesByAction) {
  SceneSpec scene;
  ActionScript script;
  script.duration = 33;
  script.action = Action::crouching;
  for (const auto& s : simulate_actor(script, scene)) EXPECT_DOUBLE_EQ(s.body_height, script.crouch_height);
  script.action = Action::jumping;
  const auto jumps = simulate_actor(script, scene);
  double peak = 0.0;
  for (const auto& s : jumps) {
    EXPECT_GE(s.lift, 0.0);
    EXPECT_LE(s.lift, script.jump_height + 1e-12);
    peak = std::max(peak, s.lift);
  }
  EXPECT_GT(peak, 0.5 * script.jump_height);
  EXPECT_DOUBLE_EQ(jumps.front().lift, 0.0);
}

TEST(Simulate, InvalidScripts) {
  SceneSpec scene;
  ActionScript script;
  script.duration = 0;
  EXPECT_EQ(kind_of([&] { simulate_actor(script, scene); }), ErrorKind::InvalidScript);
  script.duration = 5;
  script.speed = -1.0;
  EXPECT_EQ(kind_of([&] { simulate_actor(script, scene); }), ErrorKind::InvalidScript);
  script.speed = 0.1;
  script.action = Action::jumping;
  script.jump_period = 1;
  EXPECT_EQ(kind_of([&] { simulate_actor(script, scene); }), ErrorKind::InvalidScript);
}

TEST(Scene, ValidateRejectsBadLayouts) {
  SceneSpec scene;
  scene.obstacles.push_back({Eigen::Vector3d(0.0, 0.0, 0.5), Eigen::Vector3d::Ones(), 0.0, {}});
  EXPECT_EQ(kind_of([&] { scene.validate(); }), ErrorKind::InvalidArgument);
  scene.actor_start = Eigen::Vector2d(3.0, 3.0);
  scene.validate();
  scene.obstacles[0].center.x() = 40.0;
  EXPECT_EQ(kind_of([&] { scene.validate(); }), ErrorKind::InvalidArgument);
}

TEST(Render, ActorAppearsInExoView) {
  const auto scene = make_scene(3, Style::A);
  const auto cam = make_exo_camera(scene, ExoKind::top, 60.0);
  const auto k = Intrinsics::with_fov(48, 48, 60.0);
  ActorState actor;
  actor.position = scene.actor_start;
  const auto empty = render_view(scene, cam, k);
  const auto with_actor = render_view(scene, cam, k, &actor);
  EXPECT_NE(empty, with_actor);
  EXPECT_EQ(render_view(scene, cam, k), empty);
}

TEST(SplitAssignment, OneTestAndOneValPerScene) {
  for (int scene = 0; scene < 6; ++scene) {
    std::map<Split, int> n;
    for (int q = 0; q < 5; ++q) ++n[assign_split(scene, q, 5)];
    EXPECT_EQ(n[Split::test], 1);
    EXPECT_EQ(n[Split::val], 1);
    EXPECT_EQ(n[Split::train], 3);
  }
  EXPECT_EQ(assign_split(0, 0, 1), Split::train);
}

TEST(Dataset, CountsAndLayout) {
  DatasetOptions o;
  o.length = 50;
  o.image_size = 16;
  const auto dir = scratch("counts");
  const auto m = generate_dataset(o, dir);
  EXPECT_EQ(m.sequences.size(), 20u);
  EXPECT_EQ(m.counts.total(), (SplitTally{20, 1000}));
  EXPECT_EQ(m.counts.test.videos, 4);
  EXPECT_EQ(m.counts.val.videos, 4);
  EXPECT_EQ(iterate_aligned_pairs(m, Split::train, ExoKind::side).size(), 600u);

  const auto loaded = load_manifest(dir / "manifest.json");
  EXPECT_EQ(loaded.counts, m.counts);
  const auto& s = loaded.sequences.front();
  EXPECT_EQ(read_png(s.ego_frame_path(49)).height(), 16);
  EXPECT_TRUE(fs::exists(s.exo_frame_path(0)));
  ASSERT_TRUE(s.ego_frames[0].camera_pose.has_value());
}

TEST(Dataset, DeterministicForSeed) {
  DatasetOptions o;
  o.scenes = 2;
  o.sequences_per_scene = 3;
  o.length = 4;
  o.image_size = 16;
  o.exo_kind = ExoKind::top;
  const auto a = generate_dataset(o, scratch("det_a"));
  const auto b = generate_dataset(o, scratch("det_b"));
  ASSERT_EQ(a.sequences.size(), b.sequences.size());
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    EXPECT_EQ(a.sequences[i].ego_frames, b.sequences[i].ego_frames);
    for (int t = 0; t < 4; ++t) {
      EXPECT_EQ(read_png(a.sequences[i].ego_frame_path(t)), read_png(b.sequences[i].ego_frame_path(t)));
      EXPECT_EQ(read_png(a.sequences[i].exo_frame_path(t)), read_png(b.sequences[i].exo_frame_path(t)));
    }
  }
  EXPECT_EQ(a.sequences[0].exo_frames[0].view, View::exo_top);
}

TEST(Dataset, EgoJitterBounded) {
  SceneSpec scene = make_scene(11, Style::B);
  ActionScript script;
  script.duration = 60;
  script.speed = 0.0;
  SequenceOptions so;
  so.write_frames = false;
  so.jitter_max_deg = 3.0;
  const auto seq = generate_pair_sequence(scene, script, so);
  CameraRig rig;
  const auto base = rig.ego_base(simulate_actor(script, scene).front());
  for (const auto& r : seq.ego_frames) {
    const auto& o = r.camera_pose->orientation;
    const Eigen::Quaterniond q(o[0], o[1], o[2], o[3]);
    EXPECT_LE(q.angularDistance(base.orientation) * 180.0 / std::numbers::pi, 3.0 + 1e-9);
  }
}

TEST(SequenceRequest, JsonRoundTrip) {
  const auto r = parse_sequence_request(R"({
    "scene": {"bounds": [-3, 3, -2, 2], "actor_start": [1, 1], "actor_color": [1, 2, 3]},
    "script": {"action": "strafing", "duration": 7, "speed": 0.08},
    "sequence": {"id": "probe", "exo_kind": "top", "image_size": 24}
  })");
  EXPECT_DOUBLE_EQ(r.scene.bounds.max_x, 3.0);
  EXPECT_EQ(r.scene.actor_color, (Rgb{1, 2, 3}));
  EXPECT_EQ(r.script.action, Action::strafing);
  EXPECT_EQ(r.script.duration, 7);
  EXPECT_EQ(r.options.id, "probe");
  EXPECT_EQ(r.options.exo_kind, ExoKind::top);
  const auto again = parse_sequence_request(to_json(r));
  EXPECT_EQ(again.script.duration, 7);
  EXPECT_DOUBLE_EQ(again.scene.actor_start.y(), 1.0);
  EXPECT_EQ(again.options.image_size, 24);
}

TEST(SequenceRequest, SchemaErrors) {
  EXPECT_EQ(kind_of([] { parse_sequence_request("[1, 2]"); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([] { parse_sequence_request("{\"scene\": {\"bounds\": [1, 2]}}"); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([] { parse_sequence_request("{\"script\": {\"duration\": \"long\"}}"); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([] { parse_sequence_request("{oops"); }), ErrorKind::SchemaError);
}

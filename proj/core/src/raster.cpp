#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "egoexo/error.hpp"
#include "egoexo/toygen.hpp"

namespace egoexo::toygen {

using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

constexpr double kNear = 0.05;
constexpr double kAmbient = 0.55;

struct Triangle {
  std::array<Vector3d, 3> v;  // camera space
  Rgb color;
};

Rgb shade(Rgb c, double factor) {
  auto s = [factor](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v * factor), 0L, 255L));
  };
  return {s(c.r), s(c.g), s(c.b)};
}

class Rasterizer {
 public:
  Rasterizer(const CameraPose& cam, const Intrinsics& k, Frame& out)
      : cam_(cam), k_(k), out_(out), rot_t_(cam.orientation.toRotationMatrix().transpose()) {
    depth_.assign(static_cast<std::size_t>(k.width) * k.height, std::numeric_limits<double>::infinity());
  }

  Vector3d to_camera(const Vector3d& w) const { return rot_t_ * (w - cam_.position); }

  void ground(const SceneSpec& scene) {
    const auto& b = scene.bounds;
    const double m = scene.ground_margin;
    const Eigen::Matrix3d rot = cam_.orientation.toRotationMatrix();
    for (int y = 0; y < k_.height; ++y) {
      for (int x = 0; x < k_.width; ++x) {
        const Vector3d dc((x + 0.5 - k_.cx) / k_.focal, (y + 0.5 - k_.cy) / k_.focal, 1.0);
        const Vector3d d = rot * dc;
        if (d.z() >= -1e-12) continue;
        const double t = -cam_.position.z() / d.z();
        if (t <= kNear) continue;
        const Vector3d hit = cam_.position + t * d;
        if (hit.x() < b.min_x - m || hit.x() > b.max_x + m || hit.y() < b.min_y - m || hit.y() > b.max_y + m) {
          continue;
        }
        const auto tx = static_cast<long>(std::floor(hit.x() / scene.tile_size));
        const auto ty = static_cast<long>(std::floor(hit.y() / scene.tile_size));
        const Rgb c = ((tx + ty) & 1) ? scene.ground_alt_color : scene.ground_color;
        put(x, y, t, c);
      }
    }
  }

  void box(const Box& box, const Vector3d& light) {
    const double cy = std::cos(box.yaw);
    const double sy = std::sin(box.yaw);
    const Vector3d ax(cy, sy, 0.0);
    const Vector3d ay(-sy, cy, 0.0);
    const Vector3d az(0.0, 0.0, 1.0);
    const Vector3d h = 0.5 * box.size;
    auto corner = [&](int i) {
      const double sx = (i & 1) ? 1.0 : -1.0;
      const double syy = (i & 2) ? 1.0 : -1.0;
      const double sz = (i & 4) ? 1.0 : -1.0;
      return Vector3d(box.center + sx * h.x() * ax + syy * h.y() * ay + sz * h.z() * az);
    };
    std::array<Vector3d, 8> c;
    for (int i = 0; i < 8; ++i) c[i] = corner(i);
    // Faces as corner quads (counter-clockwise seen from outside) + outward normal.
    struct Face {
      std::array<int, 4> idx;
      Vector3d normal;
    };
    const std::array<Face, 6> faces{{
        {{1, 3, 7, 5}, ax},
        {{0, 4, 6, 2}, -ax},
        {{2, 6, 7, 3}, ay},
        {{0, 1, 5, 4}, -ay},
        {{4, 5, 7, 6}, az},
        {{0, 2, 3, 1}, -az},
    }};
    for (const auto& f : faces) {
      const Vector3d fc = 0.25 * (c[f.idx[0]] + c[f.idx[1]] + c[f.idx[2]] + c[f.idx[3]]);
      if (f.normal.dot(cam_.position - fc) <= 0.0) continue;
      const Rgb col = shade(box.color, kAmbient + (1.0 - kAmbient) * std::max(0.0, f.normal.dot(light)));
      std::array<Vector3d, 4> q;
      for (int i = 0; i < 4; ++i) q[i] = to_camera(c[f.idx[i]]);
      triangle({{q[0], q[1], q[2]}, col});
      triangle({{q[0], q[2], q[3]}, col});
    }
  }

 private:
  void put(int x, int y, double z, Rgb c) {
    auto& d = depth_[static_cast<std::size_t>(y) * k_.width + x];
    if (z >= d) return;
    d = z;
    out_.set_rgb(y, x, c.r, c.g, c.b);
  }

  // Clips against the near plane, then fans the polygon.
  void triangle(const Triangle& tri) {
    std::array<Vector3d, 4> poly;
    int n = 0;
    for (int i = 0; i < 3; ++i) {
      const Vector3d& a = tri.v[i];
      const Vector3d& b = tri.v[(i + 1) % 3];
      const bool ina = a.z() >= kNear;
      const bool inb = b.z() >= kNear;
      if (ina) poly[n++] = a;
      if (ina != inb) {
        const double t = (kNear - a.z()) / (b.z() - a.z());
        poly[n++] = a + t * (b - a);
      }
    }
    for (int i = 1; i + 1 < n; ++i) fill(poly[0], poly[i], poly[i + 1], tri.color);
  }

  void fill(const Vector3d& a, const Vector3d& b, const Vector3d& c, Rgb color) {
    const std::array<Vector3d, 3> p{a, b, c};
    std::array<Vector2d, 3> s;
    std::array<double, 3> inv_z;
    for (int i = 0; i < 3; ++i) {
      inv_z[i] = 1.0 / p[i].z();
      s[i] = Vector2d(k_.focal * p[i].x() * inv_z[i] + k_.cx, k_.focal * p[i].y() * inv_z[i] + k_.cy);
    }
    const double area = (s[1] - s[0]).x() * (s[2] - s[0]).y() - (s[1] - s[0]).y() * (s[2] - s[0]).x();
    if (std::abs(area) < 1e-12) return;
    const double lo_x = std::min({s[0].x(), s[1].x(), s[2].x()});
    const double hi_x = std::max({s[0].x(), s[1].x(), s[2].x()});
    const double lo_y = std::min({s[0].y(), s[1].y(), s[2].y()});
    const double hi_y = std::max({s[0].y(), s[1].y(), s[2].y()});
    const int x0 = std::max(0, static_cast<int>(std::floor(lo_x - 0.5)));
    const int x1 = std::min(k_.width - 1, static_cast<int>(std::ceil(hi_x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(lo_y - 0.5)));
    const int y1 = std::min(k_.height - 1, static_cast<int>(std::ceil(hi_y - 0.5)));
    auto edge = [](const Vector2d& u, const Vector2d& v, double px, double py) {
      return (v.x() - u.x()) * (py - u.y()) - (v.y() - u.y()) * (px - u.x());
    };
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        double w0 = edge(s[1], s[2], px, py) / area;
        double w1 = edge(s[2], s[0], px, py) / area;
        double w2 = edge(s[0], s[1], px, py) / area;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double iz = w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2];
        put(x, y, 1.0 / iz, color);
      }
    }
  }

  const CameraPose& cam_;
  const Intrinsics& k_;
  Frame& out_;
  Eigen::Matrix3d rot_t_;
  std::vector<double> depth_;
};

std::array<Box, 2> actor_boxes(const SceneSpec& scene, const ActorState& a) {
  constexpr double head = 0.28;
  const double torso_h = std::max(0.2, a.body_height - a.lift - head);
  Box torso;
  torso.center = Vector3d(a.position.x(), a.position.y(), a.lift + 0.5 * torso_h);
  torso.size = Vector3d(0.45, 0.6, torso_h);
  torso.yaw = a.heading;
  torso.color = scene.actor_color;
  Box h;
  h.center = Vector3d(a.position.x(), a.position.y(), a.lift + torso_h + 0.5 * head);
  h.size = Vector3d(head, head, head);
  h.yaw = a.heading;
  h.color = scene.head_color;
  return {torso, h};
}

}  // namespace

Intrinsics Intrinsics::with_fov(int width, int height, double horizontal_fov_deg) {
  Intrinsics k;
  k.width = width;
  k.height = height;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  k.focal = 0.5 * width / std::tan(0.5 * horizontal_fov_deg * std::numbers::pi / 180.0);
  return k;
}

Pose CameraPose::to_pose() const {
  Pose p;
  p.position = {position.x(), position.y(), position.z()};
  p.orientation = {orientation.w(), orientation.x(), orientation.y(), orientation.z()};
  return p;
}

Eigen::Quaterniond look_rotation(const Vector3d& forward, const Vector3d& up) {
  const Vector3d f = forward.normalized();
  Vector3d right = f.cross(up);
  if (right.norm() < 1e-9) right = f.cross(Vector3d::UnitY());
  right.normalize();
  const Vector3d down = f.cross(right);
  Eigen::Matrix3d r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = f;
  return Eigen::Quaterniond(r).normalized();
}

std::optional<Vector2d> project(const CameraPose& cam, const Intrinsics& k, const Vector3d& world) {
  const Vector3d p = cam.orientation.toRotationMatrix().transpose() * (world - cam.position);
  if (p.z() <= kNear) return std::nullopt;
  return Vector2d(k.focal * p.x() / p.z() + k.cx, k.focal * p.y() / p.z() + k.cy);
}

Frame render_view(const SceneSpec& scene, const CameraPose& cam, const Intrinsics& k, const ActorState* actor) {
  if (!(std::abs(k.focal) > 0.0)) fail(ErrorKind::DegenerateCamera, "focal length must be nonzero");
  if (k.width <= 0 || k.height <= 0) fail(ErrorKind::DegenerateCamera, "image size must be positive");
  Frame out(k.height, k.width);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) out.set_rgb(y, x, scene.sky_color.r, scene.sky_color.g, scene.sky_color.b);
  }
  Rasterizer r(cam, k, out);
  if (scene.has_ground) r.ground(scene);
  for (const auto& b : scene.obstacles) r.box(b, scene.light_dir);
  if (actor) {
    for (const auto& b : actor_boxes(scene, *actor)) r.box(b, scene.light_dir);
  }
  return out;
}

}  // namespace egoexo::toygen

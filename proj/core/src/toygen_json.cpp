#include <string>

#include "egoexo/error.hpp"
#include "egoexo/toygen.hpp"
#include "json.hpp"

namespace egoexo::toygen {

using nlohmann::json;

namespace {

json rgb_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

Rgb rgb_from(const json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorKind::SchemaError, "color must be [r, g, b]");
  return Rgb{j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorKind::SchemaError, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json scene_json(const SceneSpec& s) {
  json obstacles = json::array();
  for (const auto& b : s.obstacles) {
    obstacles.push_back({{"center", vec_json(b.center)}, {"size", vec_json(b.size)}, {"yaw", b.yaw},
                         {"color", rgb_json(b.color)}});
  }
  return {{"has_ground", s.has_ground},
          {"ground_color", rgb_json(s.ground_color)},
          {"ground_alt_color", rgb_json(s.ground_alt_color)},
          {"tile_size", s.tile_size},
          {"ground_margin", s.ground_margin},
          {"sky_color", rgb_json(s.sky_color)},
          {"actor_color", rgb_json(s.actor_color)},
          {"head_color", rgb_json(s.head_color)},
          {"light_dir", vec_json(s.light_dir)},
          {"obstacles", obstacles},
          {"bounds", json::array({s.bounds.min_x, s.bounds.max_x, s.bounds.min_y, s.bounds.max_y})},
          {"actor_start", json::array({s.actor_start.x(), s.actor_start.y()})},
          {"actor_heading", s.actor_heading},
          {"rng_seed", s.rng_seed}};
}

SceneSpec scene_from(const json& j) {
  SceneSpec s;
  read_if(j, "has_ground", s.has_ground);
  if (j.contains("ground_color")) s.ground_color = rgb_from(j["ground_color"]);
  if (j.contains("ground_alt_color")) s.ground_alt_color = rgb_from(j["ground_alt_color"]);
  read_if(j, "tile_size", s.tile_size);
  read_if(j, "ground_margin", s.ground_margin);
  if (j.contains("sky_color")) s.sky_color = rgb_from(j["sky_color"]);
  if (j.contains("actor_color")) s.actor_color = rgb_from(j["actor_color"]);
  if (j.contains("head_color")) s.head_color = rgb_from(j["head_color"]);
  if (j.contains("light_dir")) s.light_dir = vec3_from(j["light_dir"]).normalized();
  if (j.contains("obstacles")) {
    for (const auto& o : j["obstacles"]) {
      Box b;
      if (o.contains("center")) b.center = vec3_from(o["center"]);
      if (o.contains("size")) b.size = vec3_from(o["size"]);
      read_if(o, "yaw", b.yaw);
      if (o.contains("color")) b.color = rgb_from(o["color"]);
      s.obstacles.push_back(b);
    }
  }
  if (j.contains("bounds")) {
    const auto& b = j["bounds"];
    if (!b.is_array() || b.size() != 4) fail(ErrorKind::SchemaError, "bounds must be [min_x, max_x, min_y, max_y]");
    s.bounds = Bounds{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  }
  if (j.contains("actor_start")) {
    const auto& a = j["actor_start"];
    if (!a.is_array() || a.size() != 2) fail(ErrorKind::SchemaError, "actor_start must be [x, y]");
    s.actor_start = {a[0].get<double>(), a[1].get<double>()};
  }
  read_if(j, "actor_heading", s.actor_heading);
  read_if(j, "rng_seed", s.rng_seed);
  return s;
}

json script_json(const ActionScript& a) {
  return {{"action", std::string(to_string(a.action))},
          {"duration", a.duration},
          {"speed", a.speed},
          {"turn_rate", a.turn_rate},
          {"wander", a.wander},
          {"standing_height", a.standing_height},
          {"crouch_height", a.crouch_height},
          {"jump_height", a.jump_height},
          {"jump_period", a.jump_period}};
}

ActionScript script_from(const json& j) {
  ActionScript a;
  if (j.contains("action")) a.action = parse_action(j["action"].get<std::string>());
  read_if(j, "duration", a.duration);
  read_if(j, "speed", a.speed);
  read_if(j, "turn_rate", a.turn_rate);
  read_if(j, "wander", a.wander);
  read_if(j, "standing_height", a.standing_height);
  read_if(j, "crouch_height", a.crouch_height);
  read_if(j, "jump_height", a.jump_height);
  read_if(j, "jump_period", a.jump_period);
  return a;
}

json options_json(const SequenceOptions& o) {
  return {{"id", o.id},
          {"scene_id", o.scene_id},
          {"actor_id", o.actor_id},
          {"split", std::string(to_string(o.split))},
          {"exo_kind", std::string(to_string(o.exo_kind))},
          {"image_size", o.image_size},
          {"jitter_max_deg", o.jitter_max_deg},
          {"exo_fov_deg", o.exo_fov_deg},
          {"ego_fov_deg", o.ego_fov_deg}};
}

SequenceOptions options_from(const json& j) {
  SequenceOptions o;
  read_if(j, "id", o.id);
  read_if(j, "scene_id", o.scene_id);
  read_if(j, "actor_id", o.actor_id);
  if (j.contains("split")) o.split = parse_split(j["split"].get<std::string>());
  if (j.contains("exo_kind")) o.exo_kind = parse_exo_kind(j["exo_kind"].get<std::string>());
  read_if(j, "image_size", o.image_size);
  read_if(j, "jitter_max_deg", o.jitter_max_deg);
  read_if(j, "exo_fov_deg", o.exo_fov_deg);
  read_if(j, "ego_fov_deg", o.ego_fov_deg);
  return o;
}

}  // namespace

SequenceRequest parse_sequence_request(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) fail(ErrorKind::SchemaError, "sequence spec must be a JSON object");
    SequenceRequest r;
    if (j.contains("scene")) r.scene = scene_from(j["scene"]);
    if (j.contains("script")) r.script = script_from(j["script"]);
    if (j.contains("sequence")) r.options = options_from(j["sequence"]);
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("sequence spec: ") + e.what());
  }
}

std::string to_json(const SequenceRequest& r) {
  return json{{"scene", scene_json(r.scene)}, {"script", script_json(r.script)}, {"sequence", options_json(r.options)}}
      .dump(2);
}

}  // namespace egoexo::toygen

#include "graspgen/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "graspgen/errors.hpp"

namespace grasp {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& pointer) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw SchemaError(pointer + "/" + key, "unknown key");
  }
}

double require_number(const json& j, const std::string& key, const std::string& pointer) {
  if (!j.contains(key)) throw SchemaError(pointer + "/" + key, "missing");
  if (!j[key].is_number()) throw SchemaError(pointer + "/" + key, "expected a number");
  return j[key].get<double>();
}

double optional_number(const json& j, const std::string& key, double fallback,
                       const std::string& pointer) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw SchemaError(pointer + "/" + key, "expected a number");
  return j[key].get<double>();
}

Vec3 vec3_from_json(const json& j, const std::string& pointer) {
  if (!j.is_array() || j.size() != 3)
    throw SchemaError(pointer, "expected an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(path, e.byte, e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out << j.dump(2) << "\n";
}

std::array<double, 16> pose_to_row_major(const RigidTransform& t) { return t.to_matrix(); }

RigidTransform pose_from_json(const json& j, const std::string& pointer) {
  if (!j.is_array() || j.size() != 16)
    throw SchemaError(pointer, "expected 16 floats, row-major 4x4");
  std::array<double, 16> m{};
  for (std::size_t i = 0; i < 16; ++i) {
    if (!j[i].is_number()) throw SchemaError(pointer, "expected 16 floats, row-major 4x4");
    m[i] = j[i].get<double>();
  }
  const RigidTransform t = RigidTransform::from_matrix(m);
  if (!t.is_valid(1e-6)) throw SchemaError(pointer, "not a rigid transform");
  return t;
}

SuctionCupParams cup_params_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("", "expected a JSON object");
  reject_unknown_keys(j,
                      {"radius", "mass_point_count", "pressure_difference",
                       "elastic_stiffness", "ring_stiffness", "break_threshold",
                       "max_projection_depth", "flat_normals"},
                      "");
  SuctionCupParams p;
  p.radius = optional_number(j, "radius", p.radius, "");
  if (j.contains("mass_point_count")) {
    if (!j["mass_point_count"].is_number_integer())
      throw SchemaError("/mass_point_count", "expected an integer");
    p.mass_point_count = j["mass_point_count"].get<int>();
  }
  p.pressure_difference = optional_number(j, "pressure_difference", p.pressure_difference, "");
  // Omitted stiffnesses follow the cup geometry actually given.
  const double recommended = SuctionCupParams::recommended_elastic_stiffness(
      p.radius, p.pressure_difference, p.mass_point_count);
  p.elastic_stiffness = optional_number(j, "elastic_stiffness", recommended, "");
  p.ring_stiffness = optional_number(j, "ring_stiffness", p.elastic_stiffness, "");
  p.break_threshold = optional_number(j, "break_threshold", p.break_threshold, "");
  p.max_projection_depth = optional_number(j, "max_projection_depth", 1.5 * p.radius, "");
  if (j.contains("flat_normals")) {
    if (!j["flat_normals"].is_boolean())
      throw SchemaError("/flat_normals", "expected a boolean");
    p.flat_normals = j["flat_normals"].get<bool>();
  }
  p.validate();
  return p;
}

SuctionCupParams load_cup_params(const std::string& path) {
  return cup_params_from_json(load_json_file(path));
}

json cup_params_to_json(const SuctionCupParams& p) {
  return json{{"radius", p.radius},
              {"mass_point_count", p.mass_point_count},
              {"pressure_difference", p.pressure_difference},
              {"elastic_stiffness", p.elastic_stiffness},
              {"ring_stiffness", p.ring_stiffness},
              {"break_threshold", p.break_threshold},
              {"max_projection_depth", p.max_projection_depth},
              {"flat_normals", p.flat_normals}};
}

GripperGeometry gripper_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("", "expected a JSON object");
  reject_unknown_keys(j,
                      {"finger_width", "finger_depth", "finger_height", "max_opening_width",
                       "palm_clearance", "friction", "contact_clearance"},
                      "");
  GripperGeometry g;
  g.finger_width = optional_number(j, "finger_width", g.finger_width, "");
  g.finger_depth = optional_number(j, "finger_depth", g.finger_depth, "");
  g.finger_height = optional_number(j, "finger_height", g.finger_height, "");
  g.max_opening = optional_number(j, "max_opening_width", g.max_opening, "");
  g.friction = optional_number(j, "friction", g.friction, "");
  g.contact_clearance = optional_number(j, "contact_clearance", g.contact_clearance, "");
  if (j.contains("palm_clearance"))
    g.palm_clearance = vec3_from_json(j["palm_clearance"], "/palm_clearance");
  g.validate();
  return g;
}

GripperGeometry load_gripper(const std::string& path) {
  return gripper_from_json(load_json_file(path));
}

json gripper_to_json(const GripperGeometry& g) {
  return json{{"finger_width", g.finger_width},
              {"finger_depth", g.finger_depth},
              {"finger_height", g.finger_height},
              {"max_opening_width", g.max_opening},
              {"palm_clearance", vec3_to_json(g.palm_clearance)},
              {"friction", g.friction},
              {"contact_clearance", g.contact_clearance}};
}

Scene load_scene(const std::string& path) {
  const json j = load_json_file(path);
  if (!j.is_object()) throw SchemaError("", "expected a JSON object");
  reject_unknown_keys(j, {"objects", "tote", "gravity"}, "");
  if (!j.contains("objects") || !j["objects"].is_array())
    throw SchemaError("/objects", "expected an array");

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::unordered_map<std::string, std::shared_ptr<const TriMesh>> cache;
  auto load_cached = [&](const std::string& mesh_path,
                         const std::string& pointer) -> std::shared_ptr<const TriMesh> {
    const std::string resolved = (base / mesh_path).string();
    auto it = cache.find(resolved);
    if (it != cache.end()) return it->second;
    try {
      auto mesh = std::make_shared<TriMesh>(load_mesh(resolved));
      cache.emplace(resolved, mesh);
      return mesh;
    } catch (const EmptyMesh&) {
      throw SchemaError(pointer, "mesh has no triangles: " + resolved);
    }
  };

  Scene scene;
  for (std::size_t i = 0; i < j["objects"].size(); ++i) {
    const json& o = j["objects"][i];
    const std::string ptr = "/objects/" + std::to_string(i);
    reject_unknown_keys(o, {"instance_id", "class_id", "mesh", "pose"}, ptr);
    SceneInstance inst;
    if (!o.contains("instance_id") || !o["instance_id"].is_number_integer())
      throw SchemaError(ptr + "/instance_id", "expected an integer");
    const long id = o["instance_id"].get<long>();
    if (id < 1 || id > 65535) throw SchemaError(ptr + "/instance_id", "must be in [1, 65535]");
    inst.instance_id = static_cast<std::uint16_t>(id);
    inst.class_id = o.contains("class_id") ? o["class_id"].get<int>() : 0;
    if (!o.contains("mesh") || !o["mesh"].is_string())
      throw SchemaError(ptr + "/mesh", "expected a path string");
    inst.mesh_path = o["mesh"].get<std::string>();
    inst.mesh = load_cached(inst.mesh_path, ptr + "/mesh");
    if (!o.contains("pose")) throw SchemaError(ptr + "/pose", "missing");
    inst.pose = pose_from_json(o["pose"], ptr + "/pose");
    scene.instances.push_back(std::move(inst));
  }
  if (j.contains("tote")) {
    const json& t = j["tote"];
    reject_unknown_keys(t, {"mesh", "pose"}, "/tote");
    Tote tote;
    if (!t.contains("mesh") || !t["mesh"].is_string())
      throw SchemaError("/tote/mesh", "expected a path string");
    tote.mesh_path = t["mesh"].get<std::string>();
    tote.mesh = load_cached(tote.mesh_path, "/tote/mesh");
    tote.pose = t.contains("pose") ? pose_from_json(t["pose"], "/tote/pose")
                                   : RigidTransform::identity();
    scene.tote = std::move(tote);
  }
  if (j.contains("gravity")) {
    scene.gravity_dir = normalized(vec3_from_json(j["gravity"], "/gravity"));
    if (norm(scene.gravity_dir) < 0.5) throw SchemaError("/gravity", "zero vector");
  }
  scene.validate();
  return scene;
}

Camera load_camera(const std::string& path) {
  const json j = load_json_file(path);
  if (!j.is_object()) throw SchemaError("", "expected a JSON object");
  reject_unknown_keys(j, {"width", "height", "fx", "fy", "cx", "cy", "pose", "near", "far"},
                      "");
  Camera cam;
  cam.width = static_cast<int>(require_number(j, "width", ""));
  cam.height = static_cast<int>(require_number(j, "height", ""));
  cam.fx = require_number(j, "fx", "");
  cam.fy = require_number(j, "fy", "");
  cam.cx = require_number(j, "cx", "");
  cam.cy = require_number(j, "cy", "");
  if (!j.contains("pose")) throw SchemaError("/pose", "missing");
  cam.pose = pose_from_json(j["pose"], "/pose");
  cam.near_clip = optional_number(j, "near", cam.near_clip, "");
  cam.far_clip = optional_number(j, "far", cam.far_clip, "");
  cam.validate();
  return cam;
}

std::map<std::string, std::vector<KeypointAnnotation>> load_keypoint_annotations(
    const std::string& path) {
  const json j = load_json_file(path);
  if (!j.is_object()) throw SchemaError("", "expected an object keyed by mesh path");
  std::map<std::string, std::vector<KeypointAnnotation>> out;
  for (const auto& [mesh_path, list] : j.items()) {
    if (!list.is_array()) throw SchemaError("/" + mesh_path, "expected an array");
    std::vector<KeypointAnnotation> anns;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string ptr = "/" + mesh_path + "/" + std::to_string(i);
      reject_unknown_keys(list[i], {"id_sem", "position"}, ptr);
      KeypointAnnotation a;
      if (!list[i].contains("id_sem") || !list[i]["id_sem"].is_number_integer())
        throw SchemaError(ptr + "/id_sem", "expected an integer");
      a.id_sem = list[i]["id_sem"].get<int>();
      if (!list[i].contains("position"))
        throw SchemaError(ptr + "/position", "missing");
      a.position = vec3_from_json(list[i]["position"], ptr + "/position");
      anns.push_back(a);
    }
    out.emplace(mesh_path, std::move(anns));
  }
  return out;
}

json pj_grasps_to_json(const std::vector<PjGraspCandidate>& grasps) {
  json arr = json::array();
  for (const auto& g : grasps) {
    json scores{{"antip", g.s_antip}, {"pj_anal", g.s_pj_anal}, {"pj_sim", nullptr}};
    scores["pj_soft"] = g.s_pj_soft ? json(*g.s_pj_soft) : json(nullptr);
    arr.push_back(json{{"gripper", "parallel_jaw"},
                       {"pose", pose_to_row_major(g.pose)},
                       {"width", g.width},
                       {"scores", scores},
                       {"collision_free", g.collision_free}});
  }
  return arr;
}

std::vector<PjGraspCandidate> pj_grasps_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("", "expected a JSON array of grasps");
  std::vector<PjGraspCandidate> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& o = j[i];
    const std::string ptr = "/" + std::to_string(i);
    if (!o.is_object() || o.value("gripper", "") != "parallel_jaw")
      throw SchemaError(ptr + "/gripper", "expected \"parallel_jaw\"");
    PjGraspCandidate g;
    if (!o.contains("pose")) throw SchemaError(ptr + "/pose", "missing");
    g.pose = pose_from_json(o["pose"], ptr + "/pose");
    g.width = require_number(o, "width", ptr);
    const json& s = o.at("scores");
    g.s_antip = s.value("antip", 0.0);
    g.s_pj_anal = s.value("pj_anal", 0.0);
    if (s.contains("pj_soft") && s["pj_soft"].is_number())
      g.s_pj_soft = s["pj_soft"].get<double>();
    g.collision_free = o.value("collision_free", false);
    // Contacts sit on the closing axis, half a width from the origin.
    g.closing_dir = g.pose.rotation.col(0);
    g.contact_a = g.pose.translation - g.closing_dir * (0.5 * g.width);
    g.contact_b = g.pose.translation + g.closing_dir * (0.5 * g.width);
    out.push_back(std::move(g));
  }
  return out;
}

json vacuum_grasps_to_json(const std::vector<VacuumGraspLabel>& grasps) {
  json arr = json::array();
  for (const auto& g : grasps) {
    Vec3 t1, t2;
    const Vec3 v = normalized(g.candidate.approach);
    orthonormal_basis(v, t1, t2);
    RigidTransform pose{Mat3::from_cols(t1, t2, v), g.candidate.contact};
    json scores{{"sc_seal", g.s_sc_seal}};
    scores["sc_sim"] = g.s_sc_sim ? json(*g.s_sc_sim) : json(nullptr);
    arr.push_back(json{{"gripper", "vacuum"},
                       {"pose", pose_to_row_major(pose)},
                       {"contact", vec3_to_json(g.candidate.contact)},
                       {"approach", vec3_to_json(v)},
                       {"scores", scores},
                       {"seal",
                        {{"success", g.success},
                         {"failure_reason", to_string(g.failure_reason)},
                         {"delta_l_max", g.delta_l_max},
                         {"vacuum_force", g.vacuum_force},
                         {"max_normal_lift", g.max_normal_lift}}}});
  }
  return arr;
}

std::vector<VacuumGraspLabel> vacuum_grasps_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("", "expected a JSON array of grasps");
  std::vector<VacuumGraspLabel> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& o = j[i];
    const std::string ptr = "/" + std::to_string(i);
    if (!o.is_object() || o.value("gripper", "") != "vacuum")
      throw SchemaError(ptr + "/gripper", "expected \"vacuum\"");
    VacuumGraspLabel g;
    if (!o.contains("contact")) throw SchemaError(ptr + "/contact", "missing");
    g.candidate.contact = vec3_from_json(o["contact"], ptr + "/contact");
    if (!o.contains("approach")) throw SchemaError(ptr + "/approach", "missing");
    g.candidate.approach = normalized(vec3_from_json(o["approach"], ptr + "/approach"));
    if (o.contains("scores")) {
      g.s_sc_seal = o["scores"].value("sc_seal", 0.0);
      if (o["scores"].contains("sc_sim") && o["scores"]["sc_sim"].is_number())
        g.s_sc_sim = o["scores"]["sc_sim"].get<double>();
    }
    if (o.contains("seal")) {
      g.success = o["seal"].value("success", false);
      g.delta_l_max = o["seal"].value("delta_l_max", 0.0);
      g.vacuum_force = o["seal"].value("vacuum_force", 0.0);
      g.max_normal_lift = o["seal"].value("max_normal_lift", 0.0);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace grasp

#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "graspgen/pj.hpp"
#include "graspgen/scene.hpp"
#include "graspgen/suction.hpp"

namespace grasp {

// All loaders validate strictly: unknown keys and malformed values raise
// SchemaError carrying the JSON pointer of the offending element.

SuctionCupParams cup_params_from_json(const nlohmann::json& j);
SuctionCupParams load_cup_params(const std::string& path);
nlohmann::json cup_params_to_json(const SuctionCupParams& p);

GripperGeometry gripper_from_json(const nlohmann::json& j);
GripperGeometry load_gripper(const std::string& path);
nlohmann::json gripper_to_json(const GripperGeometry& g);

// Mesh paths in scene files resolve relative to the scene file directory.
Scene load_scene(const std::string& path);
Camera load_camera(const std::string& path);

std::map<std::string, std::vector<KeypointAnnotation>> load_keypoint_annotations(
    const std::string& path);

// Parallel-jaw label array: one object per grasp with pose (16 floats,
// row-major), width, scores {antip, pj_anal, pj_soft, pj_sim}, and
// collision_free. pj_sim is reserved and always null here.
nlohmann::json pj_grasps_to_json(const std::vector<PjGraspCandidate>& grasps);
std::vector<PjGraspCandidate> pj_grasps_from_json(const nlohmann::json& j);

struct VacuumGraspLabel {
  VacuumGraspCandidate candidate;
  bool success = false;
  SealFailure failure_reason = SealFailure::None;
  double delta_l_max = 0.0;
  double vacuum_force = 0.0;
  double max_normal_lift = 0.0;
  double s_sc_seal = 0.0;
  std::optional<double> s_sc_sim;
};

nlohmann::json vacuum_grasps_to_json(const std::vector<VacuumGraspLabel>& grasps);
std::vector<VacuumGraspLabel> vacuum_grasps_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

std::array<double, 16> pose_to_row_major(const RigidTransform& t);
RigidTransform pose_from_json(const nlohmann::json& j, const std::string& pointer);

}  // namespace grasp

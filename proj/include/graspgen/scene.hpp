#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graspgen/geometry.hpp"
#include "graspgen/mesh.hpp"
#include "graspgen/pj.hpp"
#include "graspgen/suction.hpp"

namespace grasp {

struct SceneInstance {
  std::uint16_t instance_id = 0;  // > 0; 0 is background
  int class_id = 0;
  std::string mesh_path;
  std::shared_ptr<const TriMesh> mesh;
  RigidTransform pose;
};

struct Tote {
  std::string mesh_path;
  std::shared_ptr<const TriMesh> mesh;
  RigidTransform pose;
};

struct Scene {
  std::vector<SceneInstance> instances;
  std::optional<Tote> tote;
  Vec3 gravity_dir{0, 0, -1};  // unit; gravity is 9.81 m/s^2 along this

  void validate() const;  // unique positive ids, valid poses
  const SceneInstance* find(std::uint16_t instance_id) const;
};

struct Camera {
  int width = 1024, height = 1024;
  double fx = 1024, fy = 1024, cx = 512, cy = 512;
  RigidTransform pose;  // camera-to-world; camera looks along +z, y down
  double near_clip = 1e-4, far_clip = 1e4;

  void validate() const;

  Ray pixel_ray(int px, int py) const;  // through the pixel center
  // Continuous pixel coordinates and camera-frame depth; nullopt behind
  // the camera.
  std::optional<std::pair<Vec3, double>> project(const Vec3& world) const;
};

// Per-viewpoint instance maps. Masks are full-resolution uint16 images
// holding the instance id on covered pixels and 0 elsewhere.
struct InstanceMaps {
  int width = 0, height = 0;
  std::vector<std::uint16_t> visible;  // nearest-instance id image (tote = 0)
  std::vector<float> depth;            // z-depth, m; 0 = no hit

  struct PerInstance {
    std::uint16_t instance_id = 0;
    std::vector<std::uint16_t> amodal;  // this instance rendered alone
    std::size_t amodal_pixels = 0;
    std::size_t visible_pixels = 0;
    std::size_t occluded_pixels = 0;
    double occlusion_score = 0.0;       // occluded / amodal
    bool fully_hidden = false;          // amodal > 0, visible = 0
    bool in_view = false;               // amodal > 0
  };
  std::vector<PerInstance> instances;  // scene instance order
};

enum class Layer : std::uint8_t { Top, Secondary, Others };
const char* to_string(Layer layer);

struct LayerGraph {
  std::vector<Layer> layers;                      // instance order
  std::vector<std::pair<int, int>> edges;         // occluder index -> occluded index
};

struct DifficultyLevel {
  int level = 1;              // 1..5
  int layer_count = 0;        // distinct non-empty layers in the scene
  double max_occlusion = 0.0; // max occlusion score over instances
  bool all_complete = true;   // no instance visually crosscut
  bool classes_unique = true; // all class ids distinct
};

struct Keypoint {
  int id_sem = 0;
  double x = 0.0, y = 0.0;  // pixels
  int id_class = 0;
  std::uint16_t id_instance = 0;
  bool visible = false;
};

struct KeypointAnnotation {
  int id_sem = 0;
  Vec3 position;  // mesh-local
};

// Primary-ray rendering of the scene: visible instance ids (tote and
// background = 0), z-depth, and per-instance amodal masks rendered with
// all other instances removed. Deterministic.
InstanceMaps render_maps(const Scene& scene, const Camera& camera);

// m[i][j] = 1 where instance i covers pixels of j's occluded mask,
// -1 for the converse, 0 otherwise; antisymmetric with zero diagonal.
// Mutually occluding pairs resolve by larger covered-pixel count (tie:
// the earlier instance wins as occluder).
std::vector<int> relation_matrix(const InstanceMaps& maps);

// Occluder count per instance from the relation matrix: 0 -> top,
// 1 -> secondary, otherwise others; one edge per +1 entry.
LayerGraph layer_graph(const std::vector<int>& matrix, int count);

// Table-driven difficulty classification from measured scene features.
DifficultyLevel classify_difficulty(int layer_count, double max_occlusion,
                                    bool all_complete, bool classes_unique);

// Number of 4-connected components of the instance's visible mask,
// ignoring components smaller than min_component pixels.
int visible_component_count(const InstanceMaps& maps, std::uint16_t instance_id,
                            int min_component = 4);

struct SceneLabels {
  struct InstanceLabel {
    std::uint16_t instance_id = 0;
    int class_id = 0;
    std::size_t amodal_pixels = 0, visible_pixels = 0, occluded_pixels = 0;
    double occlusion_score = 0.0;
    bool fully_hidden = false, in_view = false, complete = true;
    Layer layer = Layer::Top;
  };
  std::vector<InstanceLabel> instances;
  std::vector<int> relation;  // N x N row-major
  std::vector<std::pair<int, int>> edges;
  DifficultyLevel difficulty;
};

SceneLabels compute_scene_labels(const Scene& scene, const InstanceMaps& maps);

// Mesh-local keypoints transformed into the scene, projected, and
// ray-checked for visibility (1 mm occlusion guard). Keypoints behind the
// camera are dropped.
std::vector<Keypoint> project_keypoints(
    const Scene& scene, const Camera& camera,
    const std::map<std::string, std::vector<KeypointAnnotation>>& annotations);

// Gaussian heatmap around the projected center of mass of one instance,
// peak value 1. Throws NotWatertight when mass properties are unavailable.
std::vector<float> com_heatmap(const Scene& scene, const Camera& camera,
                               int instance_index, double sigma_pixels, double density);

enum class GraspReject : std::uint8_t { None, Visibility, ApproachCollision };
const char* to_string(GraspReject r);

struct FilteredGrasp {
  std::size_t index = 0;  // index into the per-object label list
  bool kept = false;
  GraspReject cause = GraspReject::None;
};

struct GraspFilterConfig {
  double sweep_step = 5e-3;       // m, max spacing of swept collision samples
  double visibility_guard = 1e-3; // m
  GripperGeometry gripper;
  SuctionCupParams cup;
};

// Scene-context filtering of per-object grasp labels (mesh-local frames):
// a grasp is kept when its contact region is visible from the camera and
// a straight-line approach from above the scene, swept with the collision
// volume, stays clear of the other instances and the tote.
std::vector<FilteredGrasp> filter_pj_grasps(const Scene& scene, const Camera& camera,
                                            int instance_index,
                                            const std::vector<PjGraspCandidate>& grasps,
                                            const GraspFilterConfig& config);

std::vector<FilteredGrasp> filter_vacuum_grasps(
    const Scene& scene, const Camera& camera, int instance_index,
    const std::vector<VacuumGraspCandidate>& grasps, const GraspFilterConfig& config);

struct BinExtents {
  double x_min = -0.2, x_max = 0.2;
  double y_min = -0.3, y_max = 0.3;
};

// Non-physical scene synthesis for tests: objects placed sequentially at
// random yaw/xy, resting at the support height of whatever lies under
// their footprint; triangle-intersection rejection with retries.
// Throws PlacementFailed.
Scene sample_test_scene(
    const std::vector<std::pair<std::shared_ptr<const TriMesh>, int>>& object_set,
    std::size_t count, std::uint64_t seed, const BinExtents& extents);

}  // namespace grasp

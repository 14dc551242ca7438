#include "graspgen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "graspgen/collision.hpp"
#include "graspgen/errors.hpp"
#include "graspgen/kernels.hpp"
#include "graspgen/rng.hpp"

namespace grasp {

const char* to_string(Layer layer) {
  switch (layer) {
    case Layer::Top: return "top";
    case Layer::Secondary: return "secondary";
    case Layer::Others: return "others";
  }
  return "?";
}

const char* to_string(GraspReject r) {
  switch (r) {
    case GraspReject::None: return "none";
    case GraspReject::Visibility: return "visibility";
    case GraspReject::ApproachCollision: return "approach_collision";
  }
  return "?";
}

void Scene::validate() const {
  std::set<std::uint16_t> ids;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    if (inst.instance_id == 0)
      throw SchemaError("/objects/" + std::to_string(i) + "/instance_id", "must be > 0");
    if (!ids.insert(inst.instance_id).second)
      throw SchemaError("/objects/" + std::to_string(i) + "/instance_id", "duplicate id");
    if (!inst.pose.is_valid(1e-6))
      throw SchemaError("/objects/" + std::to_string(i) + "/pose",
                        "not a rigid transform");
    if (!inst.mesh)
      throw SchemaError("/objects/" + std::to_string(i) + "/mesh", "mesh not loaded");
  }
  if (tote && !tote->pose.is_valid(1e-6))
    throw SchemaError("/tote/pose", "not a rigid transform");
  if (norm(gravity_dir) < 1e-12) throw SchemaError("/gravity", "zero vector");
}

const SceneInstance* Scene::find(std::uint16_t instance_id) const {
  for (const auto& inst : instances)
    if (inst.instance_id == instance_id) return &inst;
  return nullptr;
}

void Camera::validate() const {
  if (width < 1 || height < 1) throw SchemaError("/width", "image size must be >= 1");
  if (!(fx > 0.0) || !(fy > 0.0)) throw SchemaError("/fx", "focal lengths must be > 0");
  if (!(near_clip > 0.0) || !(near_clip < far_clip))
    throw SchemaError("/near", "need 0 < near < far");
  if (!pose.is_valid(1e-6)) throw SchemaError("/pose", "not a rigid transform");
}

Ray Camera::pixel_ray(int px, int py) const {
  const double u = (static_cast<double>(px) + 0.5 - cx) / fx;
  const double v = (static_cast<double>(py) + 0.5 - cy) / fy;
  const Vec3 dir_cam = normalized(Vec3{u, v, 1.0});
  return {pose.translation, pose.rotation * dir_cam};
}

std::optional<std::pair<Vec3, double>> Camera::project(const Vec3& world) const {
  const Vec3 cam = pose.rotation.transposed() * (world - pose.translation);
  if (cam.z <= 0.0) return std::nullopt;
  return std::make_pair(Vec3{fx * cam.x / cam.z + cx, fy * cam.y / cam.z + cy, 0.0}, cam.z);
}

namespace {

struct SceneHit {
  int instance = -1;  // index into scene.instances; -1 = tote
  double distance = 0.0;
  double z_depth = 0.0;
};

Ray to_local(const RigidTransform& pose, const Ray& world) {
  const Mat3 rt = pose.rotation.transposed();
  return {rt * (world.origin - pose.translation), rt * world.direction};
}

// Nearest hit over instances (optionally the tote), skipping skip_index.
std::optional<SceneHit> scene_raycast(const Scene& scene, const Ray& ray, const Vec3& cam_z,
                                      double t_min, double t_max, bool include_tote,
                                      int skip_index = -2) {
  SceneHit best;
  double best_t = t_max;
  bool found = false;
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    if (static_cast<int>(i) == skip_index) continue;
    const auto& inst = scene.instances[i];
    const auto hit = inst.mesh->raycast(to_local(inst.pose, ray), t_min, best_t);
    if (hit && hit->distance < best_t) {
      best_t = hit->distance;
      best.instance = static_cast<int>(i);
      best.distance = hit->distance;
      found = true;
    }
  }
  if (include_tote && scene.tote) {
    const auto hit = scene.tote->mesh->raycast(to_local(scene.tote->pose, ray), t_min, best_t);
    if (hit && hit->distance < best_t) {
      best_t = hit->distance;
      best.instance = -1;
      best.distance = hit->distance;
      found = true;
    }
  }
  if (!found) return std::nullopt;
  best.z_depth = best.distance * dot(ray.direction, cam_z);
  return best;
}

bool scene_any_hit(const Scene& scene, const Ray& ray, double t_min, double t_max,
                   bool include_tote, int skip_index = -2) {
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    if (static_cast<int>(i) == skip_index) continue;
    const auto& inst = scene.instances[i];
    if (inst.mesh->raycast_any(to_local(inst.pose, ray), t_min, t_max)) return true;
  }
  if (include_tote && scene.tote)
    return scene.tote->mesh->raycast_any(to_local(scene.tote->pose, ray), t_min, t_max);
  return false;
}

// Pixel rectangle covering the instance's projection; full frame when any
// bound corner sits behind the camera.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
};

PixelRect projected_rect(const Camera& camera, const SceneInstance& inst) {
  const Aabb& b = inst.mesh->bounds();
  double lo_x = 1e30, lo_y = 1e30, hi_x = -1e30, hi_y = -1e30;
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner{(i & 1) ? b.hi.x : b.lo.x, (i & 2) ? b.hi.y : b.lo.y,
                      (i & 4) ? b.hi.z : b.lo.z};
    const auto p = camera.project(inst.pose.apply(corner));
    if (!p) return {0, 0, camera.width, camera.height};
    lo_x = std::min(lo_x, p->first.x);
    hi_x = std::max(hi_x, p->first.x);
    lo_y = std::min(lo_y, p->first.y);
    hi_y = std::max(hi_y, p->first.y);
  }
  PixelRect r;
  r.x0 = std::clamp(static_cast<int>(std::floor(lo_x)) - 1, 0, camera.width);
  r.y0 = std::clamp(static_cast<int>(std::floor(lo_y)) - 1, 0, camera.height);
  r.x1 = std::clamp(static_cast<int>(std::ceil(hi_x)) + 1, 0, camera.width);
  r.y1 = std::clamp(static_cast<int>(std::ceil(hi_y)) + 1, 0, camera.height);
  return r;
}

}  // namespace

InstanceMaps render_maps(const Scene& scene, const Camera& camera) {
  scene.validate();
  camera.validate();
  const int w = camera.width, h = camera.height;
  const std::size_t npix = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const Vec3 cam_z = camera.pose.rotation.col(2);

  InstanceMaps maps;
  maps.width = w;
  maps.height = h;
  maps.visible.assign(npix, 0);
  maps.depth.assign(npix, 0.0f);

  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const Ray ray = camera.pixel_ray(px, py);
      const auto hit = scene_raycast(scene, ray, cam_z, camera.near_clip,
                                     camera.far_clip, true);
      if (!hit) continue;
      const std::size_t p = static_cast<std::size_t>(py) * w + px;
      maps.depth[p] = static_cast<float>(hit->z_depth);
      if (hit->instance >= 0)
        maps.visible[p] = scene.instances[static_cast<std::size_t>(hit->instance)].instance_id;
    }
  }

  const auto& kern = kernels::active_kernels();
  maps.instances.resize(scene.instances.size());
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const auto& inst = scene.instances[i];
    auto& per = maps.instances[i];
    per.instance_id = inst.instance_id;
    per.amodal.assign(npix, 0);

    const PixelRect rect = projected_rect(camera, inst);
    for (int py = rect.y0; py < rect.y1; ++py) {
      for (int px = rect.x0; px < rect.x1; ++px) {
        const Ray ray = camera.pixel_ray(px, py);
        const auto hit =
            inst.mesh->raycast(to_local(inst.pose, ray), camera.near_clip, camera.far_clip);
        if (hit) per.amodal[static_cast<std::size_t>(py) * w + px] = inst.instance_id;
      }
    }

    per.amodal_pixels = kern.count_eq_u16(per.amodal.data(), npix, inst.instance_id);
    per.visible_pixels = kern.count_eq_u16(maps.visible.data(), npix, inst.instance_id);
    per.occluded_pixels = per.amodal_pixels - per.visible_pixels;
    per.in_view = per.amodal_pixels > 0;
    per.fully_hidden = per.in_view && per.visible_pixels == 0;
    if (!per.in_view) {
      per.occlusion_score = 0.0;
    } else if (per.fully_hidden) {
      // The plain quotient would be 1; report just below it and flag.
      per.occlusion_score =
          1.0 - 1.0 / static_cast<double>(per.amodal_pixels);
    } else {
      per.occlusion_score = static_cast<double>(per.occluded_pixels) /
                            static_cast<double>(per.amodal_pixels);
    }
  }
  return maps;
}

std::vector<int> relation_matrix(const InstanceMaps& maps) {
  const int n = static_cast<int>(maps.instances.size());
  const std::size_t npix = maps.visible.size();
  const auto& kern = kernels::active_kernels();

  // covered[i][j]: pixels where i is visible inside j's occluded mask.
  std::vector<std::size_t> covered(static_cast<std::size_t>(n) * n, 0);
  for (int j = 0; j < n; ++j) {
    const auto& pj = maps.instances[static_cast<std::size_t>(j)];
    if (!pj.in_view || pj.occluded_pixels == 0) continue;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      const std::uint16_t vi = maps.instances[static_cast<std::size_t>(i)].instance_id;
      // visible == i on a pixel of j's amodal mask implies i is in front:
      // j hit that ray too but lost the depth race.
      covered[static_cast<std::size_t>(i) * n + j] =
          kern.count_eq_pair_u16(maps.visible.data(), pj.amodal.data(), npix, vi,
                                 pj.instance_id);
    }
  }

  std::vector<int> m(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const std::size_t cij = covered[static_cast<std::size_t>(i) * n + j];
      const std::size_t cji = covered[static_cast<std::size_t>(j) * n + i];
      if (cij == 0 && cji == 0) continue;
      // Interlocked pairs keep the matrix antisymmetric via pixel majority.
      const bool i_on_top = cij >= cji;
      m[static_cast<std::size_t>(i) * n + j] = i_on_top ? 1 : -1;
      m[static_cast<std::size_t>(j) * n + i] = i_on_top ? -1 : 1;
    }
  }
  return m;
}

LayerGraph layer_graph(const std::vector<int>& matrix, int count) {
  LayerGraph g;
  g.layers.assign(static_cast<std::size_t>(count), Layer::Top);
  for (int k = 0; k < count; ++k) {
    int occluders = 0;
    for (int i = 0; i < count; ++i) {
      if (matrix[static_cast<std::size_t>(i) * count + k] == 1) {
        ++occluders;
        g.edges.emplace_back(i, k);
      }
    }
    g.layers[static_cast<std::size_t>(k)] =
        occluders == 0 ? Layer::Top : (occluders == 1 ? Layer::Secondary : Layer::Others);
  }
  return g;
}

DifficultyLevel classify_difficulty(int layer_count, double max_occlusion,
                                    bool all_complete, bool classes_unique) {
  DifficultyLevel d;
  d.layer_count = layer_count;
  d.max_occlusion = max_occlusion;
  d.all_complete = all_complete;
  d.classes_unique = classes_unique;
  if (classes_unique && all_complete)
    d.level = (layer_count <= 2 && max_occlusion <= 0.05) ? 1 : 2;
  else if (classes_unique)
    d.level = 3;
  else if (all_complete)
    d.level = 4;
  else
    d.level = 5;
  return d;
}

int visible_component_count(const InstanceMaps& maps, std::uint16_t instance_id,
                            int min_component) {
  const int w = maps.width, h = maps.height;
  std::vector<std::uint8_t> seen(maps.visible.size(), 0);
  int components = 0;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p0 = static_cast<std::size_t>(y) * w + x;
      if (seen[p0] || maps.visible[p0] != instance_id) continue;
      int size = 0;
      seen[p0] = 1;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        ++size;
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
          if (!seen[q] && maps.visible[q] == instance_id) {
            seen[q] = 1;
            queue.emplace_back(nx[k], ny[k]);
          }
        }
      }
      if (size >= min_component) ++components;
    }
  }
  return components;
}

SceneLabels compute_scene_labels(const Scene& scene, const InstanceMaps& maps) {
  const int n = static_cast<int>(scene.instances.size());
  SceneLabels labels;
  labels.relation = relation_matrix(maps);
  const LayerGraph graph = layer_graph(labels.relation, n);
  labels.edges = graph.edges;

  bool all_complete = true;
  bool classes_unique = true;
  double max_occlusion = 0.0;
  std::set<int> classes;
  std::set<Layer> layers_present;

  labels.instances.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& inst = scene.instances[static_cast<std::size_t>(i)];
    const auto& per = maps.instances[static_cast<std::size_t>(i)];
    auto& out = labels.instances[static_cast<std::size_t>(i)];
    out.instance_id = inst.instance_id;
    out.class_id = inst.class_id;
    out.amodal_pixels = per.amodal_pixels;
    out.visible_pixels = per.visible_pixels;
    out.occluded_pixels = per.occluded_pixels;
    out.occlusion_score = per.occlusion_score;
    out.fully_hidden = per.fully_hidden;
    out.in_view = per.in_view;
    out.layer = graph.layers[static_cast<std::size_t>(i)];
    out.complete =
        !per.in_view || visible_component_count(maps, inst.instance_id) == 1;

    if (!classes.insert(inst.class_id).second) classes_unique = false;
    if (per.in_view) {
      all_complete = all_complete && out.complete;
      max_occlusion = std::max(max_occlusion, per.occlusion_score);
      layers_present.insert(out.layer);
    }
  }
  labels.difficulty = classify_difficulty(static_cast<int>(layers_present.size()),
                                          max_occlusion, all_complete, classes_unique);
  return labels;
}

std::vector<Keypoint> project_keypoints(
    const Scene& scene, const Camera& camera,
    const std::map<std::string, std::vector<KeypointAnnotation>>& annotations) {
  std::vector<Keypoint> out;
  for (const auto& inst : scene.instances) {
    const auto it = annotations.find(inst.mesh_path);
    if (it == annotations.end()) continue;
    for (const auto& ann : it->second) {
      const Vec3 world = inst.pose.apply(ann.position);
      const auto proj = camera.project(world);
      if (!proj) continue;  // behind the camera: excluded
      Keypoint kp;
      kp.id_sem = ann.id_sem;
      kp.x = proj->first.x;
      kp.y = proj->first.y;
      kp.id_class = inst.class_id;
      kp.id_instance = inst.instance_id;
      const bool in_bounds =
          kp.x >= 0.0 && kp.x < camera.width && kp.y >= 0.0 && kp.y < camera.height;
      bool occluded = true;
      if (in_bounds) {
        const Vec3 origin = camera.pose.translation;
        const double dist = norm(world - origin);
        const Ray ray{origin, (world - origin) / dist};
        occluded = scene_any_hit(scene, ray, camera.near_clip, dist - 1e-3, true);
      }
      kp.visible = in_bounds && !occluded;
      out.push_back(kp);
    }
  }
  return out;
}

std::vector<float> com_heatmap(const Scene& scene, const Camera& camera,
                               int instance_index, double sigma_pixels, double density) {
  const auto& inst = scene.instances.at(static_cast<std::size_t>(instance_index));
  const MassProperties mp = inst.mesh->mass_properties(density);
  const Vec3 com_world = inst.pose.apply(mp.center_of_mass);
  const std::size_t npix =
      static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height);
  std::vector<float> map(npix, 0.0f);
  const auto proj = camera.project(com_world);
  if (!proj) return map;
  const double u = proj->first.x, v = proj->first.y;
  const double inv = 1.0 / (2.0 * sigma_pixels * sigma_pixels);
  // Separable Gaussian over pixel centers.
  std::vector<double> col(static_cast<std::size_t>(camera.width));
  for (int x = 0; x < camera.width; ++x) {
    const double dx = x + 0.5 - u;
    col[static_cast<std::size_t>(x)] = std::exp(-dx * dx * inv);
  }
  for (int y = 0; y < camera.height; ++y) {
    const double dy = y + 0.5 - v;
    const double row = std::exp(-dy * dy * inv);
    float* dst = map.data() + static_cast<std::size_t>(y) * camera.width;
    for (int x = 0; x < camera.width; ++x)
      dst[x] = static_cast<float>(row * col[static_cast<std::size_t>(x)]);
  }
  return map;
}

namespace {

bool point_visible(const Scene& scene, const Camera& camera, const Vec3& world,
                   double guard) {
  const auto proj = camera.project(world);
  if (!proj) return false;
  if (proj->first.x < 0 || proj->first.x >= camera.width || proj->first.y < 0 ||
      proj->first.y >= camera.height)
    return false;
  const Vec3 origin = camera.pose.translation;
  const double dist = norm(world - origin);
  return !scene_any_hit(scene, {origin, (world - origin) / dist}, camera.near_clip,
                        dist - guard, true);
}

// True if the oriented box collides with any scene geometry; the target
// instance can be skipped.
bool obb_hits_scene(const Scene& scene, const Obb& box, int skip_index) {
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    if (static_cast<int>(i) == skip_index) continue;
    const auto& inst = scene.instances[i];
    Obb local = box;
    local.pose = inst.pose.inverse().compose(box.pose);
    if (mesh_intersects_obb(*inst.mesh, local)) return true;
  }
  if (scene.tote) {
    Obb local = box;
    local.pose = scene.tote->pose.inverse().compose(box.pose);
    if (mesh_intersects_obb(*scene.tote->mesh, local)) return true;
  }
  return false;
}

double scene_travel_distance(const Scene& scene) {
  Aabb box;
  for (const auto& inst : scene.instances) {
    const Aabb b = inst.mesh->bounds();
    for (int i = 0; i < 8; ++i)
      box.expand(inst.pose.apply(Vec3{(i & 1) ? b.hi.x : b.lo.x, (i & 2) ? b.hi.y : b.lo.y,
                                      (i & 4) ? b.hi.z : b.lo.z}));
  }
  if (scene.tote) {
    const Aabb b = scene.tote->mesh->bounds();
    for (int i = 0; i < 8; ++i)
      box.expand(scene.tote->pose.apply(Vec3{(i & 1) ? b.hi.x : b.lo.x,
                                             (i & 2) ? b.hi.y : b.lo.y,
                                             (i & 4) ? b.hi.z : b.lo.z}));
  }
  return box.valid() ? norm(box.extent()) + 0.05 : 0.5;
}

}  // namespace

std::vector<FilteredGrasp> filter_pj_grasps(const Scene& scene, const Camera& camera,
                                            int instance_index,
                                            const std::vector<PjGraspCandidate>& grasps,
                                            const GraspFilterConfig& config) {
  const auto& inst = scene.instances.at(static_cast<std::size_t>(instance_index));
  const double travel = scene_travel_distance(scene);
  const int steps = std::max(1, static_cast<int>(std::ceil(travel / config.sweep_step)));
  const GripperGeometry& grip = config.gripper;

  std::vector<FilteredGrasp> out(grasps.size());
  for (std::size_t g = 0; g < grasps.size(); ++g) {
    out[g].index = g;
    const auto& grasp = grasps[g];
    const RigidTransform pose_world = inst.pose.compose(grasp.pose);
    const Vec3 ca = inst.pose.apply(grasp.contact_a);
    const Vec3 cb = inst.pose.apply(grasp.contact_b);

    if (!point_visible(scene, camera, ca, config.visibility_guard) &&
        !point_visible(scene, camera, cb, config.visibility_guard)) {
      out[g].cause = GraspReject::Visibility;
      continue;
    }

    const Vec3 approach = pose_world.rotation.col(2);
    const double fx = 0.5 * grasp.width + grip.contact_clearance + 0.5 * grip.finger_depth;
    bool collides = false;
    for (int s = steps; s >= 0 && !collides; --s) {
      const double back = travel * s / steps;
      RigidTransform step_pose = pose_world;
      step_pose.translation = pose_world.translation - approach * back;

      Obb finger{step_pose,
                 {0.5 * grip.finger_depth, 0.5 * grip.finger_width, 0.5 * grip.finger_height}};
      finger.pose.translation = step_pose.apply({fx, 0.0, -0.5 * grip.finger_height});
      Obb finger_b = finger;
      finger_b.pose.translation = step_pose.apply({-fx, 0.0, -0.5 * grip.finger_height});
      Obb palm{step_pose, grip.palm_clearance * 0.5};
      palm.pose.translation = step_pose.apply(
          {0.0, 0.0, -grip.finger_height - 0.5 * grip.palm_clearance.z});

      collides = obb_hits_scene(scene, finger, -2) || obb_hits_scene(scene, finger_b, -2) ||
                 obb_hits_scene(scene, palm, -2);
    }
    if (collides) {
      out[g].cause = GraspReject::ApproachCollision;
      continue;
    }
    out[g].kept = true;
  }
  return out;
}

std::vector<FilteredGrasp> filter_vacuum_grasps(
    const Scene& scene, const Camera& camera, int instance_index,
    const std::vector<VacuumGraspCandidate>& grasps, const GraspFilterConfig& config) {
  const auto& inst = scene.instances.at(static_cast<std::size_t>(instance_index));
  const double travel = scene_travel_distance(scene);
  const int steps = std::max(1, static_cast<int>(std::ceil(travel / config.sweep_step)));
  const double r = config.cup.radius;
  const double cup_h = std::max(2.0 * r, config.cup.max_projection_depth);
  const double standoff = 2e-3;

  std::vector<FilteredGrasp> out(grasps.size());
  for (std::size_t g = 0; g < grasps.size(); ++g) {
    out[g].index = g;
    const Vec3 contact = inst.pose.apply(grasps[g].contact);
    const Vec3 v = normalized(inst.pose.apply_vector(grasps[g].approach));

    if (!point_visible(scene, camera, contact, config.visibility_guard)) {
      out[g].cause = GraspReject::Visibility;
      continue;
    }

    Vec3 t1, t2;
    orthonormal_basis(v, t1, t2);
    const Mat3 frame = Mat3::from_cols(t1, t2, v);
    const Vec3 final_center = contact - v * (standoff + 0.5 * cup_h);
    bool collides = false;
    for (int s = steps; s >= 0 && !collides; --s) {
      const double back = travel * s / steps;
      const Obb cup{{frame, final_center - v * back}, {r, r, 0.5 * cup_h}};
      // The target conforms with the cup; only foreign geometry blocks it.
      collides = obb_hits_scene(scene, cup, instance_index);
    }
    if (collides) {
      out[g].cause = GraspReject::ApproachCollision;
      continue;
    }
    out[g].kept = true;
  }
  return out;
}

Scene sample_test_scene(
    const std::vector<std::pair<std::shared_ptr<const TriMesh>, int>>& object_set,
    std::size_t count, std::uint64_t seed, const BinExtents& extents) {
  if (count < 1 || object_set.empty())
    throw std::invalid_argument("sample_test_scene: count >= 1 and a non-empty object set");
  constexpr int kMaxRetries = 50;
  constexpr int kGrid = 6;

  Scene scene;
  Rng rng(seed);
  for (std::size_t slot = 0; slot < count; ++slot) {
    const auto& [mesh, class_id] = object_set[slot % object_set.size()];
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
      const double yaw = rng.uniform(0.0, 2.0 * kPi);
      const Mat3 rot = Mat3::axis_angle({0, 0, 1}, yaw);

      Aabb rotated;
      const Aabb& b = mesh->bounds();
      for (int i = 0; i < 8; ++i)
        rotated.expand(rot * Vec3{(i & 1) ? b.hi.x : b.lo.x, (i & 2) ? b.hi.y : b.lo.y,
                                  (i & 4) ? b.hi.z : b.lo.z});
      // Translation range keeping the rotated AABB inside the bin.
      const double tx_lo = extents.x_min - rotated.lo.x;
      const double tx_hi = extents.x_max - rotated.hi.x;
      const double ty_lo = extents.y_min - rotated.lo.y;
      const double ty_hi = extents.y_max - rotated.hi.y;
      if (tx_hi < tx_lo || ty_hi < ty_lo) continue;  // object larger than the bin
      const double cx = rng.uniform(tx_lo, tx_hi);
      const double cy = rng.uniform(ty_lo, ty_hi);

      // Support height: the tallest geometry under the footprint decides
      // where the object bottom rests.
      double support = 0.0;
      const double z_high = 10.0;
      for (int gy = 0; gy < kGrid; ++gy) {
        for (int gx = 0; gx < kGrid; ++gx) {
          const double sx = cx + rotated.lo.x + (gx + 0.5) * (rotated.hi.x - rotated.lo.x) / kGrid;
          const double sy = cy + rotated.lo.y + (gy + 0.5) * (rotated.hi.y - rotated.lo.y) / kGrid;
          const Ray down{{sx, sy, z_high}, {0, 0, -1}};
          for (const auto& other : scene.instances) {
            const auto hit = other.mesh->raycast(to_local(other.pose, down));
            if (hit) support = std::max(support, z_high - hit->distance);
          }
        }
      }

      RigidTransform pose{rot, {cx, cy, support - rotated.lo.z}};
      bool overlaps = false;
      for (const auto& other : scene.instances) {
        if (meshes_intersect(*mesh, pose, *other.mesh, other.pose)) {
          overlaps = true;
          break;
        }
      }
      if (overlaps) continue;

      SceneInstance inst;
      inst.instance_id = static_cast<std::uint16_t>(slot + 1);
      inst.class_id = class_id;
      inst.mesh = mesh;
      inst.pose = pose;
      scene.instances.push_back(std::move(inst));
      placed = true;
    }
    if (!placed) throw PlacementFailed(static_cast<int>(slot));
  }
  return scene;
}

}  // namespace grasp

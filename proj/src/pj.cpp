#include "graspgen/pj.hpp"

#include <algorithm>
#include <cmath>

#include "graspgen/collision.hpp"
#include "graspgen/errors.hpp"
#include "graspgen/rng.hpp"

namespace grasp {

void GripperGeometry::validate() const {
  if (!(max_opening > 0.0)) throw SchemaError("/max_opening_width", "must be > 0");
  if (!(friction > 0.0)) throw SchemaError("/friction", "must be > 0");
  if (!(finger_width > 0.0) || !(finger_depth > 0.0) || !(finger_height > 0.0))
    throw SchemaError("/finger", "finger dimensions must be > 0");
  if (!(palm_clearance.x > 0.0) || !(palm_clearance.y > 0.0) || !(palm_clearance.z > 0.0))
    throw SchemaError("/palm_clearance", "dimensions must be > 0");
}

namespace {

// Exit contact: farthest hit within w_max along the ray from `from`.
std::optional<RayHit> find_exit(const TriMesh& mesh, const Vec3& from, const Vec3& dir,
                                double w_max) {
  const auto hits = mesh.raycast_all({from, dir}, kRayMinDistance, w_max);
  if (hits.empty()) return std::nullopt;
  return hits.back();
}

std::optional<AntipodalContact> check_line(const TriMesh& mesh, const Vec3& entry,
                                           const Vec3& entry_normal, const Vec3& dir,
                                           double mu, double w_max) {
  const auto exit = find_exit(mesh, entry, dir, w_max);
  if (!exit) return std::nullopt;
  // Fingertips press on facets, so the cone test runs against facet
  // normals (interpolated normals smear hard edges on coarse meshes).
  const Vec3 exit_normal = mesh.triangle_normals()[exit->triangle];
  const double cos_cone = std::cos(std::atan(mu));
  if (dot(dir, -entry_normal) < cos_cone) return std::nullopt;
  if (dot(dir, exit_normal) < cos_cone) return std::nullopt;
  AntipodalContact c;
  c.point_a = entry;
  c.normal_a = entry_normal;
  c.point_b = exit->point;
  c.normal_b = exit_normal;
  c.line = dir;
  c.width = exit->distance;
  return c;
}

}  // namespace

std::optional<AntipodalContact> antipodal_check(const TriMesh& mesh, const Vec3& contact_a,
                                                const Vec3& normal_a, double mu,
                                                double w_max) {
  return check_line(mesh, contact_a, normalized(normal_a), -normalized(normal_a), mu, w_max);
}

double robust_antipodal_score(const TriMesh& mesh, const Vec3& contact, const Vec3& normal,
                              double mu, double w_max, int attempts, double angle_sigma,
                              double translation_sigma, std::uint64_t seed) {
  if (attempts < 1) throw std::invalid_argument("robust_antipodal_score: attempts >= 1");
  Rng rng(seed);
  const Vec3 n = normalized(normal);
  const Vec3 base_dir = -n;
  Vec3 t1, t2;
  orthonormal_basis(n, t1, t2);
  // Entry re-anchor standoff; half the gripper envelope above the surface.
  const double standoff = 0.5 * w_max;

  int successes = 0;
  for (int k = 0; k < attempts; ++k) {
    const double psi = rng.uniform(0.0, 2.0 * kPi);
    const double ang = rng.normal() * angle_sigma;
    const double off1 = rng.normal() * translation_sigma;
    const double off2 = rng.normal() * translation_sigma;

    const Vec3 axis = t1 * std::cos(psi) + t2 * std::sin(psi);
    const Vec3 dir = Mat3::axis_angle(axis, ang) * base_dir;
    const Vec3 start = contact + t1 * off1 + t2 * off2 - dir * standoff;

    const auto entry = mesh.raycast({start, dir});
    if (!entry) continue;
    const Vec3 entry_normal = mesh.triangle_normals()[entry->triangle];
    if (check_line(mesh, entry->point, entry_normal, dir, mu, w_max)) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(attempts);
}

std::vector<PjGraspCandidate> expand_poses(const AntipodalContact& contact, double s_antip,
                                           int count) {
  if (count < 1) throw std::invalid_argument("expand_poses: count >= 1");
  const Vec3 x = contact.line;
  Vec3 t1, t2;
  orthonormal_basis(x, t1, t2);
  const Vec3 mid = (contact.point_a + contact.point_b) * 0.5;

  std::vector<PjGraspCandidate> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int l = 0; l < count; ++l) {
    const double phi = 2.0 * kPi * l / count;
    const Vec3 approach = t1 * std::cos(phi) + t2 * std::sin(phi);
    PjGraspCandidate g;
    g.contact_a = contact.point_a;
    g.contact_b = contact.point_b;
    g.closing_dir = x;
    g.width = contact.width;
    g.s_antip = s_antip;
    g.s_pj_anal = s_antip;
    g.pose.rotation = Mat3::from_cols(x, cross(approach, x), approach);
    g.pose.translation = mid;
    out.push_back(g);
  }
  return out;
}

bool gripper_collision_check(const TriMesh& mesh, const RigidTransform& pose, double width,
                             const GripperGeometry& gripper) {
  const double eps = gripper.contact_clearance;
  const double fx = 0.5 * width + eps + 0.5 * gripper.finger_depth;

  Obb finger_a{pose, {0.5 * gripper.finger_depth, 0.5 * gripper.finger_width,
                      0.5 * gripper.finger_height}};
  finger_a.pose.translation = pose.apply({fx, 0.0, -0.5 * gripper.finger_height});
  Obb finger_b = finger_a;
  finger_b.pose.translation = pose.apply({-fx, 0.0, -0.5 * gripper.finger_height});
  Obb palm{pose, gripper.palm_clearance * 0.5};
  palm.pose.translation =
      pose.apply({0.0, 0.0, -gripper.finger_height - 0.5 * gripper.palm_clearance.z});

  return !mesh_intersects_obb(mesh, finger_a) && !mesh_intersects_obb(mesh, finger_b) &&
         !mesh_intersects_obb(mesh, palm);
}

std::vector<PjGraspCandidate> sample_pj_grasps(const TriMesh& mesh,
                                               const GripperGeometry& gripper,
                                               const PjSampleConfig& config,
                                               std::uint64_t seed) {
  gripper.validate();
  if (config.contact_samples < 1 || config.attempts < 1 || config.poses_per_contact < 1)
    throw std::invalid_argument("sample_pj_grasps: invalid config");

  const auto samples = mesh.sample_surface(config.contact_samples, derive_seed(seed, 0xC0));
  std::vector<PjGraspCandidate> grasps;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto nominal =
        antipodal_check(mesh, s.point, s.normal, gripper.friction, gripper.max_opening);
    if (!nominal) continue;
    const double score = robust_antipodal_score(
        mesh, s.point, s.normal, gripper.friction, gripper.max_opening, config.attempts,
        config.angle_sigma, config.translation_sigma, derive_seed(seed, i));
    if (score <= 0.0) continue;
    for (auto& g : expand_poses(*nominal, score, config.poses_per_contact)) {
      if (!gripper_collision_check(mesh, g.pose, g.width, gripper)) continue;
      g.collision_free = true;
      grasps.push_back(std::move(g));
    }
  }
  std::stable_sort(grasps.begin(), grasps.end(),
                   [](const PjGraspCandidate& a, const PjGraspCandidate& b) {
                     return a.s_pj_anal > b.s_pj_anal;
                   });
  if (grasps.size() > config.max_grasps) grasps.resize(config.max_grasps);
  return grasps;
}

}  // namespace grasp

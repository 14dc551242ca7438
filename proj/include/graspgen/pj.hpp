#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "graspgen/geometry.hpp"
#include "graspgen/mesh.hpp"

namespace grasp {

// Two-finger gripper, Franka-like defaults. Finger box extents in the
// grasp frame: depth along the closing axis, width tangential, height
// along the approach axis.
struct GripperGeometry {
  double finger_width = 0.02;    // m
  double finger_depth = 0.01;    // m
  double finger_height = 0.045;  // m
  double max_opening = 0.08;     // m, w_max
  Vec3 palm_clearance{0.10, 0.03, 0.02};  // m, box behind the finger roots
  double friction = 0.4;
  double contact_clearance = 5e-4;  // m, gap between finger pad and contact

  void validate() const;  // throws SchemaError
};

struct AntipodalContact {
  Vec3 point_a, normal_a;
  Vec3 point_b, normal_b;
  Vec3 line;      // unit, a -> b
  double width;   // m
};

// Grasp frame: origin at the contact midpoint, x = closing direction,
// z = approach direction, y = z cross x.
struct PjGraspCandidate {
  Vec3 contact_a, contact_b;
  Vec3 closing_dir;
  RigidTransform pose;
  double width = 0.0;
  double s_antip = 0.0;
  double s_pj_anal = 0.0;
  std::optional<double> s_pj_soft;  // filled when mass properties are known
  bool collision_free = false;
};

struct PjSampleConfig {
  std::size_t max_grasps = 5000;
  std::size_t contact_samples = 1000;
  int attempts = 5;                       // N jittered antipodal checks per contact
  double angle_sigma = 8.0 * kPi / 180.0; // rad
  double translation_sigma = 0.002;       // m
  int poses_per_contact = 12;             // L rotations about the closing axis
};

// Casts from contact_a along -normal_a through the mesh; the opposing
// contact is the farthest exit within w_max. Antipodal iff the contact
// line lies inside both friction cones (half-angle atan(mu)).
std::optional<AntipodalContact> antipodal_check(const TriMesh& mesh, const Vec3& contact_a,
                                                const Vec3& normal_a, double mu,
                                                double w_max);

// Fraction of `attempts` jittered antipodal checks that succeed.
// Jitter: approach rotated by N(0, angle_sigma) about a random axis
// perpendicular to the approach, start point shifted by N(0, t_sigma)
// in the tangent plane. Deterministic given seed.
double robust_antipodal_score(const TriMesh& mesh, const Vec3& contact, const Vec3& normal,
                              double mu, double w_max, int attempts, double angle_sigma,
                              double translation_sigma, std::uint64_t seed);

// L poses uniformly spaced about the closing axis; every pose shares the
// contacts and inherits s_pj_anal = s_antip.
std::vector<PjGraspCandidate> expand_poses(const AntipodalContact& contact, double s_antip,
                                           int count);

// True when neither finger box nor the palm box intersects the mesh with
// the gripper opened to `width` at `pose`.
bool gripper_collision_check(const TriMesh& mesh, const RigidTransform& pose, double width,
                             const GripperGeometry& gripper);

// Surface sampling -> robust antipodal -> pose expansion -> collision
// filter; sorted by s_pj_anal descending (stable in sampling order) and
// capped at max_grasps. Deterministic given seed.
std::vector<PjGraspCandidate> sample_pj_grasps(const TriMesh& mesh,
                                               const GripperGeometry& gripper,
                                               const PjSampleConfig& config,
                                               std::uint64_t seed);

}  // namespace grasp

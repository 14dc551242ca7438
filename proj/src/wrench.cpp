#include "graspgen/wrench.hpp"

#include <algorithm>
#include <cmath>

#include "graspgen/errors.hpp"

namespace grasp {

namespace {
double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }
}  // namespace

WrenchScore vacuum_wrench_score(const Vec3& contact, const Mat3& contact_frame,
                                const Vec3& center_of_mass, double mass,
                                const SuctionCupParams& cup, const Vec3& gravity_dir,
                                const VacuumWrenchConfig& config) {
  if (!(mass > 0.0)) throw NonPositiveMass();
  const Vec3 g = normalized(gravity_dir) * (mass * kGravity);
  const Vec3 torque_world = cross(center_of_mass - contact, g);
  const Vec3 torque = contact_frame.transposed() * torque_world;

  const double f_p = cup.vacuum_force();
  const Vec3 limits{f_p * cup.radius, f_p * cup.radius,
                    config.cup_friction * f_p * cup.radius};

  WrenchScore score;
  score.torque = {std::abs(torque.x), std::abs(torque.y), std::abs(torque.z)};
  score.limits = limits;
  score.s = 1.0;
  for (int a = 0; a < 3; ++a)
    score.s = std::min(score.s, clamp01(1.0 - score.torque[a] / limits[a]));
  return score;
}

double soft_finger_score(const PjGraspCandidate& grasp, const Vec3& center_of_mass,
                         double mass, const Vec3& gravity_dir,
                         const SoftFingerConfig& config) {
  if (!(mass > 0.0)) throw NonPositiveMass();
  const Vec3 g = normalized(gravity_dir) * (mass * kGravity);
  const Vec3 mid = (grasp.contact_a + grasp.contact_b) * 0.5;
  const double torque_axis = dot(cross(center_of_mass - mid, g), grasp.closing_dir);
  const double limit = 2.0 * config.torsion_coefficient * config.squeeze_force;
  return clamp01(1.0 - std::abs(torque_axis) / limit);
}

}  // namespace grasp

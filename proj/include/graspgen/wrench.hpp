#pragma once

#include "graspgen/geometry.hpp"
#include "graspgen/pj.hpp"
#include "graspgen/suction.hpp"

namespace grasp {

inline constexpr double kGravity = 9.81;  // m/s^2

struct WrenchScore {
  double s = 0.0;      // [0, 1]
  Vec3 torque;         // N*m, magnitudes per contact-frame axis
  Vec3 limits;         // N*m, resist limit per axis
};

struct VacuumWrenchConfig {
  double cup_friction = 0.5;  // torsional limit factor about the approach axis
};

struct SoftFingerConfig {
  double squeeze_force = 40.0;        // N, configured squeeze per finger
  double torsion_coefficient = 5e-3;  // m, torque limit = 2 * gamma * f_n
};

// Gravity-torque score for a vacuum contact. contact_frame columns are
// (tangent1, tangent2, approach); the torque of the gravity wrench about
// the contact is compared per axis against bending limits F_p * r and the
// torsional limit cup_friction * F_p * r.
WrenchScore vacuum_wrench_score(const Vec3& contact, const Mat3& contact_frame,
                                const Vec3& center_of_mass, double mass,
                                const SuctionCupParams& cup, const Vec3& gravity_dir,
                                const VacuumWrenchConfig& config = {});

// Soft-finger torque score about the closing axis through the contact
// midpoint; the torsional friction limit is 2 * gamma * squeeze_force.
double soft_finger_score(const PjGraspCandidate& grasp, const Vec3& center_of_mass,
                         double mass, const Vec3& gravity_dir,
                         const SoftFingerConfig& config = {});

}  // namespace grasp

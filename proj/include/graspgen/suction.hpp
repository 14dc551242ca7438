#pragma once

#include <cstdint>
#include <vector>

#include "graspgen/geometry.hpp"
#include "graspgen/mesh.hpp"

namespace grasp {

// Spring-mass suction cup: n mass points on a ring of radius r, nearest
// neighbors joined by ring springs, each point joined to the rigid cup base
// by an elastic spring along the approach axis. Only the stiffness ratio
// k_r/k_e and the break threshold relative to the vacuum force affect the
// seal verdict, so calibration works on those two dimensionless parameters
// with k_e pinned to 1 N/m.
struct SuctionCupParams {
  // Fraction of the radius by which the full vacuum force compresses the
  // cup axially; fixes the elastic scale so that the verdict depends only
  // on k_r/k_e, eps_break/F_p, and geometry relative to r.
  static constexpr double kComplianceFraction = 0.25;

  static constexpr double recommended_elastic_stiffness(double radius,
                                                        double pressure_difference,
                                                        int mass_point_count) {
    const double f_p = pressure_difference * kPi * radius * radius;
    return f_p / (kComplianceFraction * radius * mass_point_count);
  }

  double radius = 0.01;                // m
  int mass_point_count = 32;           // even, >= 8
  double pressure_difference = 70e3;   // Pa
  double elastic_stiffness =
      recommended_elastic_stiffness(0.01, 70e3, 32);  // N/m per spring
  double ring_stiffness = elastic_stiffness;          // N/m, ratio 1 by default
  double break_threshold = 0.0;        // N, >= 0
  double max_projection_depth = 0.015; // m, bound on rim sag below first contact
  bool flat_normals = false;           // facet normals for the liftoff test

  // Vacuum force F_p = dp * pi * r^2.
  double vacuum_force() const { return pressure_difference * kPi * radius * radius; }

  // Rest length of a ring spring (chord of the regular n-gon).
  double ring_rest_length() const {
    return 2.0 * radius * std::sin(kPi / mass_point_count);
  }

  // Throws SchemaError naming the offending field.
  void validate() const;
};

struct VacuumGraspCandidate {
  Vec3 contact;   // on the surface, m
  Vec3 approach;  // unit vector, cup -> surface
};

enum class SealFailure : std::uint8_t { None, RayMiss, DepthExceeded, ForceLiftoff };

const char* to_string(SealFailure f);

struct CupMassPoint {
  Vec3 rest;           // rim position before projection
  Vec3 projected;      // position on the surface after projection
  Vec3 normal;         // outward surface normal at the projected point
  double l = 0.0;      // hit distance relative to the first contact, min over i = 0
  Vec3 ring_force;     // f_r
  Vec3 elastic_force;  // f_e
  Vec3 contact_force;  // f_p = -(f_r + f_e)
  double normal_lift = 0.0;  // (f_r + f_e) . normal; > threshold means liftoff
  bool hit = false;
};

struct CupProjection {
  SealFailure failure = SealFailure::None;  // None, RayMiss or DepthExceeded
  std::vector<CupMassPoint> points;
  std::vector<int> failed_indices;          // misses / over-depth points
  Vec3 approach;
  bool ok() const { return failure == SealFailure::None; }
};

struct SealEvaluation {
  bool success = false;
  SealFailure failure_reason = SealFailure::None;
  std::vector<CupMassPoint> points;
  double delta_l_max = 0.0;   // maximum elastic compression
  double vacuum_force = 0.0;  // F_p
  double max_normal_lift = 0.0;
  std::vector<int> offending_indices;
  Vec3 force_residual;        // sum f_r + f_p + f_e, ~0 when equilibrium was solved
};

// Rest rim: n points on the circle of radius r perpendicular to the
// approach, centered max_projection_depth above the contact along -v.
std::vector<Vec3> build_cup_rim(const SuctionCupParams& params,
                                const VacuumGraspCandidate& candidate);

// Casts every rim point along the approach onto the mesh. l_i is measured
// from the nearest hit; the projection fails with RayMiss when a rim ray
// misses and DepthExceeded when any l_i exceeds max_projection_depth.
CupProjection project_cup(const TriMesh& mesh, const SuctionCupParams& params,
                          const VacuumGraspCandidate& candidate);

// Static force balance of the projected rim. Elastic forces act along the
// approach with magnitude k_e * ((F_p/k_e + sum l_i)/n - l_i); ring forces
// come from the deformed ring; contact forces close the local equilibrium.
// Pre: projection.ok(). Throws NonPositiveStiffness.
SealEvaluation solve_equilibrium(const CupProjection& projection,
                                 const SuctionCupParams& params);

// Seal verdict: the seal holds while no mass point is lifted off, i.e.
// while the spring resultant f_r + f_e has component at most break_threshold
// along the outward surface normal at every point. Updates evaluation in
// place and returns success.
bool check_seal(SealEvaluation& evaluation, const SuctionCupParams& params);

// build -> project -> solve -> check. Pure and deterministic.
SealEvaluation evaluate_seal(const TriMesh& mesh, const SuctionCupParams& params,
                             const VacuumGraspCandidate& candidate);

// Area-uniform candidates with approach = -surface normal, each evaluated.
// Deterministic given seed. Pre: count >= 1.
std::vector<std::pair<VacuumGraspCandidate, SealEvaluation>> sample_vacuum_candidates(
    const TriMesh& mesh, const SuctionCupParams& params, std::size_t count,
    std::uint64_t seed);

}  // namespace grasp

#include "graspgen/suction.hpp"

#include <cmath>
#include <stdexcept>

#include "graspgen/errors.hpp"
#include "graspgen/rng.hpp"

namespace grasp {

const char* to_string(SealFailure f) {
  switch (f) {
    case SealFailure::None: return "none";
    case SealFailure::RayMiss: return "ray_miss";
    case SealFailure::DepthExceeded: return "depth_exceeded";
    case SealFailure::ForceLiftoff: return "force_liftoff";
  }
  return "?";
}

void SuctionCupParams::validate() const {
  if (!(radius > 0.0)) throw SchemaError("/radius", "must be > 0");
  if (mass_point_count < 8) throw SchemaError("/mass_point_count", "must be >= 8");
  if (mass_point_count % 2 != 0) throw SchemaError("/mass_point_count", "must be even");
  if (!(pressure_difference > 0.0))
    throw SchemaError("/pressure_difference", "must be > 0");
  if (!(elastic_stiffness > 0.0)) throw SchemaError("/elastic_stiffness", "must be > 0");
  if (!(ring_stiffness > 0.0)) throw SchemaError("/ring_stiffness", "must be > 0");
  if (break_threshold < 0.0) throw SchemaError("/break_threshold", "must be >= 0");
  if (!(max_projection_depth > 0.0))
    throw SchemaError("/max_projection_depth", "must be > 0");
}

std::vector<Vec3> build_cup_rim(const SuctionCupParams& params,
                                const VacuumGraspCandidate& candidate) {
  params.validate();
  const Vec3 v = normalized(candidate.approach);
  Vec3 t1, t2;
  orthonormal_basis(v, t1, t2);
  const Vec3 center = candidate.contact - v * params.max_projection_depth;
  const int n = params.mass_point_count;
  std::vector<Vec3> rim(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * kPi * i / n;
    rim[static_cast<std::size_t>(i)] =
        center + (t1 * std::cos(phi) + t2 * std::sin(phi)) * params.radius;
  }
  return rim;
}

CupProjection project_cup(const TriMesh& mesh, const SuctionCupParams& params,
                          const VacuumGraspCandidate& candidate) {
  const std::vector<Vec3> rim = build_cup_rim(params, candidate);
  const Vec3 v = normalized(candidate.approach);

  CupProjection proj;
  proj.approach = v;
  proj.points.resize(rim.size());

  double min_distance = std::numeric_limits<double>::infinity();
  std::vector<double> distances(rim.size(), 0.0);
  for (std::size_t i = 0; i < rim.size(); ++i) {
    auto& pt = proj.points[i];
    pt.rest = rim[i];
    const auto hit = mesh.raycast({rim[i], v});
    if (!hit) {
      proj.failed_indices.push_back(static_cast<int>(i));
      continue;
    }
    pt.hit = true;
    pt.projected = hit->point;
    pt.normal = params.flat_normals ? mesh.triangle_normals()[hit->triangle]
                                    : mesh.shading_normal(hit->triangle, hit->barycentric);
    distances[i] = hit->distance;
    min_distance = std::min(min_distance, hit->distance);
  }
  if (!proj.failed_indices.empty()) {
    proj.failure = SealFailure::RayMiss;
    return proj;
  }
  for (std::size_t i = 0; i < rim.size(); ++i)
    proj.points[i].l = distances[i] - min_distance;

  // The cup can only stretch so far past its first contact.
  for (std::size_t i = 0; i < rim.size(); ++i) {
    if (proj.points[i].l > params.max_projection_depth)
      proj.failed_indices.push_back(static_cast<int>(i));
  }
  if (!proj.failed_indices.empty()) proj.failure = SealFailure::DepthExceeded;
  return proj;
}

SealEvaluation solve_equilibrium(const CupProjection& projection,
                                 const SuctionCupParams& params) {
  if (!(params.elastic_stiffness > 0.0) || !(params.ring_stiffness > 0.0))
    throw NonPositiveStiffness();
  if (!projection.ok())
    throw std::logic_error("solve_equilibrium requires a successful projection");

  const std::size_t n = projection.points.size();
  const double k_e = params.elastic_stiffness;
  const double k_r = params.ring_stiffness;
  const double f_p = params.vacuum_force();
  const double rest_len = params.ring_rest_length();
  const Vec3 v = projection.approach;

  SealEvaluation eval;
  eval.points = projection.points;
  eval.vacuum_force = f_p;

  double sum_l = 0.0;
  for (const auto& pt : eval.points) sum_l += pt.l;
  eval.delta_l_max = (f_p / k_e + sum_l) / static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    auto& pt = eval.points[i];
    pt.elastic_force = v * (k_e * (eval.delta_l_max - pt.l));

    pt.ring_force = Vec3{0, 0, 0};
    const std::size_t prev = (i + n - 1) % n;
    const std::size_t next = (i + 1) % n;
    for (const std::size_t j : {prev, next}) {
      const Vec3 d = eval.points[j].projected - pt.projected;
      const double len = norm(d);
      if (len > 1e-15) pt.ring_force += d * (k_r * (len - rest_len) / len);
    }
    pt.contact_force = -(pt.ring_force + pt.elastic_force);
  }

  Vec3 residual{0, 0, 0};
  for (const auto& pt : eval.points)
    residual += pt.ring_force + pt.elastic_force + pt.contact_force;
  eval.force_residual = residual;
  return eval;
}

bool check_seal(SealEvaluation& evaluation, const SuctionCupParams& params) {
  evaluation.offending_indices.clear();
  double max_lift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < evaluation.points.size(); ++i) {
    auto& pt = evaluation.points[i];
    // Spring resultant component pulling the point off the surface.
    pt.normal_lift = dot(pt.ring_force + pt.elastic_force, pt.normal);
    max_lift = std::max(max_lift, pt.normal_lift);
    if (pt.normal_lift > params.break_threshold)
      evaluation.offending_indices.push_back(static_cast<int>(i));
  }
  evaluation.max_normal_lift = max_lift;
  if (evaluation.offending_indices.empty()) {
    evaluation.success = true;
    evaluation.failure_reason = SealFailure::None;
  } else {
    evaluation.success = false;
    evaluation.failure_reason = SealFailure::ForceLiftoff;
  }
  return evaluation.success;
}

SealEvaluation evaluate_seal(const TriMesh& mesh, const SuctionCupParams& params,
                             const VacuumGraspCandidate& candidate) {
  const CupProjection proj = project_cup(mesh, params, candidate);
  if (!proj.ok()) {
    SealEvaluation eval;
    eval.success = false;
    eval.failure_reason = proj.failure;
    eval.points = proj.points;
    eval.vacuum_force = params.vacuum_force();
    eval.offending_indices = proj.failed_indices;
    return eval;
  }
  SealEvaluation eval = solve_equilibrium(proj, params);
  check_seal(eval, params);
  return eval;
}

std::vector<std::pair<VacuumGraspCandidate, SealEvaluation>> sample_vacuum_candidates(
    const TriMesh& mesh, const SuctionCupParams& params, std::size_t count,
    std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_vacuum_candidates: count must be >= 1");
  params.validate();
  const auto samples = mesh.sample_surface(count, derive_seed(seed, 0x5ea1));
  std::vector<std::pair<VacuumGraspCandidate, SealEvaluation>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    VacuumGraspCandidate cand{s.point, -s.normal};
    out.emplace_back(cand, evaluate_seal(mesh, params, cand));
  }
  return out;
}

}  // namespace grasp

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "graspgen/errors.hpp"
#include "graspgen/rng.hpp"
#include "graspgen/suction.hpp"
#include "testsupport.hpp"

using namespace grasp;
using namespace grasp::test;

namespace {

SuctionCupParams default_cup() { return SuctionCupParams{}; }

// Tilted plane: z = -x * tan(theta), fine grid so hits are exact planes.
TriMesh tilted_plane(double theta_rad, double size = 0.2) {
  const TriMesh flat = make_plane_grid(size, size, 8, 8);
  std::vector<Vec3> vs;
  for (const auto& v : flat.vertices())
    vs.push_back({v.x, v.y, -v.x * std::tan(theta_rad)});
  auto tris = flat.triangles();
  return TriMesh(std::move(vs), std::move(tris));
}

VacuumGraspCandidate down_at(const Vec3& contact) { return {contact, {0, 0, -1}}; }

}  // namespace

TEST_CASE("build_cup_rim: spacing, radius and plane") {
  SuctionCupParams cup = default_cup();
  cup.mass_point_count = 8;
  const VacuumGraspCandidate cand = down_at({0, 0, 0});
  const auto rim = build_cup_rim(cup, cand);
  REQUIRE(rim.size() == 8);
  const Vec3 center{0, 0, cup.max_projection_depth};
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(norm(rim[i] - center) == doctest::Approx(cup.radius).epsilon(1e-12));
    CHECK(rim[i].z == doctest::Approx(center.z).epsilon(1e-12));
    const Vec3 a = normalized(rim[i] - center);
    const Vec3 b = normalized(rim[(i + 1) % 8] - center);
    CHECK(std::acos(std::clamp(dot(a, b), -1.0, 1.0)) ==
          doctest::Approx(kPi / 4).epsilon(1e-9));
  }
}

TEST_CASE("build_cup_rim: rotated approach keeps the rim rigid") {
  SuctionCupParams cup = default_cup();
  for (std::uint64_t s = 0; s < 8; ++s) {
    const RigidTransform t = random_rigid_transform(s, 0.1);
    VacuumGraspCandidate cand{t.translation, t.rotation * Vec3{0, 0, -1}};
    const auto rim = build_cup_rim(cup, cand);
    const Vec3 center = cand.contact - cand.approach * cup.max_projection_depth;
    for (const auto& p : rim) {
      CHECK(std::abs(dot(p - center, cand.approach)) < 1e-12);  // in the rim plane
      CHECK(norm(p - center) == doctest::Approx(cup.radius).epsilon(1e-9));
    }
  }
}

TEST_CASE("ring rest length is the regular n-gon chord") {
  SuctionCupParams cup = default_cup();
  cup.mass_point_count = 16;
  CHECK(cup.ring_rest_length() ==
        doctest::Approx(2.0 * cup.radius * std::sin(kPi / 16)).epsilon(1e-12));
}

TEST_CASE("project_cup: flat plane gives l = 0 everywhere") {
  const TriMesh plane = make_plane_grid(0.2, 0.2, 8, 8);
  const auto proj = project_cup(plane, default_cup(), down_at({0, 0, 0}));
  REQUIRE(proj.ok());
  for (const auto& pt : proj.points) {
    CHECK(pt.hit);
    CHECK(std::abs(pt.l) < 1e-12);
  }
}

TEST_CASE("project_cup: tilted plane matches the closed-form profile") {
  const SuctionCupParams cup = default_cup();
  for (const double deg : {5.0, 15.0, 30.0}) {
    const double theta = deg * kPi / 180.0;
    const TriMesh plane = tilted_plane(theta);
    const VacuumGraspCandidate cand = down_at({0, 0, 0});
    const auto proj = project_cup(plane, cup, cand);
    REQUIRE(proj.ok());

    // Rays travel along -z from the rim; the plane height under a rim
    // point (x, y) is -x tan(theta), so l = (x - min x) tan(theta).
    const auto rim = build_cup_rim(cup, cand);
    double min_d = std::numeric_limits<double>::infinity();
    std::vector<double> expected(rim.size());
    for (std::size_t i = 0; i < rim.size(); ++i) {
      expected[i] = rim[i].z + rim[i].x * std::tan(theta);
      min_d = std::min(min_d, expected[i]);
    }
    double max_l = 0.0;
    for (std::size_t i = 0; i < rim.size(); ++i) {
      CHECK(proj.points[i].l == doctest::Approx(expected[i] - min_d).epsilon(1e-9));
      max_l = std::max(max_l, proj.points[i].l);
    }
    CHECK(max_l == doctest::Approx(2.0 * cup.radius * std::tan(theta)).epsilon(1e-9));
  }
}

TEST_CASE("project_cup: half overhang reports ray_miss") {
  const TriMesh box = make_box({0.1, 0.1, 0.05});
  // Contact on the +x edge of the top face: half the rim hangs in the air.
  const auto eval = evaluate_seal(box, default_cup(), down_at({0.05, 0.0, 0.025}));
  CHECK_FALSE(eval.success);
  CHECK(eval.failure_reason == SealFailure::RayMiss);
  CHECK(!eval.offending_indices.empty());
}

TEST_CASE("project_cup: sag beyond the travel bound is depth_exceeded") {
  SuctionCupParams cup = default_cup();
  const TriMesh plane = tilted_plane(40.0 * kPi / 180.0, 0.4);
  // 2 r tan(40 deg) = 1.68 r > 1.5 r.
  const auto proj = project_cup(plane, cup, down_at({0, 0, 0}));
  CHECK_FALSE(proj.ok());
  CHECK(proj.failure == SealFailure::DepthExceeded);
}

TEST_CASE("solve_equilibrium: four-point hand solve of the elastic split") {
  SuctionCupParams cup = default_cup();
  cup.mass_point_count = 4;  // below the sampling minimum; fine for the solver
  cup.elastic_stiffness = cup.vacuum_force();  // F_p / k_e = 1
  cup.ring_stiffness = cup.elastic_stiffness;

  CupProjection proj;
  proj.approach = {0, 0, -1};
  const double side = cup.ring_rest_length();  // square side = r sqrt(2)
  for (int i = 0; i < 4; ++i) {
    CupMassPoint pt;
    const double phi = 2.0 * kPi * i / 4;
    pt.projected = Vec3{cup.radius * std::cos(phi), cup.radius * std::sin(phi), 0};
    pt.normal = {0, 0, 1};
    pt.l = 0.0;
    pt.hit = true;
    proj.points.push_back(pt);
  }
  CHECK(norm(proj.points[1].projected - proj.points[0].projected) ==
        doctest::Approx(side).epsilon(1e-12));

  const SealEvaluation eval = solve_equilibrium(proj, cup);
  CHECK(eval.delta_l_max == doctest::Approx(0.25).epsilon(1e-12));
  double sum_fe = 0.0;
  for (const auto& pt : eval.points) {
    CHECK(norm(pt.ring_force) < 1e-12 * cup.vacuum_force());
    CHECK(dot(pt.elastic_force, proj.approach) ==
          doctest::Approx(0.25 * cup.elastic_stiffness).epsilon(1e-12));
    sum_fe += norm(pt.elastic_force);
  }
  CHECK(sum_fe == doctest::Approx(cup.vacuum_force()).epsilon(1e-12));
}

TEST_CASE("flat plane: uniform contact forces F_p/n for n in {8,16,32,64}") {
  const TriMesh plane = make_plane_grid(0.2, 0.2, 8, 8);
  for (const int n : {8, 16, 32, 64}) {
    SuctionCupParams cup = default_cup();
    cup.mass_point_count = n;
    cup.elastic_stiffness =
        SuctionCupParams::recommended_elastic_stiffness(cup.radius, 70e3, n);
    cup.ring_stiffness = cup.elastic_stiffness;
    const auto eval = evaluate_seal(plane, cup, down_at({0, 0, 0}));
    REQUIRE(eval.success);
    const double f_p = cup.vacuum_force();
    const double expected = f_p / n;
    double lo = 1e30, hi = -1e30;
    for (const auto& pt : eval.points) {
      CHECK(norm(pt.ring_force) <= 1e-9 * f_p);
      const double fn = dot(pt.contact_force, Vec3{0, 0, 1});
      CHECK(fn == doctest::Approx(expected).epsilon(1e-9));
      lo = std::min(lo, fn);
      hi = std::max(hi, fn);
    }
    CHECK(hi - lo <= 1e-9 * f_p);
  }
}

TEST_CASE("equilibrium identities hold on random candidates (property)") {
  const TriMesh sphere = make_icosphere(0.06, 3);
  const TriMesh plane = tilted_plane(12.0 * kPi / 180.0);
  const TriMesh cyl = make_cylinder(0.05, 0.3, 64);
  const SuctionCupParams cup = default_cup();
  int solved = 0;
  for (const TriMesh* mesh : {&sphere, &plane, &cyl}) {
    const auto samples = mesh->sample_surface(120, 321);
    for (const auto& s : samples) {
      const auto eval = evaluate_seal(*mesh, cup, {s.point, -s.normal});
      if (eval.failure_reason == SealFailure::RayMiss ||
          eval.failure_reason == SealFailure::DepthExceeded)
        continue;
      ++solved;
      const double f_p = eval.vacuum_force;
      // Global equilibrium, restated numerically.
      CHECK(norm(eval.force_residual) <= 1e-6 * f_p);
      // Elastic forces carry exactly the vacuum force along the approach.
      double fe_along_v = 0.0, sum_dl = 0.0, sum_l = 0.0;
      for (const auto& pt : eval.points) {
        fe_along_v += dot(pt.elastic_force, normalized(s.normal * -1.0));
        sum_dl += eval.delta_l_max - pt.l;
        sum_l += pt.l;
      }
      CHECK(fe_along_v == doctest::Approx(f_p).epsilon(1e-9));
      CHECK(sum_dl == doctest::Approx(f_p / cup.elastic_stiffness).epsilon(1e-9));
      // l is anchored at the first contact.
      double min_l = 1e30;
      for (const auto& pt : eval.points) min_l = std::min(min_l, pt.l);
      CHECK(min_l == doctest::Approx(0.0).epsilon(1e-12));
      (void)sum_l;
    }
  }
  CHECK(solved > 200);
}

TEST_CASE("check_seal: flat plane seals for any positive pressure") {
  const TriMesh plane = make_plane_grid(0.2, 0.2, 8, 8);
  for (const double dp : {5e3, 70e3, 200e3}) {
    SuctionCupParams cup = default_cup();
    cup.pressure_difference = dp;
    const auto eval = evaluate_seal(plane, cup, down_at({0, 0, 0}));
    CHECK(eval.success);
    CHECK(eval.failure_reason == SealFailure::None);
  }
}

TEST_CASE("check_seal: ridge liftoff, verified against the two-plane closed form") {
  // 45-degree roof ridge along y. The projection is known analytically:
  // surface z = -|x|, so l_i = |x_i| - min|x_i| and normals are the two
  // slope normals. The stretched far points must lift off.
  SuctionCupParams cup = default_cup();
  const double s = std::sqrt(0.5);

  CupProjection proj;
  proj.approach = {0, 0, -1};
  const auto rim = build_cup_rim(cup, down_at({0, 0, 0}));
  double min_d = 1e30;
  std::vector<double> depth(rim.size());
  for (std::size_t i = 0; i < rim.size(); ++i) {
    depth[i] = rim[i].z + std::abs(rim[i].x);
    min_d = std::min(min_d, depth[i]);
  }
  for (std::size_t i = 0; i < rim.size(); ++i) {
    CupMassPoint pt;
    pt.rest = rim[i];
    pt.l = depth[i] - min_d;
    pt.projected = {rim[i].x, rim[i].y, -std::abs(rim[i].x)};
    pt.normal = rim[i].x >= 0.0 ? Vec3{s, 0, s} : Vec3{-s, 0, s};
    pt.hit = true;
    proj.points.push_back(pt);
  }

  SealEvaluation eval = solve_equilibrium(proj, cup);
  CHECK_FALSE(check_seal(eval, cup));
  CHECK(eval.failure_reason == SealFailure::ForceLiftoff);

  // The offending points are the deep-stretched extremes (|x| near r):
  // elastic springs there pull up along +z against a tilted normal.
  double max_l = 0.0;
  for (const auto& pt : eval.points) max_l = std::max(max_l, pt.l);
  for (const int idx : eval.offending_indices) {
    const auto& pt = eval.points[static_cast<std::size_t>(idx)];
    CHECK(pt.l > 0.5 * max_l);
    CHECK(dot(pt.elastic_force, Vec3{0, 0, 1}) > 0.0);  // stretched, pulling up
  }

  // The mesh-based run agrees with the analytic projection.
  const TriMesh wedge = make_wedge(0.05, 0.3, 45.0);
  const auto mesh_eval =
      evaluate_seal(wedge, cup, down_at({0, 0, 0.05 * std::tan(kPi / 4)}));
  CHECK_FALSE(mesh_eval.success);
  CHECK(mesh_eval.failure_reason == SealFailure::ForceLiftoff);
}

TEST_CASE("check_seal: infinite threshold always seals a successful projection") {
  SuctionCupParams cup = default_cup();
  cup.break_threshold = std::numeric_limits<double>::infinity();
  const TriMesh wedge = make_wedge(0.05, 0.3, 45.0);
  const auto eval = evaluate_seal(wedge, cup, down_at({0, 0, 0.05}));
  CHECK(eval.success);
}

TEST_CASE("check_seal: raising the threshold never flips success to failure") {
  const TriMesh wedge = make_wedge(0.05, 0.3, 30.0);
  const TriMesh sphere = make_icosphere(0.03, 3);
  const TriMesh plane = tilted_plane(10.0 * kPi / 180.0);
  for (const TriMesh* mesh : {&wedge, &sphere, &plane}) {
    const auto samples = mesh->sample_surface(40, 77);
    for (const auto& s : samples) {
      bool prev_success = false;
      for (const double eps_frac : {0.0, 0.01, 0.05, 0.2, 1.0}) {
        SuctionCupParams cup = default_cup();
        cup.break_threshold = eps_frac * cup.vacuum_force();
        const auto eval = evaluate_seal(*mesh, cup, {s.point, -s.normal});
        if (prev_success) CHECK(eval.success);
        prev_success = eval.success;
      }
    }
  }
}

TEST_CASE("evaluate_seal: sphere apex seals; verdict is frame invariant") {
  const TriMesh sphere = make_icosphere(0.1, 3);
  const auto base = evaluate_seal(sphere, default_cup(), down_at({0, 0, 0.1}));
  CHECK(base.success);

  const TriMesh wedge = make_wedge(0.05, 0.3, 45.0);
  const TriMesh plane = tilted_plane(10.0 * kPi / 180.0);
  struct Case {
    const TriMesh* mesh;
    VacuumGraspCandidate cand;
  };
  const Case cases[] = {
      {&sphere, down_at({0, 0, 0.1})},
      {&wedge, down_at({0, 0, 0.05})},
      {&plane, down_at({0, 0, 0})},
  };
  for (const auto& c : cases) {
    const auto ref = evaluate_seal(*c.mesh, default_cup(), c.cand);
    for (std::uint64_t s = 1; s <= 6; ++s) {
      const RigidTransform t = random_rigid_transform(s);
      const TriMesh moved = transform_mesh(*c.mesh, t);
      const VacuumGraspCandidate cand{t.apply(c.cand.contact),
                                      t.apply_vector(c.cand.approach)};
      const auto eval = evaluate_seal(moved, default_cup(), cand);
      CHECK(eval.success == ref.success);
    }
  }
}

TEST_CASE("sample_vacuum_candidates: slab interior seals, determinism holds") {
  const TriMesh slab = make_box({0.3, 0.3, 0.02});
  const SuctionCupParams cup = default_cup();
  const auto results = sample_vacuum_candidates(slab, cup, 400, 5);
  REQUIRE(results.size() == 400);

  std::size_t interior = 0, interior_success = 0;
  for (const auto& [cand, eval] : results) {
    const bool top_or_bottom = std::abs(std::abs(cand.contact.z) - 0.01) < 1e-9;
    const bool inside = std::abs(cand.contact.x) < 0.15 - 1.5 * cup.radius &&
                        std::abs(cand.contact.y) < 0.15 - 1.5 * cup.radius;
    if (top_or_bottom && inside) {
      ++interior;
      interior_success += eval.success ? 1 : 0;
    }
  }
  REQUIRE(interior > 50);
  CHECK(static_cast<double>(interior_success) >= 0.99 * static_cast<double>(interior));

  const auto again = sample_vacuum_candidates(slab, cup, 400, 5);
  for (std::size_t i = 0; i < results.size(); ++i) {
    CHECK(results[i].first.contact == again[i].first.contact);
    CHECK(results[i].second.success == again[i].second.success);
  }
  CHECK_THROWS_AS(sample_vacuum_candidates(slab, cup, 0, 5), std::invalid_argument);
}

TEST_CASE("verdict convergence: n=16 and n=64 agree on the primitive suite") {
  std::vector<std::pair<const TriMesh*, VacuumGraspCandidate>> cases;
  std::vector<TriMesh> keep;
  keep.reserve(64);

  // Plane tilt sweep 0..40 degrees.
  for (int deg = 0; deg <= 40; deg += 2)
    keep.push_back(tilted_plane(deg * kPi / 180.0, 0.4));
  // Spheres 2r..20r, apex contact.
  for (int k = 2; k <= 20; k += 2) keep.push_back(make_icosphere(k * 0.01, 3));
  // Lying cylinders 2r..20r, contact on the curved top line.
  const RigidTransform lie{Mat3::axis_angle({1, 0, 0}, 0.5 * kPi), {0, 0, 0}};
  for (int k = 2; k <= 20; k += 2)
    keep.push_back(transform_mesh(make_cylinder(k * 0.01, 0.4, 96), lie));

  std::size_t idx = 0;
  for (int deg = 0; deg <= 40; deg += 2)
    cases.emplace_back(&keep[idx++], down_at({0, 0, 0}));
  for (int k = 2; k <= 20; k += 2)
    cases.emplace_back(&keep[idx++], down_at({0, 0, k * 0.01}));
  for (int k = 2; k <= 20; k += 2)
    cases.emplace_back(&keep[idx++], down_at({0, 0, k * 0.01}));

  int agree = 0;
  for (const auto& [mesh, cand] : cases) {
    SuctionCupParams c16 = default_cup(), c64 = default_cup();
    c16.mass_point_count = 16;
    c16.elastic_stiffness =
        SuctionCupParams::recommended_elastic_stiffness(c16.radius, 70e3, 16);
    c16.ring_stiffness = c16.elastic_stiffness;
    c64.mass_point_count = 64;
    c64.elastic_stiffness =
        SuctionCupParams::recommended_elastic_stiffness(c64.radius, 70e3, 64);
    c64.ring_stiffness = c64.elastic_stiffness;
    const bool a = evaluate_seal(*mesh, c16, cand).success;
    const bool b = evaluate_seal(*mesh, c64, cand).success;
    agree += (a == b) ? 1 : 0;
  }
  CHECK(static_cast<double>(agree) >= 0.95 * static_cast<double>(cases.size()));
}

TEST_CASE("invalid cup parameters are rejected") {
  SuctionCupParams cup = default_cup();
  cup.radius = -1.0;
  CHECK_THROWS_AS(cup.validate(), SchemaError);
  cup = default_cup();
  cup.mass_point_count = 7;
  CHECK_THROWS_AS(cup.validate(), SchemaError);
  cup = default_cup();
  cup.ring_stiffness = 0.0;
  CHECK_THROWS_AS(cup.validate(), SchemaError);
  CupProjection proj;
  proj.points.resize(8);
  proj.approach = {0, 0, -1};
  for (auto& p : proj.points) p.hit = true;
  SuctionCupParams bad = default_cup();
  bad.elastic_stiffness = -1.0;
  CHECK_THROWS_AS(solve_equilibrium(proj, bad), NonPositiveStiffness);
}

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "graspgen/calibrate.hpp"
#include "graspgen/geometry.hpp"
#include "graspgen/mesh.hpp"

namespace grasp::test {

// Procedural assets. All builders produce outward-facing CCW triangles.
TriMesh make_box(const Vec3& extents, const Vec3& center = {0, 0, 0});
TriMesh make_plane_grid(double size_x, double size_y, int nx, int ny);
TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center = {0, 0, 0});
TriMesh make_cylinder(double radius, double height, int segments);
// Triangular prism, apex up: two slopes at `slope_deg` from horizontal
// meeting along the ridge, closed with a base and two end caps.
TriMesh make_wedge(double base_half_width, double length, double slope_deg);
// Two stacked boxes as one mesh (two closed components).
TriMesh make_two_box_composite(const Vec3& lower_ext, const Vec3& upper_ext,
                               const Vec3& upper_center);

TriMesh transform_mesh(const TriMesh& mesh, const RigidTransform& t);

std::string to_obj(const TriMesh& mesh);
void write_obj(const std::string& path, const TriMesh& mesh);
void write_ply(const std::string& path, const TriMesh& mesh);

// Independent nearest-hit oracle: plain loop over every triangle, no
// acceleration structure, no shared kernel code. Same epsilon contract as
// the library (determinant 1e-9, min distance 1e-7).
struct OracleHit {
  std::uint32_t triangle;
  double distance;
};
std::optional<OracleHit> brute_force_raycast(const TriMesh& mesh, const Ray& ray,
                                             double t_min = 1e-7,
                                             double t_max = 1e308);

// Unique scratch directory under the system temp dir; removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Random rotation + translation for invariance tests.
RigidTransform random_rigid_transform(std::uint64_t seed, double translation_scale = 1.0);

bool files_identical(const std::string& a, const std::string& b);

// Step plate: two slabs meeting at x = 0, right side raised by `height`.
// The top landing is at z = 0 (left) and z = height (right).
TriMesh make_step_plate(double height, double size = 0.2);

// Seal-attempt candidates over a primitive family whose verdicts flip
// across the calibration box: tilted planes and wedges (elastic-driven),
// step plates and narrow cylinders (ring-driven), spheres and a flat
// plane as stable anchors. Labels are left unset. Every fixture is
// y-invariant, so `shift_y` produces an equivalent independent contact
// set (used as held-out data).
struct SealFixtureSet {
  std::vector<std::shared_ptr<const TriMesh>> meshes;
  std::vector<SealAttemptRecord> records;
};
SealFixtureSet make_seal_fixture_set(double shift_y = 0.0);

// Evaluates every record under `params` applied to `cup` and stores the
// verdict as the observed label.
void label_records(std::vector<SealAttemptRecord>& records, const SuctionCupParams& cup,
                   const CalibrationParams& params);

}  // namespace grasp::test

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "graspgen/geometry.hpp"
#include "graspgen/kernels.hpp"

namespace grasp {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
};

struct RayHit {
  std::uint32_t triangle = 0;
  double distance = 0.0;  // meters along the ray
  Vec3 point;
  Vec3 normal;            // interpolated unit normal, outward for CCW meshes
  Vec3 barycentric;       // weights of (v0, v1, v2)
};

struct MassProperties {
  double volume = 0.0;       // m^3
  Vec3 center_of_mass;       // m
  double mass = 0.0;         // kg
};

struct SurfaceSample {
  Vec3 point;
  Vec3 normal;  // outward geometric normal of the sampled triangle
  std::uint32_t triangle = 0;
};

// Hits closer than this along a ray are ignored (self-intersection guard
// for rays that originate on the surface).
inline constexpr double kRayMinDistance = 1e-7;

namespace detail {
struct Bvh;
}

// Indexed triangle mesh, SI meters. Immutable after construction; all
// queries are const and safe to call concurrently.
class TriMesh {
 public:
  TriMesh(std::vector<Vec3> vertices, std::vector<std::array<std::uint32_t, 3>> triangles);
  ~TriMesh();
  TriMesh(TriMesh&&) noexcept;
  TriMesh& operator=(TriMesh&&) noexcept;
  TriMesh(const TriMesh&) = delete;
  TriMesh& operator=(const TriMesh&) = delete;

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<std::uint32_t, 3>>& triangles() const { return triangles_; }
  const std::vector<Vec3>& triangle_normals() const { return tri_normals_; }
  const std::vector<double>& triangle_areas() const { return tri_areas_; }
  double total_area() const { return total_area_; }
  const Aabb& bounds() const { return bounds_; }
  bool watertight() const { return watertight_; }

  Vec3 triangle_vertex(std::uint32_t tri, int corner) const {
    return vertices_[triangles_[tri][corner]];
  }

  // Nearest intersection in [t_min, t_max], or nullopt. Matches a
  // brute-force scan over all triangles (same triangle, or equal distance).
  std::optional<RayHit> raycast(const Ray& ray, double t_min = kRayMinDistance,
                                double t_max = std::numeric_limits<double>::infinity()) const;

  // True if anything intersects the ray within [t_min, t_max].
  bool raycast_any(const Ray& ray, double t_min = kRayMinDistance,
                   double t_max = std::numeric_limits<double>::infinity()) const;

  // All intersections along the ray, sorted by distance ascending.
  std::vector<RayHit> raycast_all(const Ray& ray, double t_min = kRayMinDistance,
                                  double t_max = std::numeric_limits<double>::infinity()) const;

  // Invokes fn(triangle_index) for every triangle whose AABB overlaps box.
  void query_box(const Aabb& box, const std::function<void(std::uint32_t)>& fn) const;

  // Area-uniform surface samples; deterministic given seed.
  std::vector<SurfaceSample> sample_surface(std::size_t count, std::uint64_t seed) const;

  // Signed-tetrahedron volume integral; exact for polyhedra.
  // Throws NotWatertight when the mesh is open.
  MassProperties mass_properties(double density) const;

  // Closest point on the surface to p, and its distance.
  std::pair<Vec3, double> closest_point(const Vec3& p) const;

  // Unit normal at a hit point, interpolated from vertex normals unless
  // flat = true (then the facet normal).
  Vec3 shading_normal(std::uint32_t tri, const Vec3& barycentric, bool flat = false) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<std::uint32_t, 3>> triangles_;
  std::vector<Vec3> tri_normals_;
  std::vector<Vec3> vertex_normals_;
  std::vector<double> tri_areas_;
  std::vector<double> area_cdf_;
  double total_area_ = 0.0;
  Aabb bounds_;
  bool watertight_ = false;
  std::unique_ptr<detail::Bvh> bvh_;
};

enum class MeshFormat { Obj, PlyAscii };

// Loads an ASCII OBJ or PLY file. Format inferred from the extension when
// not given. Throws ParseError / EmptyMesh / NonFiniteVertex.
TriMesh load_mesh(const std::string& path);
TriMesh load_mesh(const std::string& path, MeshFormat format);

// Parses mesh data from a string (same grammar as the file readers).
TriMesh parse_obj(const std::string& text, const std::string& name = "<obj>");
TriMesh parse_ply_ascii(const std::string& text, const std::string& name = "<ply>");

}  // namespace grasp

#pragma once

#include "graspgen/geometry.hpp"
#include "graspgen/mesh.hpp"

namespace grasp {

// Oriented box: pose maps box-local coordinates to the target frame,
// half holds the half-extents along the local axes.
struct Obb {
  RigidTransform pose;
  Vec3 half;

  Aabb enclosing_aabb() const;
};

// Exact separating-axis test (13 axes) in the triangle's frame.
bool triangle_intersects_obb(const Vec3& a, const Vec3& b, const Vec3& c, const Obb& box);

// Any mesh triangle intersecting the box (BVH-pruned).
bool mesh_intersects_obb(const TriMesh& mesh, const Obb& box);

// Exact triangle-triangle intersection (separating axes; coplanar pairs
// handled via 2D overlap).
bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                         const Vec3& b0, const Vec3& b1, const Vec3& b2);

// Any triangle of A (posed by pose_a) intersecting any triangle of B
// (posed by pose_b). Broad phase via AABBs and BVH box queries.
bool meshes_intersect(const TriMesh& a, const RigidTransform& pose_a,
                      const TriMesh& b, const RigidTransform& pose_b);

}  // namespace grasp

#include "graspgen/collision.hpp"

#include <algorithm>
#include <cmath>

namespace grasp {

Aabb Obb::enclosing_aabb() const {
  Aabb box;
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner{(i & 1) ? half.x : -half.x, (i & 2) ? half.y : -half.y,
                      (i & 4) ? half.z : -half.z};
    box.expand(pose.apply(corner));
  }
  return box;
}

namespace {

struct Interval {
  double lo, hi;
};

Interval project_triangle(const Vec3& axis, const Vec3& a, const Vec3& b, const Vec3& c) {
  const double pa = dot(axis, a), pb = dot(axis, b), pc = dot(axis, c);
  return {std::min({pa, pb, pc}), std::max({pa, pb, pc})};
}

}  // namespace

// Akenine-Möller triangle/AABB test, run in the box frame.
bool triangle_intersects_obb(const Vec3& a_in, const Vec3& b_in, const Vec3& c_in,
                             const Obb& box) {
  const RigidTransform inv = box.pose.inverse();
  const Vec3 v0 = inv.apply(a_in), v1 = inv.apply(b_in), v2 = inv.apply(c_in);
  const Vec3 h = box.half;

  // Box face normals.
  Interval t = project_triangle({1, 0, 0}, v0, v1, v2);
  if (t.lo > h.x || t.hi < -h.x) return false;
  t = project_triangle({0, 1, 0}, v0, v1, v2);
  if (t.lo > h.y || t.hi < -h.y) return false;
  t = project_triangle({0, 0, 1}, v0, v1, v2);
  if (t.lo > h.z || t.hi < -h.z) return false;

  // Triangle plane.
  const Vec3 n = cross(v1 - v0, v2 - v0);
  const double r = h.x * std::abs(n.x) + h.y * std::abs(n.y) + h.z * std::abs(n.z);
  const double d = dot(n, v0);
  if (d > r || d < -r) return false;

  // Nine edge cross products.
  const Vec3 edges[3] = {v1 - v0, v2 - v1, v0 - v2};
  const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (const auto& e : edges) {
    for (const auto& u : axes) {
      const Vec3 axis = cross(u, e);
      const double len2 = norm2(axis);
      if (len2 < 1e-24) continue;
      const Interval ti = project_triangle(axis, v0, v1, v2);
      const double rb = h.x * std::abs(axis.x) + h.y * std::abs(axis.y) + h.z * std::abs(axis.z);
      if (ti.lo > rb || ti.hi < -rb) return false;
    }
  }
  return true;
}

bool mesh_intersects_obb(const TriMesh& mesh, const Obb& box) {
  bool hit = false;
  mesh.query_box(box.enclosing_aabb(), [&](std::uint32_t tri) {
    if (hit) return;
    if (triangle_intersects_obb(mesh.triangle_vertex(tri, 0), mesh.triangle_vertex(tri, 1),
                                mesh.triangle_vertex(tri, 2), box))
      hit = true;
  });
  return hit;
}

namespace {

bool separating_axis(const Vec3& axis, const Vec3& a0, const Vec3& a1, const Vec3& a2,
                     const Vec3& b0, const Vec3& b1, const Vec3& b2) {
  if (norm2(axis) < 1e-24) return false;
  const Interval ia = project_triangle(axis, a0, a1, a2);
  const Interval ib = project_triangle(axis, b0, b1, b2);
  return ia.hi < ib.lo || ib.hi < ia.lo;
}

}  // namespace

bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                         const Vec3& b0, const Vec3& b1, const Vec3& b2) {
  const Vec3 ea[3] = {a1 - a0, a2 - a1, a0 - a2};
  const Vec3 eb[3] = {b1 - b0, b2 - b1, b0 - b2};
  const Vec3 na = cross(ea[0], ea[1]);
  const Vec3 nb = cross(eb[0], eb[1]);

  if (separating_axis(na, a0, a1, a2, b0, b1, b2)) return false;
  if (separating_axis(nb, a0, a1, a2, b0, b1, b2)) return false;
  for (const auto& e1 : ea)
    for (const auto& e2 : eb)
      if (separating_axis(cross(e1, e2), a0, a1, a2, b0, b1, b2)) return false;
  // SAT over face normals and edge pairs covers non-coplanar triangles; for
  // (near-)coplanar ones the edge-cross axes degenerate, so test the two
  // in-plane edge normals of each triangle as well.
  for (const auto& e : ea)
    if (separating_axis(cross(na, e), a0, a1, a2, b0, b1, b2)) return false;
  for (const auto& e : eb)
    if (separating_axis(cross(nb, e), a0, a1, a2, b0, b1, b2)) return false;
  return true;
}

bool meshes_intersect(const TriMesh& a, const RigidTransform& pose_a,
                      const TriMesh& b, const RigidTransform& pose_b) {
  // Work in B's frame: transform A's triangles once.
  const RigidTransform a_to_b = pose_b.inverse().compose(pose_a);

  Aabb a_in_b;
  for (int i = 0; i < 8; ++i) {
    const Aabb& ba = a.bounds();
    const Vec3 corner{(i & 1) ? ba.hi.x : ba.lo.x, (i & 2) ? ba.hi.y : ba.lo.y,
                      (i & 4) ? ba.hi.z : ba.lo.z};
    a_in_b.expand(a_to_b.apply(corner));
  }
  if (!a_in_b.overlaps(b.bounds())) return false;

  bool hit = false;
  for (std::uint32_t ta = 0; ta < a.triangles().size() && !hit; ++ta) {
    const Vec3 p0 = a_to_b.apply(a.triangle_vertex(ta, 0));
    const Vec3 p1 = a_to_b.apply(a.triangle_vertex(ta, 1));
    const Vec3 p2 = a_to_b.apply(a.triangle_vertex(ta, 2));
    Aabb tb;
    tb.expand(p0);
    tb.expand(p1);
    tb.expand(p2);
    if (!tb.overlaps(b.bounds())) continue;
    b.query_box(tb, [&](std::uint32_t tbi) {
      if (hit) return;
      if (triangles_intersect(p0, p1, p2, b.triangle_vertex(tbi, 0),
                              b.triangle_vertex(tbi, 1), b.triangle_vertex(tbi, 2)))
        hit = true;
    });
  }
  return hit;
}

}  // namespace grasp

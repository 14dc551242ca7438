#include "graspgen/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "graspgen/errors.hpp"
#include "graspgen/rng.hpp"

namespace grasp {

namespace detail {

// Binary BVH over triangle AABBs. Leaf triangles are packed into padded
// SoA packets so the ray kernels can run 4 lanes at a time.
struct Bvh {
  struct Node {
    Aabb box;
    std::uint32_t left = 0;        // internal only
    std::uint32_t right = 0;       // internal only
    std::uint32_t lane_begin = 0;  // leaf only, multiple of 4
    std::uint32_t lane_count = 0;  // leaf only, real lanes; 0 = internal
    bool leaf() const { return lane_count > 0; }
  };

  std::vector<Node> nodes;
  // SoA triangle data, padded per leaf to a multiple of 4 lanes.
  std::vector<double> v0x, v0y, v0z, e1x, e1y, e1z, e2x, e2y, e2z;
  std::vector<std::uint32_t> lane_tri;  // original triangle index, UINT32_MAX padding

  kernels::TriSoA soa() const {
    return {v0x.data(), v0y.data(), v0z.data(), e1x.data(), e1y.data(),
            e1z.data(), e2x.data(), e2y.data(), e2z.data()};
  }
};

namespace {

constexpr std::uint32_t kLeafSize = 8;

struct BuildTri {
  Aabb box;
  Vec3 centroid;
  std::uint32_t index;
};

void push_lane(Bvh& bvh, const Vec3& v0, const Vec3& e1, const Vec3& e2, std::uint32_t tri) {
  bvh.v0x.push_back(v0.x); bvh.v0y.push_back(v0.y); bvh.v0z.push_back(v0.z);
  bvh.e1x.push_back(e1.x); bvh.e1y.push_back(e1.y); bvh.e1z.push_back(e1.z);
  bvh.e2x.push_back(e2.x); bvh.e2y.push_back(e2.y); bvh.e2z.push_back(e2.z);
  bvh.lane_tri.push_back(tri);
}

std::uint32_t build_node(Bvh& bvh, std::vector<BuildTri>& tris, std::size_t begin,
                         std::size_t end, const std::vector<Vec3>& vertices,
                         const std::vector<std::array<std::uint32_t, 3>>& triangles) {
  const std::uint32_t node_index = static_cast<std::uint32_t>(bvh.nodes.size());
  bvh.nodes.emplace_back();

  Aabb box;
  for (std::size_t i = begin; i < end; ++i) box.expand(tris[i].box);
  bvh.nodes[node_index].box = box;

  const std::size_t count = end - begin;
  if (count <= kLeafSize) {
    const std::uint32_t lane_begin = static_cast<std::uint32_t>(bvh.lane_tri.size());
    for (std::size_t i = begin; i < end; ++i) {
      const auto& t = triangles[tris[i].index];
      const Vec3 v0 = vertices[t[0]];
      push_lane(bvh, v0, vertices[t[1]] - v0, vertices[t[2]] - v0, tris[i].index);
    }
    while (bvh.lane_tri.size() % 4 != 0)
      push_lane(bvh, Vec3{0, 0, 0}, Vec3{0, 0, 0}, Vec3{0, 0, 0}, UINT32_MAX);
    bvh.nodes[node_index].lane_begin = lane_begin;
    bvh.nodes[node_index].lane_count = static_cast<std::uint32_t>(count);
    return node_index;
  }

  Aabb cbox;
  for (std::size_t i = begin; i < end; ++i) cbox.expand(tris[i].centroid);
  const Vec3 ext = cbox.extent();
  int axis = 0;
  if (ext.y > ext.x) axis = 1;
  if (ext.z > ext[axis]) axis = 2;

  const std::size_t mid = begin + count / 2;
  std::nth_element(tris.begin() + static_cast<std::ptrdiff_t>(begin),
                   tris.begin() + static_cast<std::ptrdiff_t>(mid),
                   tris.begin() + static_cast<std::ptrdiff_t>(end),
                   [axis](const BuildTri& a, const BuildTri& b) {
                     if (a.centroid[axis] != b.centroid[axis])
                       return a.centroid[axis] < b.centroid[axis];
                     return a.index < b.index;
                   });

  const std::uint32_t left = build_node(bvh, tris, begin, mid, vertices, triangles);
  const std::uint32_t right = build_node(bvh, tris, mid, end, vertices, triangles);
  bvh.nodes[node_index].left = left;
  bvh.nodes[node_index].right = right;
  return node_index;
}

// Slab test; inv_dir entries may be +-inf for axis-parallel rays.
inline bool hit_aabb(const Aabb& b, const Vec3& origin, const Vec3& inv_dir, double t_min,
                     double t_max) {
  for (int a = 0; a < 3; ++a) {
    double t0 = (b.lo[a] - origin[a]) * inv_dir[a];
    double t1 = (b.hi[a] - origin[a]) * inv_dir[a];
    if (inv_dir[a] < 0.0) std::swap(t0, t1);
    if (std::isnan(t0) || std::isnan(t1)) continue;  // origin on slab, parallel ray
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
    if (t_max < t_min) return false;
  }
  return true;
}

}  // namespace
}  // namespace detail

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<std::array<std::uint32_t, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const std::size_t nt = triangles_.size();
  tri_normals_.resize(nt);
  tri_areas_.resize(nt);
  area_cdf_.resize(nt);
  vertex_normals_.assign(vertices_.size(), Vec3{0, 0, 0});

  double cumulative = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    const auto& t = triangles_[i];
    const Vec3 v0 = vertices_[t[0]];
    const Vec3 e1 = vertices_[t[1]] - v0;
    const Vec3 e2 = vertices_[t[2]] - v0;
    const Vec3 c = cross(e1, e2);
    const double len = norm(c);
    tri_areas_[i] = 0.5 * len;
    tri_normals_[i] = len > 0.0 ? c / len : Vec3{0, 0, 0};
    cumulative += tri_areas_[i];
    area_cdf_[i] = cumulative;
    bounds_.expand(v0);
    bounds_.expand(vertices_[t[1]]);
    bounds_.expand(vertices_[t[2]]);
    // Area-weighted vertex normals.
    for (int k = 0; k < 3; ++k) vertex_normals_[t[k]] += c;
  }
  total_area_ = cumulative;
  for (auto& n : vertex_normals_) n = normalized(n);

  // Watertight: every directed edge is matched by its reverse exactly once.
  std::unordered_map<std::uint64_t, int> edges;
  edges.reserve(nt * 3);
  auto edge_key = [](std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
  };
  bool manifold = !triangles_.empty();
  for (const auto& t : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = t[k], b = t[(k + 1) % 3];
      if (a == b) { manifold = false; continue; }
      edges[edge_key(a, b)] += (a < b) ? 1 : -1;
    }
  }
  if (manifold) {
    for (const auto& [key, balance] : edges) {
      (void)key;
      if (balance != 0) { manifold = false; break; }
    }
    // Balance alone accepts 2k-fold edges; require exactly two incidences.
    if (manifold) {
      std::unordered_map<std::uint64_t, int> incidence;
      incidence.reserve(nt * 3);
      for (const auto& t : triangles_)
        for (int k = 0; k < 3; ++k) incidence[edge_key(t[k], t[(k + 1) % 3])]++;
      for (const auto& [key, c] : incidence) {
        (void)key;
        if (c != 2) { manifold = false; break; }
      }
    }
  }
  watertight_ = manifold;

  bvh_ = std::make_unique<detail::Bvh>();
  if (!triangles_.empty()) {
    std::vector<detail::BuildTri> build(nt);
    for (std::size_t i = 0; i < nt; ++i) {
      Aabb b;
      for (int k = 0; k < 3; ++k) b.expand(vertices_[triangles_[i][k]]);
      build[i] = {b, b.center(), static_cast<std::uint32_t>(i)};
    }
    detail::build_node(*bvh_, build, 0, nt, vertices_, triangles_);
  }
}

TriMesh::~TriMesh() = default;
TriMesh::TriMesh(TriMesh&&) noexcept = default;
TriMesh& TriMesh::operator=(TriMesh&&) noexcept = default;

std::optional<RayHit> TriMesh::raycast(const Ray& ray, double t_min, double t_max) const {
  if (bvh_->nodes.empty()) return std::nullopt;
  const auto& kern = kernels::active_kernels();
  const kernels::TriSoA soa = bvh_->soa();
  const double origin[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const double dir[3] = {ray.direction.x, ray.direction.y, ray.direction.z};
  const Vec3 inv_dir{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};

  double best_t = t_max;
  kernels::RayTriResult best;
  std::uint32_t best_base = 0;
  bool found = false;

  std::uint32_t stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const auto& node = bvh_->nodes[stack[--sp]];
    if (!detail::hit_aabb(node.box, ray.origin, inv_dir, t_min, best_t)) continue;
    if (node.leaf()) {
      const kernels::TriSoA leaf = {
          soa.v0x + node.lane_begin, soa.v0y + node.lane_begin, soa.v0z + node.lane_begin,
          soa.e1x + node.lane_begin, soa.e1y + node.lane_begin, soa.e1z + node.lane_begin,
          soa.e2x + node.lane_begin, soa.e2y + node.lane_begin, soa.e2z + node.lane_begin};
      const auto r = kern.ray_tri_nearest(leaf, node.lane_count, origin, dir, t_min, best_t);
      if (r.lane >= 0) {
        best = r;
        best_t = r.t;
        best_base = node.lane_begin;
        found = true;
      }
    } else {
      stack[sp++] = node.left;
      stack[sp++] = node.right;
    }
  }
  if (!found) return std::nullopt;

  RayHit hit;
  hit.triangle = bvh_->lane_tri[best_base + static_cast<std::uint32_t>(best.lane)];
  hit.distance = best.t;
  hit.point = ray.origin + ray.direction * best.t;
  hit.barycentric = {1.0 - best.u - best.v, best.u, best.v};
  hit.normal = shading_normal(hit.triangle, hit.barycentric);
  return hit;
}

bool TriMesh::raycast_any(const Ray& ray, double t_min, double t_max) const {
  if (bvh_->nodes.empty()) return false;
  const auto& kern = kernels::active_kernels();
  const kernels::TriSoA soa = bvh_->soa();
  const double origin[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const double dir[3] = {ray.direction.x, ray.direction.y, ray.direction.z};
  const Vec3 inv_dir{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};

  std::uint32_t stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const auto& node = bvh_->nodes[stack[--sp]];
    if (!detail::hit_aabb(node.box, ray.origin, inv_dir, t_min, t_max)) continue;
    if (node.leaf()) {
      const kernels::TriSoA leaf = {
          soa.v0x + node.lane_begin, soa.v0y + node.lane_begin, soa.v0z + node.lane_begin,
          soa.e1x + node.lane_begin, soa.e1y + node.lane_begin, soa.e1z + node.lane_begin,
          soa.e2x + node.lane_begin, soa.e2y + node.lane_begin, soa.e2z + node.lane_begin};
      if (kern.ray_tri_any(leaf, node.lane_count, origin, dir, t_min, t_max) >= 0) return true;
    } else {
      stack[sp++] = node.left;
      stack[sp++] = node.right;
    }
  }
  return false;
}

std::vector<RayHit> TriMesh::raycast_all(const Ray& ray, double t_min, double t_max) const {
  // Repeated nearest queries with an advancing window. Hits closer than
  // 1 nm apart collapse into one.
  std::vector<RayHit> hits;
  double lo = t_min;
  for (int guard = 0; guard < 4096; ++guard) {
    auto h = raycast(ray, lo, t_max);
    if (!h) break;
    lo = h->distance + 1e-9;
    hits.push_back(std::move(*h));
  }
  return hits;
}

void TriMesh::query_box(const Aabb& box, const std::function<void(std::uint32_t)>& fn) const {
  if (bvh_->nodes.empty()) return;
  std::uint32_t stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const auto& node = bvh_->nodes[stack[--sp]];
    if (!node.box.overlaps(box)) continue;
    if (node.leaf()) {
      for (std::uint32_t lane = 0; lane < node.lane_count; ++lane) {
        const std::uint32_t tri = bvh_->lane_tri[node.lane_begin + lane];
        Aabb tb;
        for (int k = 0; k < 3; ++k) tb.expand(vertices_[triangles_[tri][k]]);
        if (tb.overlaps(box)) fn(tri);
      }
    } else {
      stack[sp++] = node.left;
      stack[sp++] = node.right;
    }
  }
}

std::vector<SurfaceSample> TriMesh::sample_surface(std::size_t count, std::uint64_t seed) const {
  std::vector<SurfaceSample> samples;
  samples.reserve(count);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const double target = rng.uniform() * total_area_;
    const auto it = std::upper_bound(area_cdf_.begin(), area_cdf_.end(), target);
    const std::uint32_t tri = static_cast<std::uint32_t>(
        std::min<std::ptrdiff_t>(it - area_cdf_.begin(),
                                 static_cast<std::ptrdiff_t>(triangles_.size()) - 1));
    const double su = std::sqrt(rng.uniform());
    const double u2 = rng.uniform();
    const double b0 = 1.0 - su, b1 = su * (1.0 - u2), b2 = su * u2;
    const auto& t = triangles_[tri];
    SurfaceSample s;
    s.point = vertices_[t[0]] * b0 + vertices_[t[1]] * b1 + vertices_[t[2]] * b2;
    s.normal = tri_normals_[tri];
    s.triangle = tri;
    samples.push_back(s);
  }
  return samples;
}

MassProperties TriMesh::mass_properties(double density) const {
  if (!watertight_) throw NotWatertight();
  double volume = 0.0;
  Vec3 moment{0, 0, 0};
  for (const auto& t : triangles_) {
    const Vec3 a = vertices_[t[0]], b = vertices_[t[1]], c = vertices_[t[2]];
    const double v = dot(a, cross(b, c)) / 6.0;  // signed tetra volume against origin
    volume += v;
    moment += (a + b + c) * (v / 4.0);
  }
  MassProperties mp;
  mp.center_of_mass = volume != 0.0 ? moment / volume : Vec3{0, 0, 0};
  mp.volume = std::abs(volume);
  mp.mass = mp.volume * density;
  return mp;
}

namespace {
// Ericson, Real-Time Collision Detection, closest point on triangle.
Vec3 closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}
}  // namespace

std::pair<Vec3, double> TriMesh::closest_point(const Vec3& p) const {
  Vec3 best{0, 0, 0};
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const auto& t : triangles_) {
    const Vec3 q =
        closest_point_triangle(p, vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    const double d2 = norm2(q - p);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = q;
    }
  }
  return {best, std::sqrt(best_d2)};
}

Vec3 TriMesh::shading_normal(std::uint32_t tri, const Vec3& bary, bool flat) const {
  if (flat) return tri_normals_[tri];
  const auto& t = triangles_[tri];
  const Vec3 n = vertex_normals_[t[0]] * bary.x + vertex_normals_[t[1]] * bary.y +
                 vertex_normals_[t[2]] * bary.z;
  const double len = norm(n);
  return len > 1e-12 ? n / len : tri_normals_[tri];
}

}  // namespace grasp

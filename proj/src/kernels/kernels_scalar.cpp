#include <limits>

#include "graspgen/kernels.hpp"

namespace grasp::kernels {
namespace {

RayTriResult ray_tri_nearest_scalar(const TriSoA& tris, std::size_t n,
                                    const double origin[3], const double dir[3],
                                    double t_min, double t_max) {
  RayTriResult best;
  best.t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    // p = dir x e2, det = e1 . p
    const double px = dir[1] * tris.e2z[i] - dir[2] * tris.e2y[i];
    const double py = dir[2] * tris.e2x[i] - dir[0] * tris.e2z[i];
    const double pz = dir[0] * tris.e2y[i] - dir[1] * tris.e2x[i];
    const double det = tris.e1x[i] * px + tris.e1y[i] * py + tris.e1z[i] * pz;
    if (det > -kRayTriDetEps && det < kRayTriDetEps) continue;
    const double inv_det = 1.0 / det;
    const double sx = origin[0] - tris.v0x[i];
    const double sy = origin[1] - tris.v0y[i];
    const double sz = origin[2] - tris.v0z[i];
    const double u = (sx * px + sy * py + sz * pz) * inv_det;
    if (u < 0.0 || u > 1.0) continue;
    // q = s x e1
    const double qx = sy * tris.e1z[i] - sz * tris.e1y[i];
    const double qy = sz * tris.e1x[i] - sx * tris.e1z[i];
    const double qz = sx * tris.e1y[i] - sy * tris.e1x[i];
    const double v = (dir[0] * qx + dir[1] * qy + dir[2] * qz) * inv_det;
    if (v < 0.0 || u + v > 1.0) continue;
    const double t = (tris.e2x[i] * qx + tris.e2y[i] * qy + tris.e2z[i] * qz) * inv_det;
    if (t < t_min || t > t_max) continue;
    if (t < best.t) {
      best.t = t;
      best.u = u;
      best.v = v;
      best.lane = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (best.lane < 0) best.t = 0.0;
  return best;
}

std::ptrdiff_t ray_tri_any_scalar(const TriSoA& tris, std::size_t n,
                                  const double origin[3], const double dir[3],
                                  double t_min, double t_max) {
  for (std::size_t i = 0; i < n; ++i) {
    const double px = dir[1] * tris.e2z[i] - dir[2] * tris.e2y[i];
    const double py = dir[2] * tris.e2x[i] - dir[0] * tris.e2z[i];
    const double pz = dir[0] * tris.e2y[i] - dir[1] * tris.e2x[i];
    const double det = tris.e1x[i] * px + tris.e1y[i] * py + tris.e1z[i] * pz;
    if (det > -kRayTriDetEps && det < kRayTriDetEps) continue;
    const double inv_det = 1.0 / det;
    const double sx = origin[0] - tris.v0x[i];
    const double sy = origin[1] - tris.v0y[i];
    const double sz = origin[2] - tris.v0z[i];
    const double u = (sx * px + sy * py + sz * pz) * inv_det;
    if (u < 0.0 || u > 1.0) continue;
    const double qx = sy * tris.e1z[i] - sz * tris.e1y[i];
    const double qy = sz * tris.e1x[i] - sx * tris.e1z[i];
    const double qz = sx * tris.e1y[i] - sy * tris.e1x[i];
    const double v = (dir[0] * qx + dir[1] * qy + dir[2] * qz) * inv_det;
    if (v < 0.0 || u + v > 1.0) continue;
    const double t = (tris.e2x[i] * qx + tris.e2y[i] * qy + tris.e2z[i] * qz) * inv_det;
    if (t >= t_min && t <= t_max) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

std::size_t count_eq_u16_scalar(const std::uint16_t* data, std::size_t n, std::uint16_t value) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += (data[i] == value);
  return c;
}

std::size_t count_nonzero_u16_scalar(const std::uint16_t* data, std::size_t n) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += (data[i] != 0);
  return c;
}

std::size_t count_eq_pair_u16_scalar(const std::uint16_t* a, const std::uint16_t* b,
                                     std::size_t n, std::uint16_t va, std::uint16_t vb) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += (a[i] == va && b[i] == vb);
  return c;
}

const KernelTable kScalarTable = {
    ray_tri_nearest_scalar, ray_tri_any_scalar,      count_eq_u16_scalar,
    count_nonzero_u16_scalar, count_eq_pair_u16_scalar, "scalar",
};

}  // namespace

const KernelTable& scalar_kernels() { return kScalarTable; }

}  // namespace grasp::kernels

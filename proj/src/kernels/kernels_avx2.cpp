// AVX2 variants of the data-parallel kernels. This translation unit is the
// only one compiled with -mavx2; everything here is guarded so the build
// still works on other targets (the table is simply absent).

#include "graspgen/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <limits>

namespace grasp::kernels {
namespace {

inline __m256d cross_x(__m256d ay, __m256d az, __m256d by, __m256d bz) {
  return _mm256_sub_pd(_mm256_mul_pd(ay, bz), _mm256_mul_pd(az, by));
}

struct Block {
  __m256d t, u, v;
  __m256d valid;  // all-ones mask per valid lane
};

// One Möller–Trumbore block over 4 SoA lanes starting at i.
// Lanes are read unconditionally; callers guarantee padding to 4.
inline Block mt_block(const TriSoA& tris, std::size_t i, const double origin[3],
                      const double dir[3], double t_min, double t_max) {
  const __m256d dx = _mm256_set1_pd(dir[0]);
  const __m256d dy = _mm256_set1_pd(dir[1]);
  const __m256d dz = _mm256_set1_pd(dir[2]);

  const __m256d e1x = _mm256_loadu_pd(tris.e1x + i);
  const __m256d e1y = _mm256_loadu_pd(tris.e1y + i);
  const __m256d e1z = _mm256_loadu_pd(tris.e1z + i);
  const __m256d e2x = _mm256_loadu_pd(tris.e2x + i);
  const __m256d e2y = _mm256_loadu_pd(tris.e2y + i);
  const __m256d e2z = _mm256_loadu_pd(tris.e2z + i);

  const __m256d px = cross_x(dy, dz, e2y, e2z);
  const __m256d py = cross_x(dz, dx, e2z, e2x);
  const __m256d pz = cross_x(dx, dy, e2x, e2y);

  const __m256d det = _mm256_add_pd(
      _mm256_add_pd(_mm256_mul_pd(e1x, px), _mm256_mul_pd(e1y, py)), _mm256_mul_pd(e1z, pz));

  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d valid = _mm256_cmp_pd(_mm256_and_pd(det, abs_mask),
                                _mm256_set1_pd(kRayTriDetEps), _CMP_GE_OQ);

  const __m256d inv_det = _mm256_div_pd(_mm256_set1_pd(1.0), det);

  const __m256d sx = _mm256_sub_pd(_mm256_set1_pd(origin[0]), _mm256_loadu_pd(tris.v0x + i));
  const __m256d sy = _mm256_sub_pd(_mm256_set1_pd(origin[1]), _mm256_loadu_pd(tris.v0y + i));
  const __m256d sz = _mm256_sub_pd(_mm256_set1_pd(origin[2]), _mm256_loadu_pd(tris.v0z + i));

  const __m256d u = _mm256_mul_pd(
      _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(sx, px), _mm256_mul_pd(sy, py)),
                    _mm256_mul_pd(sz, pz)),
      inv_det);
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(u, _mm256_setzero_pd(), _CMP_GE_OQ));
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(u, _mm256_set1_pd(1.0), _CMP_LE_OQ));

  const __m256d qx = cross_x(sy, sz, e1y, e1z);
  const __m256d qy = cross_x(sz, sx, e1z, e1x);
  const __m256d qz = cross_x(sx, sy, e1x, e1y);

  const __m256d v = _mm256_mul_pd(
      _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, qx), _mm256_mul_pd(dy, qy)),
                    _mm256_mul_pd(dz, qz)),
      inv_det);
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(v, _mm256_setzero_pd(), _CMP_GE_OQ));
  valid = _mm256_and_pd(valid,
                        _mm256_cmp_pd(_mm256_add_pd(u, v), _mm256_set1_pd(1.0), _CMP_LE_OQ));

  const __m256d t = _mm256_mul_pd(
      _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(e2x, qx), _mm256_mul_pd(e2y, qy)),
                    _mm256_mul_pd(e2z, qz)),
      inv_det);
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, _mm256_set1_pd(t_min), _CMP_GE_OQ));
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, _mm256_set1_pd(t_max), _CMP_LE_OQ));

  return {t, u, v, valid};
}

RayTriResult ray_tri_nearest_avx2(const TriSoA& tris, std::size_t n,
                                  const double origin[3], const double dir[3],
                                  double t_min, double t_max) {
  RayTriResult best;
  best.t = std::numeric_limits<double>::infinity();
  alignas(32) double ts[4], us[4], vs[4];
  for (std::size_t i = 0; i < n; i += 4) {
    const Block b = mt_block(tris, i, origin, dir, t_min, t_max);
    const int mask = _mm256_movemask_pd(b.valid);
    if (mask == 0) continue;
    _mm256_store_pd(ts, b.t);
    _mm256_store_pd(us, b.u);
    _mm256_store_pd(vs, b.v);
    // Lane-ordered reduction keeps the scalar tie-break (lowest lane wins).
    for (int j = 0; j < 4; ++j) {
      const std::size_t lane = i + static_cast<std::size_t>(j);
      if (lane >= n || !(mask & (1 << j))) continue;
      if (ts[j] < best.t) {
        best.t = ts[j];
        best.u = us[j];
        best.v = vs[j];
        best.lane = static_cast<std::ptrdiff_t>(lane);
      }
    }
  }
  if (best.lane < 0) best.t = 0.0;
  return best;
}

std::ptrdiff_t ray_tri_any_avx2(const TriSoA& tris, std::size_t n,
                                const double origin[3], const double dir[3],
                                double t_min, double t_max) {
  for (std::size_t i = 0; i < n; i += 4) {
    const Block b = mt_block(tris, i, origin, dir, t_min, t_max);
    int mask = _mm256_movemask_pd(b.valid);
    if (mask == 0) continue;
    for (int j = 0; j < 4; ++j) {
      const std::size_t lane = i + static_cast<std::size_t>(j);
      if (lane < n && (mask & (1 << j))) return static_cast<std::ptrdiff_t>(lane);
    }
  }
  return -1;
}

std::size_t count_eq_u16_avx2(const std::uint16_t* data, std::size_t n, std::uint16_t value) {
  std::size_t c = 0;
  const __m256i needle = _mm256_set1_epi16(static_cast<short>(value));
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m256i d = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
    const __m256i eq = _mm256_cmpeq_epi16(d, needle);
    c += static_cast<std::size_t>(_mm_popcnt_u32(
             static_cast<unsigned>(_mm256_movemask_epi8(eq)))) / 2;
  }
  for (; i < n; ++i) c += (data[i] == value);
  return c;
}

std::size_t count_nonzero_u16_avx2(const std::uint16_t* data, std::size_t n) {
  return n - count_eq_u16_avx2(data, n, 0);
}

std::size_t count_eq_pair_u16_avx2(const std::uint16_t* a, const std::uint16_t* b,
                                   std::size_t n, std::uint16_t va, std::uint16_t vb) {
  std::size_t c = 0;
  const __m256i na = _mm256_set1_epi16(static_cast<short>(va));
  const __m256i nb = _mm256_set1_epi16(static_cast<short>(vb));
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m256i ea =
        _mm256_cmpeq_epi16(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)), na);
    const __m256i eb =
        _mm256_cmpeq_epi16(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)), nb);
    const __m256i both = _mm256_and_si256(ea, eb);
    c += static_cast<std::size_t>(_mm_popcnt_u32(
             static_cast<unsigned>(_mm256_movemask_epi8(both)))) / 2;
  }
  for (; i < n; ++i) c += (a[i] == va && b[i] == vb);
  return c;
}

const KernelTable kAvx2Table = {
    ray_tri_nearest_avx2, ray_tri_any_avx2,      count_eq_u16_avx2,
    count_nonzero_u16_avx2, count_eq_pair_u16_avx2, "avx2",
};

}  // namespace

const KernelTable* avx2_kernels_impl() { return &kAvx2Table; }

}  // namespace grasp::kernels

#else

namespace grasp::kernels {
const KernelTable* avx2_kernels_impl() { return nullptr; }
}  // namespace grasp::kernels

#endif  // __AVX2__

#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used by the ray tracer and the mask labelers.
// Each kernel has a scalar reference implementation and may have SIMD
// variants; the active variant is selected once at startup from CPU
// features. Variants are required to agree with the scalar reference
// (equivalence-tested); both translation units are built with
// -ffp-contract=off so results are bit-identical lane for lane.

namespace grasp::kernels {

// Triangle soup in SoA layout, padded to a multiple of 4 lanes.
// Padding lanes must have e1 = e2 = 0 (degenerate, never hit).
struct TriSoA {
  const double* v0x; const double* v0y; const double* v0z;
  const double* e1x; const double* e1y; const double* e1z;  // v1 - v0
  const double* e2x; const double* e2y; const double* e2z;  // v2 - v0
};

struct RayTriResult {
  double t = 0.0;
  double u = 0.0;  // barycentric weight of v1
  double v = 0.0;  // barycentric weight of v2
  std::ptrdiff_t lane = -1;  // -1: no hit
};

// Möller–Trumbore over lanes [0, n). Determinant epsilon 1e-9; hits are
// accepted for t in [t_min, t_max]; on equal distance the lowest lane wins.
using RayTriNearestFn = RayTriResult (*)(const TriSoA& tris, std::size_t n,
                                         const double origin[3], const double dir[3],
                                         double t_min, double t_max);

// First lane with any hit in [t_min, t_max], or -1. Early-exits.
using RayTriAnyFn = std::ptrdiff_t (*)(const TriSoA& tris, std::size_t n,
                                       const double origin[3], const double dir[3],
                                       double t_min, double t_max);

using CountEqU16Fn = std::size_t (*)(const std::uint16_t* data, std::size_t n,
                                     std::uint16_t value);
using CountNonzeroU16Fn = std::size_t (*)(const std::uint16_t* data, std::size_t n);

// Count of i with a[i] == va && b[i] == vb (mask intersections).
using CountEqPairU16Fn = std::size_t (*)(const std::uint16_t* a, const std::uint16_t* b,
                                         std::size_t n, std::uint16_t va, std::uint16_t vb);

struct KernelTable {
  RayTriNearestFn ray_tri_nearest;
  RayTriAnyFn ray_tri_any;
  CountEqU16Fn count_eq_u16;
  CountNonzeroU16Fn count_nonzero_u16;
  CountEqPairU16Fn count_eq_pair_u16;
  const char* isa;
};

// Scalar reference; always available.
const KernelTable& scalar_kernels();

// AVX2 variant; nullptr if not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

// Runtime-selected table (best available variant).
const KernelTable& active_kernels();

inline constexpr double kRayTriDetEps = 1e-9;

}  // namespace grasp::kernels

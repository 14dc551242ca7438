#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "graspgen/mesh.hpp"
#include "graspgen/suction.hpp"

namespace grasp {

// One labeled grasp attempt: where the cup was placed and whether a seal
// was observed. Tear-off forces are carried for reporting only.
struct SealAttemptRecord {
  std::shared_ptr<const TriMesh> mesh;
  std::string mesh_path;
  VacuumGraspCandidate candidate;
  bool observed_seal = false;
  std::optional<double> tearoff_force;  // N
};

// The two free model parameters left after pinning k_e: the stiffness
// ratio k_r/k_e and the break threshold as a fraction of the vacuum force.
struct CalibrationParams {
  double stiffness_ratio = 1.0;     // k_r / k_e
  double threshold_fraction = 0.0;  // eps_break / F_p
};

struct SearchBox {
  double ratio_lo = 0.01, ratio_hi = 100.0;  // log-scaled dimension
  double fraction_lo = 0.0, fraction_hi = 0.5;
};

struct CalibrationResult {
  CalibrationParams best;
  double best_objective = 0.0;  // verdict accuracy in [0, 1]
  struct TracePoint {
    CalibrationParams params;
    double objective = 0.0;
  };
  std::vector<TracePoint> trace;  // evaluation order
};

// Applies the calibration parameters onto the cup geometry (k_e pinned to
// 1 N/m, so stiffness_ratio lands in ring_stiffness directly).
SuctionCupParams apply_calibration(const SuctionCupParams& cup,
                                   const CalibrationParams& params);

// Fraction of records whose seal verdict under `params` matches the
// observed label. Projection failures count as predicted no-seal.
// Throws EmptyRecordSet.
double calibration_objective(const std::vector<SealAttemptRecord>& records,
                             const SuctionCupParams& cup, const CalibrationParams& params);

// Gaussian-process surrogate (squared-exponential kernel, 1e-6 jitter,
// length scales refit by maximum likelihood each round) with expected-
// improvement acquisition over the box; initial design is a Latin
// hypercube of size min(10, budget). Deterministic given seed.
CalibrationResult bayes_optimize(const std::vector<SealAttemptRecord>& records,
                                 const SuctionCupParams& cup, const SearchBox& box,
                                 int budget, std::uint64_t seed);

// CSV rows: mesh,contact_x,contact_y,contact_z,approach_x,approach_y,
// approach_z,label,tearoff_n (tearoff optional). Contacts are snapped to
// the mesh surface; rows farther than 5 mm from it are rejected.
// Mesh paths resolve relative to the CSV location.
std::vector<SealAttemptRecord> load_records_csv(const std::string& path);

}  // namespace grasp

#include "graspgen/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>

#include "graspgen/errors.hpp"
#include "graspgen/rng.hpp"

namespace grasp {

SuctionCupParams apply_calibration(const SuctionCupParams& cup,
                                   const CalibrationParams& params) {
  SuctionCupParams p = cup;
  p.elastic_stiffness = SuctionCupParams::recommended_elastic_stiffness(
      cup.radius, cup.pressure_difference, cup.mass_point_count);
  p.ring_stiffness = params.stiffness_ratio * p.elastic_stiffness;
  p.break_threshold = params.threshold_fraction * p.vacuum_force();
  return p;
}

double calibration_objective(const std::vector<SealAttemptRecord>& records,
                             const SuctionCupParams& cup, const CalibrationParams& params) {
  if (records.empty()) throw EmptyRecordSet();
  const SuctionCupParams p = apply_calibration(cup, params);
  std::size_t correct = 0;
  for (const auto& r : records) {
    const SealEvaluation eval = evaluate_seal(*r.mesh, p, r.candidate);
    if (eval.success == r.observed_seal) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

namespace {

struct Gp {
  Eigen::MatrixXd x;       // n x 2, normalized inputs
  Eigen::VectorXd y;       // centered objectives
  double mean = 0.0;
  double signal_var = 1.0;
  double len0 = 0.3, len1 = 0.3;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;

  static constexpr double kJitter = 1e-6;

  double kernel(double dx0, double dx1) const {
    const double a = dx0 / len0, b = dx1 / len1;
    return signal_var * std::exp(-0.5 * (a * a + b * b));
  }

  // Fits Cholesky for the current hyperparameters; returns log marginal
  // likelihood (up to the constant term).
  double factorize() {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = kernel(x(i, 0) - x(j, 0), x(i, 1) - x(j, 1));
        k(i, j) = v;
        k(j, i) = v;
      }
      k(i, i) += kJitter;
    }
    llt.compute(k);
    if (llt.info() != Eigen::Success) return -1e30;
    alpha = llt.solve(y);
    double log_det = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(l(i, i));
    return -0.5 * y.dot(alpha) - log_det;
  }

  // Maximum-likelihood length scales over a fixed candidate grid.
  void fit(const std::vector<std::array<double, 2>>& xs, const std::vector<double>& ys) {
    const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
    x.resize(n, 2);
    y.resize(n);
    mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double var = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      x(static_cast<Eigen::Index>(i), 0) = xs[i][0];
      x(static_cast<Eigen::Index>(i), 1) = xs[i][1];
      y(static_cast<Eigen::Index>(i)) = ys[i] - mean;
      var += (ys[i] - mean) * (ys[i] - mean);
    }
    var /= static_cast<double>(ys.size());
    signal_var = std::max(var, 1e-6);

    static constexpr double kLenGrid[] = {0.08, 0.15, 0.3, 0.6, 1.0, 2.0};
    double best_ml = -1e30, best0 = 0.3, best1 = 0.3;
    for (const double l0 : kLenGrid) {
      for (const double l1 : kLenGrid) {
        len0 = l0;
        len1 = l1;
        const double ml = factorize();
        if (ml > best_ml) {
          best_ml = ml;
          best0 = l0;
          best1 = l1;
        }
      }
    }
    len0 = best0;
    len1 = best1;
    factorize();
  }

  void predict(double x0, double x1, double& mu, double& sigma) const {
    const Eigen::Index n = x.rows();
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k(i) = kernel(x0 - x(i, 0), x1 - x(i, 1));
    mu = mean + k.dot(alpha);
    const Eigen::VectorXd v = llt.matrixL().solve(k);
    const double var = signal_var + kJitter - v.squaredNorm();
    sigma = std::sqrt(std::max(var, 1e-12));
  }
};

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
}

double expected_improvement(const Gp& gp, double x0, double x1, double best_y) {
  constexpr double kXi = 5e-3;
  double mu, sigma;
  gp.predict(x0, x1, mu, sigma);
  const double delta = mu - best_y - kXi;
  if (sigma < 1e-12) return std::max(delta, 0.0);
  const double z = delta / sigma;
  return delta * norm_cdf(z) + sigma * norm_pdf(z);
}

}  // namespace

CalibrationResult bayes_optimize(const std::vector<SealAttemptRecord>& records,
                                 const SuctionCupParams& cup, const SearchBox& box,
                                 int budget, std::uint64_t seed) {
  if (records.empty()) throw EmptyRecordSet();
  if (budget < 10) throw std::invalid_argument("bayes_optimize: budget must be >= 10");
  if (!(box.ratio_lo > 0.0) || !(box.ratio_hi > box.ratio_lo) ||
      !(box.fraction_hi > box.fraction_lo) || !std::isfinite(box.fraction_lo) ||
      !std::isfinite(box.fraction_hi))
    throw std::invalid_argument("bayes_optimize: malformed search box");

  const double log_lo = std::log(box.ratio_lo);
  const double log_hi = std::log(box.ratio_hi);
  auto denormalize = [&](double x0, double x1) {
    CalibrationParams p;
    // Clamp: exp/log round-trips can land an ulp outside the box.
    p.stiffness_ratio =
        std::clamp(std::exp(log_lo + x0 * (log_hi - log_lo)), box.ratio_lo, box.ratio_hi);
    p.threshold_fraction =
        std::clamp(box.fraction_lo + x1 * (box.fraction_hi - box.fraction_lo),
                   box.fraction_lo, box.fraction_hi);
    return p;
  };

  CalibrationResult result;
  std::vector<std::array<double, 2>> xs;
  std::vector<double> ys;
  Rng rng(derive_seed(seed, 0xCA1));

  auto evaluate = [&](double x0, double x1) {
    x0 = std::clamp(x0, 0.0, 1.0);
    x1 = std::clamp(x1, 0.0, 1.0);
    const CalibrationParams p = denormalize(x0, x1);
    const double obj = calibration_objective(records, cup, p);
    xs.push_back({x0, x1});
    ys.push_back(obj);
    result.trace.push_back({p, obj});
    if (obj > result.best_objective || result.trace.size() == 1) {
      result.best_objective = obj;
      result.best = p;
    }
  };

  // Latin hypercube initial design.
  const int init = std::min(10, budget);
  {
    std::vector<int> perm0(static_cast<std::size_t>(init)), perm1(perm0);
    std::iota(perm0.begin(), perm0.end(), 0);
    std::iota(perm1.begin(), perm1.end(), 0);
    for (int i = init - 1; i > 0; --i) {
      std::swap(perm0[static_cast<std::size_t>(i)],
                perm0[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
      std::swap(perm1[static_cast<std::size_t>(i)],
                perm1[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
    }
    for (int i = 0; i < init; ++i)
      evaluate((perm0[static_cast<std::size_t>(i)] + rng.uniform()) / init,
               (perm1[static_cast<std::size_t>(i)] + rng.uniform()) / init);
  }

  Gp gp;
  while (static_cast<int>(result.trace.size()) < budget) {
    gp.fit(xs, ys);
    const double best_y = *std::max_element(ys.begin(), ys.end());

    // Dense grid, then shrinking local refinement around the argmax.
    double bx0 = 0.5, bx1 = 0.5, best_ei = -1.0;
    constexpr int kGrid = 61;
    for (int i = 0; i < kGrid; ++i) {
      for (int j = 0; j < kGrid; ++j) {
        const double x0 = static_cast<double>(i) / (kGrid - 1);
        const double x1 = static_cast<double>(j) / (kGrid - 1);
        const double ei = expected_improvement(gp, x0, x1, best_y);
        if (ei > best_ei) {
          best_ei = ei;
          bx0 = x0;
          bx1 = x1;
        }
      }
    }
    double radius = 1.0 / (kGrid - 1);
    for (int round = 0; round < 3; ++round) {
      double cx0 = bx0, cx1 = bx1;
      for (int i = -4; i <= 4; ++i) {
        for (int j = -4; j <= 4; ++j) {
          const double x0 = std::clamp(cx0 + i * radius / 4.0, 0.0, 1.0);
          const double x1 = std::clamp(cx1 + j * radius / 4.0, 0.0, 1.0);
          const double ei = expected_improvement(gp, x0, x1, best_y);
          if (ei > best_ei) {
            best_ei = ei;
            bx0 = x0;
            bx1 = x1;
          }
        }
      }
      radius *= 0.25;
    }

    // Degenerate acquisition (constant surrogate or re-picked point):
    // fall back to a seeded uniform draw.
    bool duplicate = false;
    for (const auto& p : xs)
      if (std::abs(p[0] - bx0) < 1e-9 && std::abs(p[1] - bx1) < 1e-9) duplicate = true;
    if (best_ei <= 0.0 || duplicate) {
      bx0 = rng.uniform();
      bx1 = rng.uniform();
    }
    evaluate(bx0, bx1);
  }
  return result;
}

std::vector<SealAttemptRecord> load_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
  ++line_no;
  {
    std::string header = line;
    header.erase(std::remove_if(header.begin(), header.end(),
                                [](char c) { return c == ' ' || c == '\r'; }),
                 header.end());
    if (header !=
        "mesh,contact_x,contact_y,contact_z,approach_x,approach_y,approach_z,label,tearoff_n")
      throw ParseError(path, 1, "unexpected CSV header");
  }

  std::unordered_map<std::string, std::shared_ptr<const TriMesh>> cache;
  std::vector<SealAttemptRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 8 && cells.size() != 9)
      throw ParseError(path, line_no, "expected 8 or 9 cells");

    auto num = [&](std::size_t i) {
      char* end = nullptr;
      const double v = std::strtod(cells[i].c_str(), &end);
      if (end != cells[i].c_str() + cells[i].size() || cells[i].empty())
        throw ParseError(path, line_no, "bad number '" + cells[i] + "'");
      return v;
    };

    SealAttemptRecord r;
    r.mesh_path = cells[0];
    const std::string resolved = (base / r.mesh_path).string();
    auto it = cache.find(resolved);
    if (it == cache.end())
      it = cache.emplace(resolved, std::make_shared<TriMesh>(load_mesh(resolved))).first;
    r.mesh = it->second;

    const Vec3 raw_contact{num(1), num(2), num(3)};
    r.candidate.approach = normalized(Vec3{num(4), num(5), num(6)});
    if (norm(r.candidate.approach) < 0.5)
      throw ParseError(path, line_no, "zero approach direction");

    const auto [snapped, dist] = r.mesh->closest_point(raw_contact);
    if (dist > 5e-3)
      throw ParseError(path, line_no, "contact point farther than 5 mm from mesh surface");
    r.candidate.contact = snapped;

    const long label = std::lround(num(7));
    if (label != 0 && label != 1) throw ParseError(path, line_no, "label must be 0 or 1");
    r.observed_seal = label == 1;
    if (cells.size() == 9 && !cells[8].empty()) r.tearoff_force = num(8);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace grasp

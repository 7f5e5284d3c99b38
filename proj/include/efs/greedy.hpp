#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "efs/design.hpp"
#include "efs/rng.hpp"
#include "efs/weights.hpp"

namespace efs {

/// Feature indices below are 0-based column positions of the design.

struct SelectionPath {
  std::vector<int> selected;                 // j_1, ..., j_k in selection order
  std::vector<std::vector<int>> candidates;  // V_1, ..., V_k
  std::vector<double> residual_norms;        // ||r_l||^2 after each step
  std::vector<std::string> diagnostics;      // features skipped as linearly dependent
};

struct FitMeta {
  int k = 0;
  int m = 0;
  int ensemble_size = 1;  // B; 0 marks the exact infinite-ensemble limit
};

struct FittedModel {
  Eigen::VectorXd coef;    // length p, original column order
  Eigen::VectorXd fitted;  // X * coef
  FitMeta meta;
};

struct PathFit {
  SelectionPath path;
  FittedModel model;
};

/// Plain k-step forward selection.
PathFit fs_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k);

/// One randomized run: each step maximizes over m candidates drawn without
/// replacement from the unselected features (all of them once fewer than m remain).
/// Draws come from make_stream(seed, 0).
PathFit efs_base_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k, int m,
                     std::uint64_t seed);

/// Average of B randomized runs; run b draws from make_stream(seed, b).
/// Runs are spread across OpenMP workers and averaged in index order.
FittedModel efs_ensemble_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k, int m,
                             int ensemble_size, std::uint64_t seed);

/// B -> infinity limit on an orthonormal design: coefficient of rank r is w_r * beta_hat_r.
FittedModel efs_exact_orthogonal(const DesignMatrix& design, const FeatureOrdering& ordering, int k,
                                 int m, const WeightTable& weights);

// ---------------------------------------------------------------------------
// Covariance-form kernels. They only need X'X/n, X'y/n and ||y||^2, so the
// per-step cost is O(p * l) instead of O(n * p). Columns need not be unit norm:
// the selection score is invariant to column scaling.

struct GramSystem {
  Eigen::MatrixXd gram;  // X'X / n
  Eigen::VectorXd xty;   // X'y / n
  double yy = 0.0;       // ||y||^2

  static GramSystem build(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
  /// Same design, new response.
  static GramSystem with_response(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y);
  int p() const { return static_cast<int>(gram.rows()); }
};

struct GreedyTrace {
  SelectionPath path;
  Eigen::MatrixXd coef_path;  // p x k; column l holds the coefficients after l + 1 steps
};

/// Squared projected norm below which a feature counts as linearly dependent.
inline constexpr double kGramDegenerateSqNorm = 1e-12;

/// Runs up to k greedy steps. With `engine == nullptr` or m >= remaining, every
/// unselected feature is a candidate and no random numbers are consumed.
GreedyTrace greedy_path(const GramSystem& system, int k, int m, Engine* engine,
                        bool record_candidates = false);

/// Averaged coefficient paths of B randomized runs (p x k), run b seeded by make_stream(seed, b).
Eigen::MatrixXd ensemble_coef_path(const GramSystem& system, int k, int m, int ensemble_size,
                                   std::uint64_t seed);

namespace reference {

/// Squared-norm-free threshold used by the explicit Gram-Schmidt reference.
inline constexpr double kDegenerateNorm = 1e-10;

/// Serial reference implementations. They orthogonalize the selected columns
/// explicitly (twice, for stability), evaluate the selection score from the
/// projected vectors, and obtain coefficients with a pivoted QR solve.
PathFit fs_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k);
PathFit efs_base_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k, int m,
                     std::uint64_t seed);
FittedModel efs_ensemble_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k, int m,
                             int ensemble_size, std::uint64_t seed);

}  // namespace reference

}  // namespace efs

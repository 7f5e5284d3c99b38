#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "efs/design.hpp"
#include "efs/weights.hpp"

namespace efs {

struct DfEstimate {
  double df = 0.0;
  double stderr_ = 0.0;
  std::int64_t replicates = 0;
};

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// An estimator procedure: fitted values for response y. Must be safe to call
/// concurrently; any randomness has to come from `seed`.
using Fitter =
    std::function<Eigen::VectorXd(const DesignMatrix& design, const Eigen::VectorXd& y, std::uint64_t seed)>;

/// Like Fitter but returns several fits at once (n x K), e.g. a whole selection path.
using PathFitter =
    std::function<Eigen::MatrixXd(const DesignMatrix& design, const Eigen::VectorXd& y, std::uint64_t seed)>;

/// Per-replicate samples from a fixed-design simulation y = f + eps, eps ~ N(0, sigma2 I).
struct PathMonteCarlo {
  Eigen::MatrixXd df_samples;     // R x K, eps'fhat / sigma2
  Eigen::MatrixXd train_samples;  // R x K, ||y - fhat||^2
  Eigen::MatrixXd risk_samples;   // R x K, ||f - fhat||^2
  double sigma2 = 0.0;

  std::int64_t replicates() const { return df_samples.rows(); }
  int columns() const { return static_cast<int>(df_samples.cols()); }
  DfEstimate df(int column) const;
  /// df of the estimator sum_c weights[c] * fhat_c (df is linear in the estimator).
  DfEstimate df_combination(const Eigen::VectorXd& weights) const;
  MeanEstimate train_mse(int column) const;
  MeanEstimate train_mse_difference(int a, int b) const;
  MeanEstimate risk(int column) const;
};

/// Replicate r draws its noise from make_stream(seed, r) and passes
/// derive_seed(seed, {r, 1}) to the fitter. Replicates run on OpenMP workers.
PathMonteCarlo monte_carlo_path(const PathFitter& fitter, const DesignMatrix& design,
                                const Eigen::VectorXd& true_f, double sigma2, std::int64_t replicates,
                                std::uint64_t seed);

/// df = sum_i Cov(y_i, fhat_i) / sigma2, estimated through E[eps'fhat] / sigma2.
DfEstimate df_monte_carlo(const Fitter& fitter, const DesignMatrix& design, const Eigen::VectorXd& true_f,
                          double sigma2, std::int64_t replicates, std::uint64_t seed);

/// Weighted telescoping sum sum_j w_j (df_j - df_{j-1}) with df_0 = 0.
/// `fs_df` holds df(FS(1)) .. df(FS(p)).
double df_decomposition(std::span<const double> fs_df, const WeightTable& weights);

/// Same sum evaluated per replicate on a simulated FS path (columns FS(1)..FS(p)),
/// which yields a standard error for the decomposition.
DfEstimate df_decomposition(const PathMonteCarlo& fs_path, const WeightTable& weights);

/// ||y - fhat_FS(k)||^2 - ||y - fhat_EFS(k,m)||^2 on an orthonormal design, from the
/// sorted squared OLS coefficients. Positive means the ensemble fits the training data better.
double training_gap(std::span<const double> beta_hat_sq, const WeightTable& weights);

/// (1/4) Bbar^2 / Abar, where Abar and Bbar average beta_hat_sq over ranks 1..k and k+1..2k.
double training_gap_bound(std::span<const double> beta_hat_sq, int k);

struct ErrorDecomposition {
  double train_mse = 0.0;   // E||y - fhat||^2
  double df_term = 0.0;     // 2 sigma2 df / n
  double pred_proxy = 0.0;  // train_mse + df_term = E||f - fhat||^2 + sigma2
  double sigma2 = 0.0;

  /// E||f - fhat||^2 implied by the decomposition.
  double risk() const { return pred_proxy - sigma2; }
};

ErrorDecomposition prediction_decomposition(double train_mse, double df, double sigma2, int n);

struct MajorizationReport {
  bool holds = true;
  double max_violation = 0.0;   // largest positive prefix_m(l) - prefix_m'(l)
  double max_total_gap = 0.0;   // largest |prefix_m(p) - prefix_m'(p)|
  std::vector<int> failing_pairs;  // lower m of each failing adjacent pair
};

/// Checks prefix-sum dominance of the weight tables along an ascending m grid.
MajorizationReport majorization_check(int k, int p, std::span<const int> m_grid);

/// Orthogonal-design elastic net: sign(b) (|b| - lambda1/2)_+ / (1 + lambda2).
Eigen::VectorXd elastic_net_orthogonal(const Eigen::VectorXd& beta_hat, double lambda1, double lambda2);

/// Smallest RMS distance between |coef| and any elastic-net profile s (|beta_hat| - t)_+
/// with t below the smallest kept |beta_hat|. Zero when the profile is reproducible.
double elastic_net_mismatch(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& coef);

/// Correlated design in which greedy selection first picks a spurious feature.
struct EscapeDesign {
  DesignMatrix design;
  Eigen::VectorXd y;  // beta (x_1 + x_2) + zeta (x_3 + ... + x_{p-1}), noiseless
  double beta = 0.0;
  double zeta = 0.0;

  /// Largest entrywise deviation of X'X/n from the prescribed Gram matrix.
  double gram_error() const;
  /// PSD check on X'X/n (smallest eigenvalue >= -tol).
  bool gram_psd(double tol = 1e-10) const;
};

EscapeDesign build_escape_design(int p, int n, double beta, double zeta);

struct EscapeReport {
  int fs_first_pick = -1;        // 0-based column
  double fs_train_error = 0.0;   // ||y - fhat_FS(k)||^2
  double fs_predicted = 0.0;     // (p - k) zeta^2
  MeanEstimate base_train_error; // single randomized run, over seeds
};

/// FS versus single randomized runs (seeds 0..replicates-1 derived from `seed`) on the escape design.
EscapeReport escape_experiment(const EscapeDesign& escape, int k, int m, std::int64_t replicates,
                               std::uint64_t seed);

namespace reference {

/// Serial twins of the Monte Carlo drivers above (same streams, same output).
PathMonteCarlo monte_carlo_path(const PathFitter& fitter, const DesignMatrix& design,
                                const Eigen::VectorXd& true_f, double sigma2, std::int64_t replicates,
                                std::uint64_t seed);
DfEstimate df_monte_carlo(const Fitter& fitter, const DesignMatrix& design, const Eigen::VectorXd& true_f,
                          double sigma2, std::int64_t replicates, std::uint64_t seed);

}  // namespace reference

}  // namespace efs

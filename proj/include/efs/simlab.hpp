#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "efs/design.hpp"

namespace efs {

/// Simulation protocol. JSON keys match the field names.
struct ExperimentConfig {
  int n = 300;
  int p = 50;
  double rho = 0.5;         // Sigma_ij = rho^|i-j|
  int s = 10;               // beta_j = 1 for j <= s, else 0
  double snr = 0.25;        // beta' Sigma beta / sigma^2
  int k_max = 20;
  int B = 100;              // ensemble size
  std::vector<int> m_grid;  // empty: geometric grid from 2 to p
  int folds = 10;
  std::uint64_t seed = 0;
  int replicates = 200;     // outer noise draws for df / training error

  void validate() const;
  /// Grid actually used (m_grid, or the geometric default).
  std::vector<int> effective_grid() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string to_json(const ExperimentConfig& config);

struct ExperimentRow {
  int k = 0;
  std::string method;  // "FS" or "EFS"
  int chosen_m = 0;
  double df = 0.0;
  double df_se = 0.0;
  double train_mse = 0.0;
  double train_mse_se = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;  // ordered by k, then FS before EFS
  double sigma2 = 0.0;

  const ExperimentRow& row(int k, const std::string& method) const;
  /// CSV with header k,method,chosen_m,df,df_se,train_mse,train_mse_se.
  std::string to_csv() const;
};

/// Rows IID N(0, Sigma) with Sigma_ij = rho^|i-j|, drawn by the AR(1) recursion
/// x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j; columns then rescaled to unit norm.
DesignMatrix gen_banded_gaussian(int n, int p, double rho, std::uint64_t seed);

/// beta' Sigma beta for the banded covariance of dimension beta.size().
double banded_signal_power(const Eigen::VectorXd& beta, double rho);

/// sigma^2 = beta' Sigma beta / snr.
double calibrate_sigma2(const Eigen::VectorXd& beta, double rho, int p, double snr);

/// round(exp(linspace(log lo, log hi, points))), deduplicated, ascending.
std::vector<int> geometric_grid(int lo, int hi, int points = 12);

/// Row indices of each held-out fold: contiguous blocks of a seeded shuffle.
std::vector<std::vector<int>> cv_folds(int n, int folds, std::uint64_t seed);

/// Mean held-out MSE of EFS(k, m, B) for every m in the grid (rows) and k = 1..k_max (columns).
/// Each (fold, m) ensemble is seeded by derive_seed(seed, {fold, m}).
Eigen::MatrixXd cv_error_path(const DesignMatrix& design, const Eigen::VectorXd& y, int k_max,
                              const std::vector<int>& m_grid, int ensemble_size, int folds,
                              std::uint64_t seed);

/// m with the smallest CV error at step count k; ties go to the smaller m.
int cv_select_m(const DesignMatrix& design, const Eigen::VectorXd& y, int k, const std::vector<int>& m_grid,
                int ensemble_size, int folds, std::uint64_t seed);

ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace efs

#include "efs/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "efs/error.hpp"
#include "efs/greedy.hpp"
#include "efs/rng.hpp"

namespace efs {

namespace {

MeanEstimate summarize(const Eigen::VectorXd& samples) {
  const double r = static_cast<double>(samples.size());
  MeanEstimate out;
  out.mean = samples.mean();
  if (samples.size() > 1) {
    const double var = (samples.array() - out.mean).square().sum() / (r - 1.0);
    out.stderr_ = std::sqrt(var / r);
  }
  return out;
}

DfEstimate as_df(const Eigen::VectorXd& samples) {
  const MeanEstimate m = summarize(samples);
  return DfEstimate{m.mean, m.stderr_, samples.size()};
}

void check_mc_args(const DesignMatrix& design, const Eigen::VectorXd& true_f, double sigma2,
                   std::int64_t replicates) {
  require(true_f.size() == design.n(), "true_f length does not match the design");
  require(std::isfinite(sigma2) && sigma2 > 0.0, "sigma2 must be positive");
  require(replicates >= 2, "at least two replicates are needed for a standard error");
}

// Fills row r of the sample matrices. Returns false when the fitter produced
// something unusable.
bool run_replicate(const PathFitter& fitter, const DesignMatrix& design, const Eigen::VectorXd& true_f,
                   double sigma2, std::int64_t r, std::uint64_t seed, PathMonteCarlo& out) {
  Engine engine = make_stream(seed, static_cast<std::uint64_t>(r));
  std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2));
  Eigen::VectorXd eps(design.n());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = gauss(engine);
  const Eigen::VectorXd y = true_f + eps;
  const Eigen::MatrixXd fits = fitter(design, y, derive_seed(seed, {static_cast<std::uint64_t>(r), 1}));
  if (fits.rows() != design.n() || fits.cols() != out.df_samples.cols() || !fits.allFinite()) return false;
  const double n = static_cast<double>(design.n());
  for (Eigen::Index c = 0; c < fits.cols(); ++c) {
    out.df_samples(r, c) = eps.dot(fits.col(c)) / sigma2;
    out.train_samples(r, c) = (y - fits.col(c)).squaredNorm() / n;
    out.risk_samples(r, c) = (fits.col(c) - true_f).squaredNorm() / n;
  }
  return true;
}

PathMonteCarlo allocate(const PathFitter& fitter, const DesignMatrix& design, const Eigen::VectorXd& true_f,
                        double sigma2, std::int64_t replicates) {
  check_mc_args(design, true_f, sigma2, replicates);
  // probe the output width with a noiseless call
  const Eigen::Index cols = fitter(design, true_f, 0).cols();
  require(cols >= 1, "fitter returned no fits");
  PathMonteCarlo out;
  out.sigma2 = sigma2;
  out.df_samples.resize(replicates, cols);
  out.train_samples.resize(replicates, cols);
  out.risk_samples.resize(replicates, cols);
  return out;
}

PathFitter lift(const Fitter& fitter) {
  return [fitter](const DesignMatrix& d, const Eigen::VectorXd& y, std::uint64_t s) -> Eigen::MatrixXd {
    return fitter(d, y, s);
  };
}

[[noreturn]] void fail_nonfinite() {
  throw NumericalError("fitter returned non-finite or mis-shaped fitted values");
}

}  // namespace

DfEstimate PathMonteCarlo::df(int column) const { return as_df(df_samples.col(column)); }

DfEstimate PathMonteCarlo::df_combination(const Eigen::VectorXd& weights) const {
  require(weights.size() == df_samples.cols(), "combination length does not match the path width");
  return as_df(df_samples * weights);
}

MeanEstimate PathMonteCarlo::train_mse(int column) const { return summarize(train_samples.col(column)); }

MeanEstimate PathMonteCarlo::train_mse_difference(int a, int b) const {
  return summarize(train_samples.col(a) - train_samples.col(b));
}

MeanEstimate PathMonteCarlo::risk(int column) const { return summarize(risk_samples.col(column)); }

PathMonteCarlo monte_carlo_path(const PathFitter& fitter, const DesignMatrix& design,
                                const Eigen::VectorXd& true_f, double sigma2, std::int64_t replicates,
                                std::uint64_t seed) {
  PathMonteCarlo out = allocate(fitter, design, true_f, sigma2, replicates);
  std::atomic<bool> ok{true};
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t r = 0; r < replicates; ++r) {
    if (!run_replicate(fitter, design, true_f, sigma2, r, seed, out)) ok = false;
  }
  if (!ok) fail_nonfinite();
  return out;
}

DfEstimate df_monte_carlo(const Fitter& fitter, const DesignMatrix& design, const Eigen::VectorXd& true_f,
                          double sigma2, std::int64_t replicates, std::uint64_t seed) {
  return monte_carlo_path(lift(fitter), design, true_f, sigma2, replicates, seed).df(0);
}

namespace reference {

PathMonteCarlo monte_carlo_path(const PathFitter& fitter, const DesignMatrix& design,
                                const Eigen::VectorXd& true_f, double sigma2, std::int64_t replicates,
                                std::uint64_t seed) {
  PathMonteCarlo out = allocate(fitter, design, true_f, sigma2, replicates);
  for (std::int64_t r = 0; r < replicates; ++r)
    if (!run_replicate(fitter, design, true_f, sigma2, r, seed, out)) fail_nonfinite();
  return out;
}

DfEstimate df_monte_carlo(const Fitter& fitter, const DesignMatrix& design, const Eigen::VectorXd& true_f,
                          double sigma2, std::int64_t replicates, std::uint64_t seed) {
  return reference::monte_carlo_path(lift(fitter), design, true_f, sigma2, replicates, seed).df(0);
}

}  // namespace reference

double df_decomposition(std::span<const double> fs_df, const WeightTable& weights) {
  require(static_cast<int>(fs_df.size()) == weights.p,
          "df sequence length " + std::to_string(fs_df.size()) + " does not match p=" +
              std::to_string(weights.p));
  double total = 0.0;
  double previous = 0.0;
  for (std::size_t j = 0; j < fs_df.size(); ++j) {
    total += weights.w[j] * (fs_df[j] - previous);
    previous = fs_df[j];
  }
  return total;
}

DfEstimate df_decomposition(const PathMonteCarlo& fs_path, const WeightTable& weights) {
  require(fs_path.columns() == weights.p, "FS path width does not match p");
  // sum_j w_j (d_j - d_{j-1}) = sum_j d_j (w_j - w_{j+1})
  Eigen::VectorXd c(weights.p);
  for (int j = 0; j < weights.p; ++j) {
    const double next = j + 1 < weights.p ? weights.w[static_cast<std::size_t>(j + 1)] : 0.0;
    c[j] = weights.w[static_cast<std::size_t>(j)] - next;
  }
  return fs_path.df_combination(c);
}

double training_gap(std::span<const double> beta_hat_sq, const WeightTable& weights) {
  require(static_cast<int>(beta_hat_sq.size()) == weights.p, "coefficient profile length does not match p");
  for (std::size_t j = 0; j < beta_hat_sq.size(); ++j) {
    require(std::isfinite(beta_hat_sq[j]) && beta_hat_sq[j] >= 0.0, "squared coefficients must be non-negative");
    if (j > 0) require(beta_hat_sq[j] <= beta_hat_sq[j - 1], "squared coefficients must be sorted non-increasing");
  }
  double gain = 0.0;
  double loss = 0.0;
  for (std::size_t j = 0; j < beta_hat_sq.size(); ++j) {
    const double miss = 1.0 - weights.w[j];
    if (static_cast<int>(j) < weights.k)
      loss += beta_hat_sq[j] * miss * miss;
    else
      gain += beta_hat_sq[j] * (1.0 - miss * miss);
  }
  return gain - loss;
}

double training_gap_bound(std::span<const double> beta_hat_sq, int k) {
  require(k >= 1 && 2 * static_cast<std::size_t>(k) <= beta_hat_sq.size(), "need 2k <= p");
  double a = 0.0;
  double b = 0.0;
  for (int j = 0; j < k; ++j) {
    a += beta_hat_sq[static_cast<std::size_t>(j)];
    b += beta_hat_sq[static_cast<std::size_t>(j + k)];
  }
  a /= k;
  b /= k;
  require(a > 0.0, "top-k block average must be positive");
  return 0.25 * b * b / a;
}

ErrorDecomposition prediction_decomposition(double train_mse, double df, double sigma2, int n) {
  require(std::isfinite(train_mse) && std::isfinite(df), "inputs must be finite");
  require(std::isfinite(sigma2) && sigma2 > 0.0, "sigma2 must be positive");
  require(n >= 1, "n must be >= 1");
  ErrorDecomposition out;
  out.train_mse = train_mse;
  out.df_term = 2.0 * sigma2 * df / n;
  out.pred_proxy = out.train_mse + out.df_term;
  out.sigma2 = sigma2;
  return out;
}

MajorizationReport majorization_check(int k, int p, std::span<const int> m_grid) {
  require(!m_grid.empty(), "m grid must not be empty");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    require(m_grid[i] >= 1 && m_grid[i] <= p, "m grid entries must lie in [1, p]");
    if (i > 0) require(m_grid[i] >= m_grid[i - 1], "m grid must be ascending");
  }
  MajorizationReport report;
  WeightTable lo = exact_weight_table(k, m_grid[0], p);
  for (std::size_t i = 1; i < m_grid.size(); ++i) {
    WeightTable hi = exact_weight_table(k, m_grid[i], p);
    double a = 0.0;
    double b = 0.0;
    bool pair_ok = true;
    for (int l = 0; l < p; ++l) {
      a += lo.w[static_cast<std::size_t>(l)];
      b += hi.w[static_cast<std::size_t>(l)];
      report.max_violation = std::max(report.max_violation, a - b);
      if (a > b + 1e-12) pair_ok = false;
    }
    report.max_total_gap = std::max(report.max_total_gap, std::abs(a - b));
    if (std::abs(a - b) > 1e-10) pair_ok = false;
    if (!pair_ok) {
      report.holds = false;
      report.failing_pairs.push_back(m_grid[i - 1]);
    }
    lo = std::move(hi);
  }
  return report;
}

Eigen::VectorXd elastic_net_orthogonal(const Eigen::VectorXd& beta_hat, double lambda1, double lambda2) {
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "penalties must be non-negative");
  Eigen::VectorXd out(beta_hat.size());
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    const double mag = std::max(std::abs(beta_hat[j]) - lambda1 / 2.0, 0.0) / (1.0 + lambda2);
    out[j] = beta_hat[j] > 0.0 ? mag : (beta_hat[j] < 0.0 ? -mag : 0.0);
  }
  return out;
}

double elastic_net_mismatch(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& coef) {
  require(beta_hat.size() == coef.size(), "length mismatch");
  // On the support the elastic net is affine in |beta_hat|: |coef| = s |b| - s t.
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < coef.size(); ++j)
    if (coef[j] != 0.0) support.push_back(j);
  if (support.size() <= 2) return 0.0;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(support.size()), 2);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) {
    a(static_cast<Eigen::Index>(i), 0) = std::abs(beta_hat[support[i]]);
    a(static_cast<Eigen::Index>(i), 1) = 1.0;
    rhs[static_cast<Eigen::Index>(i)] = std::abs(coef[support[i]]);
  }
  const Eigen::VectorXd fit = a.colPivHouseholderQr().solve(rhs);
  const Eigen::VectorXd resid = a * fit - rhs;
  return std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
}

double EscapeDesign::gram_error() const {
  const int p = design.p();
  Eigen::MatrixXd expected = Eigen::MatrixXd::Identity(p, p);
  const double c = 1.0 / std::sqrt(3.0);
  expected(0, p - 1) = expected(p - 1, 0) = c;
  expected(1, p - 1) = expected(p - 1, 1) = c;
  return (design.gram() - expected).cwiseAbs().maxCoeff();
}

bool EscapeDesign::gram_psd(double tol) const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(design.gram(), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

EscapeDesign build_escape_design(int p, int n, double beta, double zeta) {
  require(p >= 5, "escape design needs p >= 5");
  require(n >= p, "escape design needs n >= p");
  require(zeta > 0.0 && beta / std::sqrt(6.0) > zeta, "escape design needs beta / sqrt(6) > zeta > 0");
  const double root_n = std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
  for (int j = 0; j < p - 1; ++j) x(j, j) = root_n;
  // spurious column: (x_1 + x_2 + u) / sqrt(3) with u the next canonical direction
  const double c = root_n / std::sqrt(3.0);
  x(0, p - 1) = c;
  x(1, p - 1) = c;
  x(p - 1, p - 1) = c;
  Eigen::VectorXd y = beta * (x.col(0) + x.col(1));
  for (int j = 2; j < p - 1; ++j) y += zeta * x.col(j);
  return EscapeDesign{DesignMatrix::normalize(std::move(x)), std::move(y), beta, zeta};
}

EscapeReport escape_experiment(const EscapeDesign& escape, int k, int m, std::int64_t replicates,
                               std::uint64_t seed) {
  require(replicates >= 2, "at least two replicates are needed");
  const DesignMatrix& design = escape.design;
  EscapeReport report;
  const PathFit fs = fs_fit(design, escape.y, k);
  report.fs_first_pick = fs.path.selected.empty() ? -1 : fs.path.selected.front();
  report.fs_train_error = sq_norm(escape.y - fs.model.fitted);
  report.fs_predicted = (design.p() - k) * escape.zeta * escape.zeta;

  Eigen::VectorXd errors(replicates);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t r = 0; r < replicates; ++r) {
    const PathFit base = efs_base_fit(design, escape.y, k, m, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    errors[r] = sq_norm(escape.y - base.model.fitted);
  }
  report.base_train_error = summarize(errors);
  return report;
}

}  // namespace efs

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace efs {

// Inner products throughout use the sample-mean convention <a, b> = a'b / n.
double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double sq_norm(const Eigen::VectorXd& a);

/// Fixed n x p design whose columns have unit mean-square norm.
class DesignMatrix {
 public:
  /// Rescales every column to unit norm; the applied factors are kept in scales().
  static DesignMatrix normalize(Eigen::MatrixXd x);
  /// Takes columns that are already unit norm (within 1e-10) as-is.
  static DesignMatrix from_normalized(Eigen::MatrixXd x);

  const Eigen::MatrixXd& x() const { return x_; }
  int n() const { return static_cast<int>(x_.rows()); }
  int p() const { return static_cast<int>(x_.cols()); }
  bool normalized() const { return true; }
  /// Original column j equals x().col(j) * scales()[j].
  const Eigen::VectorXd& scales() const { return scales_; }

  /// X'X / n.
  Eigen::MatrixXd gram() const;
  /// True when X'X / n equals the identity within `tol` entrywise.
  bool is_orthonormal(double tol = 1e-8) const;

 private:
  DesignMatrix(Eigen::MatrixXd x, Eigen::VectorXd scales);
  Eigen::MatrixXd x_;
  Eigen::VectorXd scales_;
};

/// Random design with X'X / n = I (requires n >= p).
DesignMatrix orthonormal_design(int n, int p, std::uint64_t seed);

/// Features reindexed by decreasing |<y, x_j>|, ties broken by lower original index.
struct FeatureOrdering {
  std::vector<int> perm;     // perm[r] = original 0-based column of rank r + 1
  Eigen::VectorXd beta_hat;  // beta_hat[r] = <y, x_perm[r]>
  bool orthonormal_certified = false;

  int p() const { return static_cast<int>(perm.size()); }
};

FeatureOrdering feature_ordering(const DesignMatrix& design, const Eigen::VectorXd& y);

}  // namespace efs

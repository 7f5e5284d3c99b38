#include "efs/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "efs/error.hpp"
#include "efs/rng.hpp"

namespace efs {

double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / static_cast<double>(a.size());
}

double sq_norm(const Eigen::VectorXd& a) { return a.squaredNorm() / static_cast<double>(a.size()); }

DesignMatrix::DesignMatrix(Eigen::MatrixXd x, Eigen::VectorXd scales)
    : x_(std::move(x)), scales_(std::move(scales)) {}

DesignMatrix DesignMatrix::normalize(Eigen::MatrixXd x) {
  require(x.rows() >= 1 && x.cols() >= 1, "design must have n >= 1 and p >= 1");
  require(x.allFinite(), "design contains non-finite values");
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd scales(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double norm = std::sqrt(x.col(j).squaredNorm() / n);
    require(norm > 0.0, "design column " + std::to_string(j + 1) + " is identically zero");
    x.col(j) /= norm;
    scales[j] = norm;
  }
  return DesignMatrix(std::move(x), std::move(scales));
}

DesignMatrix DesignMatrix::from_normalized(Eigen::MatrixXd x) {
  require(x.rows() >= 1 && x.cols() >= 1, "design must have n >= 1 and p >= 1");
  require(x.allFinite(), "design contains non-finite values");
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double norm = std::sqrt(x.col(j).squaredNorm() / n);
    require(std::abs(norm - 1.0) <= 1e-10,
            "design column " + std::to_string(j + 1) + " is not unit norm");
  }
  Eigen::VectorXd scales = Eigen::VectorXd::Ones(x.cols());
  return DesignMatrix(std::move(x), std::move(scales));
}

Eigen::MatrixXd DesignMatrix::gram() const {
  Eigen::MatrixXd g(p(), p());
  g.triangularView<Eigen::Lower>() = x_.transpose() * x_;
  g = g.selfadjointView<Eigen::Lower>();
  return g / static_cast<double>(n());
}

bool DesignMatrix::is_orthonormal(double tol) const {
  const Eigen::MatrixXd g = gram();
  return (g - Eigen::MatrixXd::Identity(p(), p())).cwiseAbs().maxCoeff() <= tol;
}

DesignMatrix orthonormal_design(int n, int p, std::uint64_t seed) {
  require(p >= 1 && n >= p, "orthonormal design needs n >= p >= 1");
  Engine engine(derive_seed(seed, {0x6f7274686fULL}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = gauss(engine);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  q *= std::sqrt(static_cast<double>(n));
  return DesignMatrix::from_normalized(std::move(q));
}

FeatureOrdering feature_ordering(const DesignMatrix& design, const Eigen::VectorXd& y) {
  require(y.size() == design.n(), "response length does not match the design");
  const Eigen::VectorXd raw = design.x().transpose() * y / static_cast<double>(design.n());
  FeatureOrdering ord;
  ord.perm.resize(static_cast<std::size_t>(design.p()));
  std::iota(ord.perm.begin(), ord.perm.end(), 0);
  std::stable_sort(ord.perm.begin(), ord.perm.end(),
                   [&](int a, int b) { return std::abs(raw[a]) > std::abs(raw[b]); });
  ord.beta_hat.resize(design.p());
  for (int r = 0; r < design.p(); ++r) ord.beta_hat[r] = raw[ord.perm[static_cast<std::size_t>(r)]];
  ord.orthonormal_certified = design.is_orthonormal(1e-8);
  return ord;
}

}  // namespace efs

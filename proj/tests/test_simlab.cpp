#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "efs/error.hpp"
#include "efs/simlab.hpp"

using namespace efs;

namespace {

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

// Explicit double sum over the covariance entries.
double quad_form(const Eigen::VectorXd& beta, double rho) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i)
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      s += beta[i] * beta[j] * std::pow(rho, static_cast<double>(std::abs(i - j)));
  return s;
}

Eigen::VectorXd first_ones(int p, int s) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  b.head(s).setOnes();
  return b;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n = 80;
  c.p = 12;
  c.s = 4;
  c.k_max = 6;
  c.B = 8;
  c.folds = 4;
  c.replicates = 20;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("signal power and sigma2 calibration") {
  const Eigen::VectorXd beta = first_ones(50, 10);
  CHECK(banded_signal_power(beta, 0.5) == doctest::Approx(26.00390625).epsilon(1e-15));
  CHECK(calibrate_sigma2(beta, 0.5, 50, 0.25) == doctest::Approx(104.015625).epsilon(1e-15));
  CHECK(banded_signal_power(beta, 0.0) == 10.0);

  std::mt19937_64 g(3);
  std::normal_distribution<double> z;
  for (double rho : {0.0, 0.3, 0.9}) {
    Eigen::VectorXd b(9);
    for (int i = 0; i < 9; ++i) b[i] = z(g);
    CHECK(banded_signal_power(b, rho) == doctest::Approx(quad_form(b, rho)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(calibrate_sigma2(Eigen::VectorXd::Zero(50), 0.5, 50, 1.0), ValidationError);
  CHECK_THROWS_AS(calibrate_sigma2(beta, 0.5, 50, 0.0), ValidationError);
  CHECK_THROWS_AS(calibrate_sigma2(beta, 0.5, 49, 1.0), ValidationError);
}

TEST_CASE("banded Gaussian design") {
  SUBCASE("rho = 0 gives uncorrelated columns") {
    const int n = 2000;
    const DesignMatrix d = gen_banded_gaussian(n, 8, 0.0, 1);
    for (int a = 0; a < 8; ++a)
      for (int b = a + 1; b < 8; ++b) CHECK(std::abs(corr(d.x().col(a), d.x().col(b))) < 4.0 / std::sqrt(n));
  }
  SUBCASE("rho = 0.5 at large n") {
    const DesignMatrix d = gen_banded_gaussian(100000, 4, 0.5, 2);
    CHECK(corr(d.x().col(0), d.x().col(1)) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(corr(d.x().col(0), d.x().col(2)) == doctest::Approx(0.25).epsilon(0.04));
  }
  SUBCASE("unit columns and seeding") {
    const DesignMatrix a = gen_banded_gaussian(50, 6, 0.7, 9);
    for (int j = 0; j < 6; ++j) CHECK(a.x().col(j).squaredNorm() / 50 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.x() == gen_banded_gaussian(50, 6, 0.7, 9).x());
    CHECK(a.x() != gen_banded_gaussian(50, 6, 0.7, 10).x());
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(gen_banded_gaussian(10, 3, 1.0, 0), ValidationError);
    CHECK_THROWS_AS(gen_banded_gaussian(10, 3, -0.1, 0), ValidationError);
  }
}

TEST_CASE("empirical SNR matches the target") {
  const int n = 100000;
  const int p = 50;
  const double rho = 0.5;
  const DesignMatrix d = gen_banded_gaussian(n, p, rho, 4);
  const Eigen::VectorXd beta = first_ones(p, 10);
  const double sigma2 = calibrate_sigma2(beta, rho, p, 0.25);
  const Eigen::VectorXd f = d.x() * beta;
  std::mt19937_64 g(11);
  std::normal_distribution<double> z(0.0, std::sqrt(sigma2));
  Eigen::VectorXd eps(n);
  for (int i = 0; i < n; ++i) eps[i] = z(g);
  const double snr = (f.array() - f.mean()).square().mean() / (eps.array() - eps.mean()).square().mean();
  CHECK(std::abs(snr / 0.25 - 1.0) < 0.05);
}

TEST_CASE("geometric grid") {
  CHECK(geometric_grid(2, 50) == std::vector<int>{2, 3, 4, 5, 6, 9, 12, 16, 21, 28, 37, 50});
  CHECK(geometric_grid(2, 4) == std::vector<int>{2, 3, 4});
  CHECK(geometric_grid(1, 1) == std::vector<int>{1});
  CHECK_THROWS_AS(geometric_grid(3, 2), ValidationError);
}

TEST_CASE("CV folds partition the rows") {
  for (int n : {10, 37, 300}) {
    const auto folds = cv_folds(n, 10, 7);
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    std::size_t smallest = n, largest = 0;
    for (const auto& f : folds) {
      smallest = std::min(smallest, f.size());
      largest = std::max(largest, f.size());
      for (int i : f) seen[static_cast<std::size_t>(i)]++;
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    CHECK(largest - smallest <= 1);
  }
  CHECK(cv_folds(40, 5, 1) == cv_folds(40, 5, 1));
  CHECK(cv_folds(40, 5, 1) != cv_folds(40, 5, 2));
  CHECK_THROWS_AS(cv_folds(5, 6, 0), ValidationError);
  CHECK_THROWS_AS(cv_folds(5, 1, 0), ValidationError);
}

TEST_CASE("cv_select_m") {
  const DesignMatrix d = gen_banded_gaussian(60, 10, 0.3, 1);
  std::mt19937_64 g(2);
  std::normal_distribution<double> z;
  Eigen::VectorXd y = d.x() * first_ones(10, 3);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += z(g);

  SUBCASE("singleton grid") { CHECK(cv_select_m(d, y, 3, {10}, 5, 5, 1) == 10); }
  SUBCASE("same seed, same choice") {
    const std::vector<int> grid{1, 2, 4, 7, 10};
    CHECK(cv_select_m(d, y, 4, grid, 5, 5, 3) == cv_select_m(d, y, 4, grid, 5, 5, 3));
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(cv_select_m(d, y, 3, {}, 5, 5, 1), ValidationError);
    CHECK_THROWS_AS(cv_select_m(d, y, 3, {11}, 5, 5, 1), ValidationError);
    CHECK_THROWS_AS(cv_select_m(d, y, 3, {4}, 5, 1, 1), ValidationError);
    CHECK_THROWS_AS(cv_select_m(d, y, 3, {4}, 5, 61, 1), ValidationError);
  }
  SUBCASE("noiseless sparse signal favors large m") {
    const int p = 20;
    const int k = 3;
    const std::vector<int> grid = geometric_grid(2, p);
    const int median = grid[grid.size() / 2];
    int large = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const DesignMatrix od = orthonormal_design(60, p, 100 + seed);
      const Eigen::VectorXd yy = od.x() * first_ones(p, k) * 3.0;
      if (cv_select_m(od, yy, k, grid, 10, 5, seed) >= median) ++large;
    }
    CHECK(large >= 40);
  }
}

TEST_CASE("cv error path shape and ties") {
  const DesignMatrix d = gen_banded_gaussian(40, 6, 0.2, 3);
  const Eigen::VectorXd y = d.x() * first_ones(6, 2);
  const Eigen::MatrixXd e = cv_error_path(d, y, 4, {2, 6}, 3, 4, 8);
  CHECK(e.rows() == 2);
  CHECK(e.cols() == 4);
  CHECK((e.array() >= 0.0).all());
  // the same m listed twice gives identical rows; the smaller-index one wins
  const Eigen::MatrixXd twice = cv_error_path(d, y, 4, {6, 6}, 3, 4, 8);
  CHECK(twice.row(0) == twice.row(1));
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_experiment_config(R"({"n": 100, "p": 20, "rho": 0.1, "m_grid": [2, 5, 20], "seed": 42})");
  CHECK(c.n == 100);
  CHECK(c.p == 20);
  CHECK(c.rho == 0.1);
  CHECK(c.m_grid == std::vector<int>{2, 5, 20});
  CHECK(c.seed == 42);
  CHECK(c.B == 100);

  const ExperimentConfig back = parse_experiment_config(to_json(c));
  CHECK(to_json(back) == to_json(c));

  CHECK(ExperimentConfig{}.effective_grid() == geometric_grid(2, 50));

  CHECK_THROWS_AS(parse_experiment_config(R"({"n": 100, "bogus": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"n": "many"})"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config("{"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config("[1]"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"snr": 0})"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"m_grid": [5, 3]})"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"m_grid": [0, 3]})"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"folds": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"rho": 1.0})"), ValidationError);
}

TEST_CASE("run_experiment") {
  SUBCASE("row layout and CSV") {
    const ExperimentResult r = run_experiment(small_config());
    REQUIRE(r.rows.size() == 12);
    for (int k = 1; k <= 6; ++k) {
      CHECK(r.rows[static_cast<std::size_t>(2 * k - 2)].method == "FS");
      CHECK(r.rows[static_cast<std::size_t>(2 * k - 1)].method == "EFS");
      CHECK(r.row(k, "FS").chosen_m == 12);
      CHECK(r.row(k, "FS").df_se > 0.0);
      CHECK(r.row(k, "EFS").train_mse_se > 0.0);
    }
    CHECK_THROWS_AS(r.row(7, "FS"), ValidationError);
    const std::string csv = r.to_csv();
    CHECK(csv.rfind("k,method,chosen_m,df,df_se,train_mse,train_mse_se\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  }
  SUBCASE("bit-identical reruns") {
    CHECK(run_experiment(small_config()).to_csv() == run_experiment(small_config()).to_csv());
  }
  SUBCASE("B = 1 with m = p reproduces FS") {
    ExperimentConfig c = small_config();
    c.B = 1;
    c.m_grid = {c.p};
    const ExperimentResult r = run_experiment(c);
    for (int k = 1; k <= c.k_max; ++k) {
      const ExperimentRow& fs = r.row(k, "FS");
      const ExperimentRow& efs = r.row(k, "EFS");
      CHECK(efs.chosen_m == c.p);
      CHECK(efs.df == fs.df);
      CHECK(efs.train_mse == fs.train_mse);
    }
  }
  SUBCASE("invalid config") {
    ExperimentConfig c = small_config();
    c.k_max = 13;
    CHECK_THROWS_AS(run_experiment(c), ValidationError);
  }
}

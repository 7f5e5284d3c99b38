#include "efs/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "efs/analysis.hpp"
#include "efs/error.hpp"
#include "efs/greedy.hpp"
#include "efs/io.hpp"
#include "efs/rng.hpp"
#include "json.hpp"

namespace efs {

namespace {

const std::set<std::string> kConfigKeys = {"n", "p", "rho", "s", "snr", "k_max", "B",
                                           "m_grid", "folds", "seed", "replicates"};

// Pads a p x steps coefficient path to p x k by repeating the last column.
Eigen::MatrixXd pad_path(const Eigen::MatrixXd& path, int k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(path.rows(), k);
  const Eigen::Index done = std::min<Eigen::Index>(path.cols(), k);
  if (done > 0) out.leftCols(done) = path.leftCols(done);
  for (Eigen::Index c = done; c < k && done > 0; ++c) out.col(c) = path.col(done - 1);
  return out;
}

Eigen::VectorXd sparse_signal(int p, int s) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta.head(std::min(s, p)).setOnes();
  return beta;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(n >= 2 && p >= 1, "need n >= 2 and p >= 1");
  require(rho >= 0.0 && rho < 1.0, "rho must lie in [0, 1)");
  require(s >= 1 && s <= p, "sparsity s must lie in [1, p]");
  require(std::isfinite(snr) && snr > 0.0, "snr must be positive");
  require(k_max >= 1 && k_max <= std::min(n, p), "k_max must lie in [1, min(n, p)]");
  require(B >= 1, "B must be >= 1");
  require(folds >= 2 && folds <= n, "folds must lie in [2, n]");
  require(replicates >= 2, "replicates must be >= 2");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    require(m_grid[i] >= 1 && m_grid[i] <= p, "m_grid entries must lie in [1, p]");
    if (i > 0) require(m_grid[i] > m_grid[i - 1], "m_grid must be strictly ascending");
  }
}

std::vector<int> ExperimentConfig::effective_grid() const {
  return m_grid.empty() ? geometric_grid(std::min(2, p), p) : m_grid;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), "config must be a JSON object");
  for (const auto& item : j.items())
    require(kConfigKeys.count(item.key()) == 1, "unknown config key '" + item.key() + "'");
  ExperimentConfig c;
  try {
    if (j.contains("n")) c.n = j.at("n").get<int>();
    if (j.contains("p")) c.p = j.at("p").get<int>();
    if (j.contains("rho")) c.rho = j.at("rho").get<double>();
    if (j.contains("s")) c.s = j.at("s").get<int>();
    if (j.contains("snr")) c.snr = j.at("snr").get<double>();
    if (j.contains("k_max")) c.k_max = j.at("k_max").get<int>();
    if (j.contains("B")) c.B = j.at("B").get<int>();
    if (j.contains("m_grid")) c.m_grid = j.at("m_grid").get<std::vector<int>>();
    if (j.contains("folds")) c.folds = j.at("folds").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("replicates")) c.replicates = j.at("replicates").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config field has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

std::string to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"n", c.n},         {"p", c.p},         {"rho", c.rho},       {"s", c.s},
                      {"snr", c.snr},     {"k_max", c.k_max}, {"B", c.B},           {"m_grid", c.m_grid},
                      {"folds", c.folds}, {"seed", c.seed},   {"replicates", c.replicates}};
  return j.dump(2);
}

const ExperimentRow& ExperimentResult::row(int k, const std::string& method) const {
  for (const auto& r : rows)
    if (r.k == k && r.method == method) return r;
  throw ValidationError("no row for k=" + std::to_string(k) + " method=" + method);
}

std::string ExperimentResult::to_csv() const {
  std::ostringstream out;
  out << "k,method,chosen_m,df,df_se,train_mse,train_mse_se\n";
  for (const auto& r : rows)
    out << r.k << ',' << r.method << ',' << r.chosen_m << ',' << format_double(r.df) << ','
        << format_double(r.df_se) << ',' << format_double(r.train_mse) << ',' << format_double(r.train_mse_se)
        << '\n';
  return out.str();
}

DesignMatrix gen_banded_gaussian(int n, int p, double rho, std::uint64_t seed) {
  require(n >= 1 && p >= 1, "need n >= 1 and p >= 1");
  require(rho >= 0.0 && rho < 1.0, "rho must lie in [0, 1)");
  Engine engine(derive_seed(seed, {0x62616e64ULL}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double innov = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    double prev = gauss(engine);
    x(i, 0) = prev;
    for (int j = 1; j < p; ++j) {
      prev = rho * prev + innov * gauss(engine);
      x(i, j) = prev;
    }
  }
  return DesignMatrix::normalize(std::move(x));
}

double banded_signal_power(const Eigen::VectorXd& beta, double rho) {
  require(rho >= 0.0 && rho < 1.0, "rho must lie in [0, 1)");
  const Eigen::Index p = beta.size();
  // sum_d rho^d * sum_i beta_i beta_{i+d}, counting off-diagonals twice
  double total = beta.squaredNorm();
  double power = 1.0;
  for (Eigen::Index d = 1; d < p; ++d) {
    power *= rho;
    if (power == 0.0) break;
    total += 2.0 * power * beta.head(p - d).dot(beta.tail(p - d));
  }
  return total;
}

double calibrate_sigma2(const Eigen::VectorXd& beta, double rho, int p, double snr) {
  require(beta.size() == p, "beta length does not match p");
  require(std::isfinite(snr) && snr > 0.0, "snr must be positive");
  const double signal = banded_signal_power(beta, rho);
  require(signal > 0.0, "zero signal cannot reach a finite SNR");
  return signal / snr;
}

std::vector<int> geometric_grid(int lo, int hi, int points) {
  require(lo >= 1 && hi >= lo, "geometric grid needs 1 <= lo <= hi");
  require(points >= 1, "geometric grid needs at least one point");
  std::vector<int> grid;
  const double a = std::log(static_cast<double>(lo));
  const double b = std::log(static_cast<double>(hi));
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 1.0 : static_cast<double>(i) / (points - 1);
    const int v = static_cast<int>(std::lround(std::exp(a + t * (b - a))));
    grid.push_back(std::clamp(v, lo, hi));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<std::vector<int>> cv_folds(int n, int folds, std::uint64_t seed) {
  require(folds >= 2, "need at least two folds");
  require(folds <= n, "every fold needs at least one row");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Engine engine(derive_seed(seed, {0x666f6c64ULL}));
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    const auto begin = static_cast<std::size_t>(static_cast<long long>(f) * n / folds);
    const auto end = static_cast<std::size_t>(static_cast<long long>(f + 1) * n / folds);
    out[static_cast<std::size_t>(f)].assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                            order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

Eigen::MatrixXd cv_error_path(const DesignMatrix& design, const Eigen::VectorXd& y, int k_max,
                              const std::vector<int>& m_grid, int ensemble_size, int folds,
                              std::uint64_t seed) {
  require(y.size() == design.n(), "response length does not match the design");
  require(!m_grid.empty(), "m grid must not be empty");
  for (int m : m_grid) require(m >= 1 && m <= design.p(), "m grid entries must lie in [1, p]");
  const auto fold_rows = cv_folds(design.n(), folds, seed);
  const int n = design.n();
  require(k_max >= 1 && k_max <= design.p(), "k_max must lie in [1, p]");

  Eigen::MatrixXd errors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_grid.size()), k_max);
  std::vector<char> held(static_cast<std::size_t>(n));
  for (int f = 0; f < folds; ++f) {
    const auto& test = fold_rows[static_cast<std::size_t>(f)];
    std::fill(held.begin(), held.end(), 0);
    for (int i : test) held[static_cast<std::size_t>(i)] = 1;
    std::vector<int> train;
    for (int i = 0; i < n; ++i)
      if (!held[static_cast<std::size_t>(i)]) train.push_back(i);
    require(static_cast<int>(train.size()) >= k_max, "a training fold has fewer rows than k_max");

    const Eigen::MatrixXd x_train = design.x()(train, Eigen::all);
    const Eigen::VectorXd y_train = y(train);
    const Eigen::MatrixXd x_test = design.x()(test, Eigen::all);
    const Eigen::VectorXd y_test = y(test);
    const GramSystem system = GramSystem::build(x_train, y_train);

    for (std::size_t g = 0; g < m_grid.size(); ++g) {
      const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(m_grid[g])});
      const Eigen::MatrixXd coef = ensemble_coef_path(system, k_max, m_grid[g], ensemble_size, s);
      const Eigen::MatrixXd pred = x_test * coef;
      const Eigen::RowVectorXd mse =
          (pred.colwise() - y_test).colwise().squaredNorm() / static_cast<double>(test.size());
      errors.row(static_cast<Eigen::Index>(g)) += mse;
    }
  }
  return errors / static_cast<double>(folds);
}

int cv_select_m(const DesignMatrix& design, const Eigen::VectorXd& y, int k, const std::vector<int>& m_grid,
                int ensemble_size, int folds, std::uint64_t seed) {
  require(k >= 1, "k must be >= 1");
  const Eigen::MatrixXd errors = cv_error_path(design, y, k, m_grid, ensemble_size, folds, seed);
  // ties go to the smaller m, so scan in ascending order of m with a strict comparison
  std::vector<std::size_t> order(m_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m_grid[a] < m_grid[b]; });
  std::size_t best = order.front();
  for (std::size_t g : order)
    if (errors(static_cast<Eigen::Index>(g), k - 1) < errors(static_cast<Eigen::Index>(best), k - 1)) best = g;
  return m_grid[best];
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::vector<int> grid = config.effective_grid();
  const int k_max = config.k_max;
  const int p = config.p;

  const DesignMatrix design = gen_banded_gaussian(config.n, p, config.rho, derive_seed(config.seed, {1}));
  const Eigen::VectorXd beta = sparse_signal(p, config.s);
  const Eigen::VectorXd f = design.x() * beta;
  const double sigma2 = calibrate_sigma2(beta, config.rho, p, config.snr);

  // m is chosen once, by CV on a pilot response, and then held fixed across the noise replicates.
  Engine pilot_engine(derive_seed(config.seed, {2}));
  std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2));
  Eigen::VectorXd pilot = f;
  for (Eigen::Index i = 0; i < pilot.size(); ++i) pilot[i] += gauss(pilot_engine);
  const Eigen::MatrixXd cv =
      cv_error_path(design, pilot, k_max, grid, config.B, config.folds, derive_seed(config.seed, {3}));
  std::vector<int> chosen(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    Eigen::Index best = 0;
    for (Eigen::Index g = 1; g < cv.rows(); ++g)
      if (cv(g, k - 1) < cv(best, k - 1)) best = g;
    chosen[static_cast<std::size_t>(k - 1)] = grid[static_cast<std::size_t>(best)];
  }
  const std::set<int> distinct(chosen.begin(), chosen.end());

  const Eigen::MatrixXd gram = design.gram();
  const int ensemble_size = config.B;
  PathFitter fitter = [&](const DesignMatrix& d, const Eigen::VectorXd& y, std::uint64_t s) -> Eigen::MatrixXd {
    const GramSystem system = GramSystem::with_response(gram, d.x(), y);
    const Eigen::MatrixXd fs = pad_path(greedy_path(system, k_max, p, nullptr).coef_path, k_max);
    Eigen::MatrixXd coef(p, 2 * k_max);
    coef.leftCols(k_max) = fs;
    for (int m : distinct) {
      const Eigen::MatrixXd efs =
          ensemble_coef_path(system, k_max, m, ensemble_size, derive_seed(s, {static_cast<std::uint64_t>(m)}));
      for (int k = 1; k <= k_max; ++k)
        if (chosen[static_cast<std::size_t>(k - 1)] == m) coef.col(k_max + k - 1) = efs.col(k - 1);
    }
    return d.x() * coef;
  };
  const PathMonteCarlo mc =
      monte_carlo_path(fitter, design, f, sigma2, config.replicates, derive_seed(config.seed, {4}));

  ExperimentResult result;
  result.sigma2 = sigma2;
  for (int k = 1; k <= k_max; ++k) {
    for (int method = 0; method < 2; ++method) {
      const int col = method * k_max + k - 1;
      const DfEstimate df = mc.df(col);
      const MeanEstimate mse = mc.train_mse(col);
      result.rows.push_back(ExperimentRow{k, method == 0 ? "FS" : "EFS",
                                          method == 0 ? p : chosen[static_cast<std::size_t>(k - 1)], df.df,
                                          df.stderr_, mse.mean, mse.stderr_});
    }
  }
  return result;
}

}  // namespace efs

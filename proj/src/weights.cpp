#include "efs/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "efs/error.hpp"
#include "efs/rng.hpp"

namespace efs {

namespace {

void check_kmp(int k, int m, int p) {
  require(p >= 1, "p must be >= 1, got " + std::to_string(p));
  require(k >= 0 && k <= p, "k must lie in [0, p], got k=" + std::to_string(k));
  require(m >= 1 && m <= p, "m must lie in [1, p], got m=" + std::to_string(m));
}

void check_gamma(double gamma) {
  require(std::isfinite(gamma) && gamma > 0.0 && gamma < 1.0,
          "gamma must lie in the open interval (0, 1)");
}

double binomial(int n, int r) {
  if (r < 0 || n < 0 || r > n) return 0.0;
  r = std::min(r, n - r);
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * static_cast<double>(n - r + i) / static_cast<double>(i);
  return std::round(c);
}

// One randomized selection on ranks 1..p; increments counts[rank - 1] for each pick.
void simulate_selection(int k, int m, int p, CandidateSampling sampling, Engine& engine,
                        std::vector<int>& pool, std::vector<std::int64_t>& counts) {
  pool.resize(static_cast<std::size_t>(p));
  std::iota(pool.begin(), pool.end(), 1);
  for (int step = 0; step < k; ++step) {
    const int remaining = static_cast<int>(pool.size());
    std::size_t best_pos = 0;
    if (sampling == CandidateSampling::with_replacement) {
      std::uniform_int_distribution<int> pick(0, remaining - 1);
      int best_rank = p + 1;
      for (int draw = 0; draw < m; ++draw) {
        const int pos = pick(engine);
        if (pool[static_cast<std::size_t>(pos)] < best_rank) {
          best_rank = pool[static_cast<std::size_t>(pos)];
          best_pos = static_cast<std::size_t>(pos);
        }
      }
    } else if (remaining <= m) {
      best_pos = static_cast<std::size_t>(std::min_element(pool.begin(), pool.end()) - pool.begin());
    } else {
      // Partial Fisher-Yates: the first m slots become a uniform m-subset.
      for (int i = 0; i < m; ++i) {
        std::uniform_int_distribution<int> pick(i, remaining - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(engine))]);
      }
      best_pos = static_cast<std::size_t>(std::min_element(pool.begin(), pool.begin() + m) - pool.begin());
    }
    ++counts[static_cast<std::size_t>(pool[best_pos] - 1)];
    pool[best_pos] = pool.back();
    pool.pop_back();
  }
}

MonteCarloWeights finish_mc(int k, int m, int p, std::int64_t replicates,
                            const std::vector<std::int64_t>& counts) {
  MonteCarloWeights out;
  out.replicates = replicates;
  out.table = WeightTable{k, m, p, std::vector<double>(static_cast<std::size_t>(p))};
  out.stderr_.resize(static_cast<std::size_t>(p));
  const double r = static_cast<double>(replicates);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double w = static_cast<double>(counts[j]) / r;
    out.table.w[j] = w;
    out.stderr_[j] = std::sqrt(w * (1.0 - w) / r);
  }
  return out;
}

void check_mc(int k, int m, int p, std::int64_t replicates) {
  check_kmp(k, m, p);
  require(replicates >= 1, "replicates must be >= 1");
}

}  // namespace

double WeightTable::mass() const {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

WeightTable exact_weight_table(int k, int m, int p) {
  check_kmp(k, m, p);
  // Level `step` of the recursion runs on a pool of p - k + step features.
  // prev[j] holds w_j at the previous level, prev[0] = 0 is the boundary.
  std::vector<double> prev(static_cast<std::size_t>(p - k + 1), 0.0);
  std::vector<double> cur;
  std::vector<double> ratio;
  for (int step = 1; step <= k; ++step) {
    const int pool = p - k + step;
    const int me = std::min(m, pool);
    // ratio[j] = C(pool - j, me) / C(pool, me)
    ratio.assign(static_cast<std::size_t>(pool + 1), 0.0);
    ratio[0] = 1.0;
    for (int j = 1; j <= pool; ++j) {
      const int top = pool - j + 1;
      ratio[static_cast<std::size_t>(j)] =
          top - me > 0 ? ratio[static_cast<std::size_t>(j - 1)] * (top - me) / top : 0.0;
    }
    cur.assign(static_cast<std::size_t>(pool + 1), 0.0);
    for (int j = 1; j <= pool; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const double first = std::clamp(ratio[ju - 1] * me / (pool - j + 1), 0.0, 1.0);
      const double later = std::clamp(ratio[ju], 0.0, 1.0);
      const double earlier = std::clamp(1.0 - ratio[ju - 1], 0.0, 1.0);
      const double stay = j < pool ? prev[ju] : 0.0;
      cur[ju] = first + later * stay + earlier * prev[ju - 1];
    }
    prev.swap(cur);
  }
  WeightTable table{k, m, p, std::vector<double>(prev.begin() + 1, prev.end())};
  for (double& v : table.w) v = std::clamp(v, 0.0, 1.0);
  return table;
}

double exact_weight(int j, int k, int m, int p) {
  check_kmp(k, m, p);
  require(j >= 1 && j <= p, "j must lie in [1, p], got j=" + std::to_string(j));
  return exact_weight_table(k, m, p)(j);
}

double enumeration_size(int k, int m, int p) {
  check_kmp(k, m, p);
  double total = 1.0;
  for (int step = 0; step < k; ++step) {
    const int pool = p - step;
    total *= binomial(pool, std::min(m, pool));
  }
  return total;
}

WeightTable enumerate_weights(int k, int m, int p, double budget) {
  const double size = enumeration_size(k, m, p);
  require(size <= budget, "enumeration of " + std::to_string(size) +
                              " candidate-set sequences exceeds the budget");

  WeightTable table{k, m, p, std::vector<double>(static_cast<std::size_t>(p), 0.0)};
  std::vector<int> selected;

  // pool is kept sorted ascending, so the best rank in any subset is its first element.
  auto walk = [&](auto&& self, std::vector<int> pool, double prob) -> void {
    if (static_cast<int>(selected.size()) == k) {
      for (int rank : selected) table.w[static_cast<std::size_t>(rank - 1)] += prob;
      return;
    }
    const int n = static_cast<int>(pool.size());
    const int me = std::min(m, n);
    const double each = prob / binomial(n, me);
    std::vector<int> idx(static_cast<std::size_t>(me));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      const int pick = idx[0];
      std::vector<int> rest;
      rest.reserve(pool.size() - 1);
      for (int i = 0; i < n; ++i)
        if (i != pick) rest.push_back(pool[static_cast<std::size_t>(i)]);
      selected.push_back(pool[static_cast<std::size_t>(pick)]);
      self(self, std::move(rest), each);
      selected.pop_back();
      // next combination in lexicographic order
      int t = me - 1;
      while (t >= 0 && idx[static_cast<std::size_t>(t)] == n - me + t) --t;
      if (t < 0) break;
      ++idx[static_cast<std::size_t>(t)];
      for (int u = t + 1; u < me; ++u) idx[static_cast<std::size_t>(u)] = idx[static_cast<std::size_t>(u - 1)] + 1;
    }
  };

  std::vector<int> pool(static_cast<std::size_t>(p));
  std::iota(pool.begin(), pool.end(), 1);
  walk(walk, pool, 1.0);
  return table;
}

MonteCarloWeights mc_weight_table(int k, int m, int p, std::int64_t replicates, std::uint64_t seed,
                                  CandidateSampling sampling) {
  check_mc(k, m, p, replicates);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(p), 0);
#pragma omp parallel
  {
    std::vector<std::int64_t> local(static_cast<std::size_t>(p), 0);
    std::vector<int> pool;
#pragma omp for schedule(static)
    for (std::int64_t r = 0; r < replicates; ++r) {
      Engine engine = make_stream(seed, static_cast<std::uint64_t>(r));
      simulate_selection(k, m, p, sampling, engine, pool, local);
    }
#pragma omp critical
    for (std::size_t j = 0; j < counts.size(); ++j) counts[j] += local[j];
  }
  return finish_mc(k, m, p, replicates, counts);
}

namespace reference {

MonteCarloWeights mc_weight_table(int k, int m, int p, std::int64_t replicates, std::uint64_t seed,
                                  CandidateSampling sampling) {
  check_mc(k, m, p, replicates);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(p), 0);
  std::vector<int> pool;
  for (std::int64_t r = 0; r < replicates; ++r) {
    Engine engine = make_stream(seed, static_cast<std::uint64_t>(r));
    simulate_selection(k, m, p, sampling, engine, pool, counts);
  }
  return finish_mc(k, m, p, replicates, counts);
}

}  // namespace reference

AsymptoticWeightSpec asymptotic_spec(int k, double gamma) {
  check_gamma(gamma);
  require(k >= 0, "k must be >= 0");
  return AsymptoticWeightSpec{gamma, -std::log1p(-gamma), k};
}

double AsymptoticWeightSpec::midpoint() const {
  // log(e^{ak} - 1) / a = k + log(1 - e^{-ak}) / a
  return static_cast<double>(k) + std::log(-std::expm1(-alpha * k)) / alpha;
}

double AsymptoticWeightSpec::lower_bound(double j) const {
  return 1.0 / (1.0 + std::exp(-alpha * (midpoint() - j)));
}

double AsymptoticWeightSpec::upper_bound(double j) const {
  return 1.0 / (1.0 + std::exp(-alpha * (midpoint() + 1.0 - j)));
}

double asymptotic_weight(int j, int k, double gamma) {
  check_gamma(gamma);
  require(j >= 1, "j must be >= 1");
  require(k >= 0, "k must be >= 0");
  if (k == 0) return 0.0;
  const double a = -std::log1p(-gamma);
  double w = 0.0;
  if (j > k) {
    const double tail = std::exp(-a * j);
    for (int l = 1; l <= k; ++l) w = (std::exp(-a * (j - l)) - tail) * (1.0 - w);
  } else {
    const double top = -std::expm1(-a * k);
    const double ek = std::exp(-a * k);
    for (int i = 1; i <= j; ++i) w = top - (std::exp(-a * (k - i + 1)) - ek) * w;
  }
  return std::clamp(w, 0.0, 1.0);
}

std::vector<double> asymptotic_weights(int k, double gamma, int jmax) {
  require(jmax >= 0, "jmax must be >= 0");
  std::vector<double> out(static_cast<std::size_t>(jmax));
  for (int j = 1; j <= jmax; ++j) out[static_cast<std::size_t>(j - 1)] = asymptotic_weight(j, k, gamma);
  return out;
}

double limit_weight(int d, double gamma, double tol) {
  check_gamma(gamma);
  require(tol > 0.0, "tol must be positive");
  // For d < 0 the leading terms grow like e^{a i (|d| - i/2)} before decaying and the
  // alternating sum cancels catastrophically; the symmetry w_d = 1 - w_{-(d+1)} maps it
  // onto a series whose terms never exceed 1.
  if (d < 0) return 1.0 - limit_weight(-(d + 1), gamma, tol);
  const long double a = -std::log1p(-static_cast<long double>(gamma));
  long double sum = 0.0L;
  for (int i = 0; i < kLimitWeightMaxTerms; ++i) {
    const long double li = i;
    const long double term = std::exp(-a * li * (d + li / 2.0L + 0.5L));
    sum += (i % 2 == 0) ? term : -term;
    if (term < tol) return std::clamp(static_cast<double>(sum), 0.0, 1.0);
  }
  throw NumericalError("limit_weight: series did not converge within " +
                       std::to_string(kLimitWeightMaxTerms) + " terms (gamma too small)");
}

double logistic_approx(double j, int k, int m, int p) {
  require(p >= 1 && m >= 1 && m < p, "logistic_approx needs 1 <= m < p");
  const double keep = 1.0 - static_cast<double>(m) / p;
  return 1.0 / (1.0 + std::pow(keep, k - j + 0.5));
}

}  // namespace efs

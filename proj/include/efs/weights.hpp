#pragma once

#include <cstdint>
#include <vector>

namespace efs {

/// Inclusion probabilities of each OLS rank after k randomized selection steps.
///
/// Entry j (1-based) is the probability that the feature with the j-th largest
/// |OLS coefficient| is among the k features picked by one randomized forward
/// selection run that draws m candidates per step out of p features. The values
/// depend only on (j, k, m, p), never on the data.
struct WeightTable {
  int k = 0;
  int m = 0;
  int p = 0;
  std::vector<double> w;  // w[j - 1] is the weight of rank j

  double operator()(int j) const { return w.at(static_cast<std::size_t>(j - 1)); }
  double mass() const;
};

/// Monte Carlo estimate of a WeightTable with per-entry binomial standard errors.
struct MonteCarloWeights {
  WeightTable table;
  std::vector<double> stderr_;
  std::int64_t replicates = 0;
};

enum class CandidateSampling { without_replacement, with_replacement };

double exact_weight(int j, int k, int m, int p);

/// Dynamic program over the first-pick recurrence; O(p * k).
WeightTable exact_weight_table(int k, int m, int p);

/// Brute-force oracle: walks every sequence of candidate sets.
/// Throws when the number of sequences exceeds `budget`.
WeightTable enumerate_weights(int k, int m, int p, double budget = 1e7);

/// Number of candidate-set sequences enumerate_weights would visit.
double enumeration_size(int k, int m, int p);

/// Rank-only simulation of the randomized selection, parallel over replicates.
/// Replicate r draws from make_stream(seed, r), so the result does not depend
/// on the worker count.
MonteCarloWeights mc_weight_table(int k, int m, int p, std::int64_t replicates, std::uint64_t seed,
                                  CandidateSampling sampling = CandidateSampling::without_replacement);

/// Limiting regime m, p -> infinity with m / p -> gamma.
struct AsymptoticWeightSpec {
  double gamma = 0.0;
  double alpha = 0.0;  // -log(1 - gamma)
  int k = 0;

  /// h(alpha, k) = log(e^{alpha k} - 1) / alpha.
  double midpoint() const;
  /// Logistic lower bound on the limiting weight of rank j.
  double lower_bound(double j) const;
  /// Logistic upper bound on the limiting weight of rank j.
  double upper_bound(double j) const;
};

AsymptoticWeightSpec asymptotic_spec(int k, double gamma);

/// Limiting weight w_j(k, gamma).
///
/// For j > k the k-recurrence w_j(l) = (e^{-a(j-l)} - e^{-aj})(1 - w_j(l-1)) is
/// iterated; for j <= k the j-recurrence
/// w_j = 1 - e^{-ak} - (e^{-a(k-j+1)} - e^{-ak}) w_{j-1} is used instead. Each
/// branch only ever multiplies by factors in [0, 1), so rounding errors do not grow.
double asymptotic_weight(int j, int k, double gamma);

/// w_1(k, gamma) .. w_jmax(k, gamma).
std::vector<double> asymptotic_weights(int k, double gamma, int jmax);

/// Large-k limit of w_{k-d}(k, gamma): the alternating series
/// sum_i (-1)^i exp(-a i (d + i/2 + 1/2)), truncated once a term drops below tol.
/// Negative d is mapped through w_d = 1 - w_{-(d+1)}.
double limit_weight(int d, double gamma, double tol = 1e-15);

/// Maximum number of series terms limit_weight will sum before giving up.
inline constexpr int kLimitWeightMaxTerms = 400;

/// Logistic approximation 1 / (1 + (1 - m/p)^{k - j + 1/2}). `j` may be fractional.
double logistic_approx(double j, int k, int m, int p);

namespace reference {

/// Serial twin of efs::mc_weight_table; same streams, same result.
MonteCarloWeights mc_weight_table(int k, int m, int p, std::int64_t replicates, std::uint64_t seed,
                                  CandidateSampling sampling = CandidateSampling::without_replacement);

}  // namespace reference

}  // namespace efs

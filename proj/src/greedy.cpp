#include "efs/greedy.hpp"

#include <cmath>
#include <string>

#include "candidate_pool.hpp"
#include "efs/error.hpp"

namespace efs {

namespace {

void check_fit_args(const DesignMatrix& design, const Eigen::VectorXd& y, int k) {
  require(y.size() == design.n(), "response length does not match the design");
  require(y.allFinite(), "response contains non-finite values");
  require(k >= 0 && k <= std::min(design.n(), design.p()),
          "k must lie in [0, min(n, p)], got k=" + std::to_string(k));
}

void check_m(const DesignMatrix& design, int m) {
  require(m >= 1 && m <= design.p(), "m must lie in [1, p], got m=" + std::to_string(m));
}

FittedModel model_from(const DesignMatrix& design, Eigen::VectorXd coef, FitMeta meta) {
  FittedModel model;
  model.fitted = design.x() * coef;
  model.coef = std::move(coef);
  model.meta = meta;
  return model;
}

Eigen::VectorXd final_coef(const GreedyTrace& trace, int p) {
  if (trace.coef_path.cols() == 0) return Eigen::VectorXd::Zero(p);
  return trace.coef_path.col(trace.coef_path.cols() - 1);
}

}  // namespace

GramSystem GramSystem::build(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd g(x.cols(), x.cols());
  g.triangularView<Eigen::Lower>() = x.transpose() * x;
  g = g.selfadjointView<Eigen::Lower>();
  return with_response(g / n, x, y);
}

GramSystem GramSystem::with_response(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.rows());
  GramSystem s;
  s.gram = gram;
  s.xty = x.transpose() * y / n;
  s.yy = y.squaredNorm() / n;
  return s;
}

GreedyTrace greedy_path(const GramSystem& system, int k, int m, Engine* engine,
                        bool record_candidates) {
  const int p = system.p();
  require(k >= 0 && k <= p, "k must lie in [0, p]");
  require(m >= 1, "m must be >= 1");

  Eigen::VectorXd corr = system.xty;              // <r, x_j>
  Eigen::VectorXd perp = system.gram.diagonal();  // ||P_perp x_j||^2
  Eigen::MatrixXd qx(k, p);                       // row t: <q_t, x_j>
  Eigen::MatrixXd rinv = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd coef_sel = Eigen::VectorXd::Zero(k);
  double resid = system.yy;

  GreedyTrace trace;
  trace.coef_path.resize(p, 0);
  std::vector<Eigen::VectorXd> columns;
  detail::CandidatePool pool(p);
  int steps = 0;

  while (steps < k && !pool.empty()) {
    const auto drawn = pool.draw(m, engine);
    const std::vector<int> cand(drawn.begin(), drawn.end());
    int best = -1;
    double best_score = -1.0;
    std::vector<int> dependent;
    for (int j : cand) {
      if (perp[j] < kGramDegenerateSqNorm) {
        dependent.push_back(j);
        continue;
      }
      const double score = std::abs(corr[j]) / std::sqrt(perp[j]);
      if (score > best_score || (score == best_score && j < best)) {
        best_score = score;
        best = j;
      }
    }
    for (int j : dependent) {
      pool.remove(j);
      trace.path.diagnostics.push_back("feature " + std::to_string(j) +
                                       " lies in the span of the selected features; skipped");
    }
    if (best < 0) continue;
    pool.remove(best);

    const int l = steps;
    const double rll = std::sqrt(perp[best]);
    Eigen::RowVectorXd row = system.gram.row(best);
    for (int t = 0; t < l; ++t) row -= qx(t, best) * qx.row(t);
    row /= rll;
    qx.row(l) = row;

    // column l of R^{-1}
    for (int t = 0; t < l; ++t) {
      double acc = 0.0;
      for (int u = t; u < l; ++u) acc += rinv(t, u) * qx(u, best);
      rinv(t, l) = -acc / rll;
    }
    rinv(l, l) = 1.0 / rll;

    const double z = corr[best] / rll;
    coef_sel.head(l + 1) += z * rinv.col(l).head(l + 1);
    corr -= z * row.transpose();
    perp -= row.cwiseAbs2().transpose();
    perp[best] = 0.0;
    resid = std::max(resid - z * z, 0.0);

    trace.path.selected.push_back(best);
    trace.path.residual_norms.push_back(resid);
    if (record_candidates) trace.path.candidates.push_back(cand);

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
    for (int t = 0; t <= l; ++t) coef[trace.path.selected[static_cast<std::size_t>(t)]] = coef_sel[t];
    columns.push_back(std::move(coef));
    ++steps;
  }

  trace.coef_path.resize(p, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) trace.coef_path.col(static_cast<Eigen::Index>(c)) = columns[c];
  return trace;
}

Eigen::MatrixXd ensemble_coef_path(const GramSystem& system, int k, int m, int ensemble_size,
                                   std::uint64_t seed) {
  require(ensemble_size >= 1, "ensemble size B must be >= 1");
  const int p = system.p();
  std::vector<Eigen::MatrixXd> runs(static_cast<std::size_t>(ensemble_size));
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < ensemble_size; ++b) {
    Engine engine = make_stream(seed, static_cast<std::uint64_t>(b));
    GreedyTrace trace = greedy_path(system, k, m, &engine);
    Eigen::MatrixXd path = Eigen::MatrixXd::Zero(p, k);
    const Eigen::Index done = trace.coef_path.cols();
    if (done > 0) path.leftCols(done) = trace.coef_path;
    // a run that ran out of eligible features keeps its last model
    for (Eigen::Index c = done; c < k && done > 0; ++c) path.col(c) = trace.coef_path.col(done - 1);
    runs[static_cast<std::size_t>(b)] = std::move(path);
  }
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(p, k);
  for (const auto& run : runs) mean += run;
  return mean / static_cast<double>(ensemble_size);
}

PathFit fs_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k) {
  check_fit_args(design, y, k);
  const GramSystem system = GramSystem::build(design.x(), y);
  GreedyTrace trace = greedy_path(system, k, design.p(), nullptr, true);
  PathFit out;
  out.model = model_from(design, final_coef(trace, design.p()), FitMeta{k, design.p(), 1});
  out.path = std::move(trace.path);
  return out;
}

PathFit efs_base_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k, int m,
                     std::uint64_t seed) {
  check_fit_args(design, y, k);
  check_m(design, m);
  const GramSystem system = GramSystem::build(design.x(), y);
  Engine engine = make_stream(seed, 0);
  GreedyTrace trace = greedy_path(system, k, m, &engine, true);
  PathFit out;
  out.model = model_from(design, final_coef(trace, design.p()), FitMeta{k, m, 1});
  out.path = std::move(trace.path);
  return out;
}

FittedModel efs_ensemble_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k, int m,
                             int ensemble_size, std::uint64_t seed) {
  check_fit_args(design, y, k);
  check_m(design, m);
  require(ensemble_size >= 1, "ensemble size B must be >= 1");
  if (k == 0) return model_from(design, Eigen::VectorXd::Zero(design.p()), FitMeta{k, m, ensemble_size});
  const GramSystem system = GramSystem::build(design.x(), y);
  const Eigen::MatrixXd path = ensemble_coef_path(system, k, m, ensemble_size, seed);
  return model_from(design, path.col(k - 1), FitMeta{k, m, ensemble_size});
}

FittedModel efs_exact_orthogonal(const DesignMatrix& design, const FeatureOrdering& ordering, int k,
                                 int m, const WeightTable& weights) {
  require(ordering.orthonormal_certified,
          "exact ensemble limit requires an orthonormal design (X'X/n = I within 1e-8)");
  require(ordering.p() == design.p(), "ordering does not match the design");
  require(weights.k == k && weights.m == m && weights.p == design.p(),
          "weight table (k, m, p) does not match the requested fit");
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(design.p());
  for (int r = 0; r < design.p(); ++r)
    coef[ordering.perm[static_cast<std::size_t>(r)]] = weights.w[static_cast<std::size_t>(r)] * ordering.beta_hat[r];
  return model_from(design, std::move(coef), FitMeta{k, m, 0});
}

}  // namespace efs

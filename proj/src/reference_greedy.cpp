// Serial reference for the greedy kernels. Kept deliberately plain: explicit
// residual and projected columns, no sufficient statistics, no threads.

#include <cmath>
#include <string>

#include "candidate_pool.hpp"
#include "efs/error.hpp"
#include "efs/greedy.hpp"

namespace efs::reference {

namespace {

struct Basis {
  int n = 0;
  std::vector<Eigen::VectorXd> q;  // orthonormal under <a, b> = a'b / n

  Eigen::VectorXd project_out(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qt : q) out -= inner(qt, out) * qt;
    return out;
  }
};

PathFit run(const DesignMatrix& design, const Eigen::VectorXd& y, int k, int m, Engine* engine,
            FitMeta meta) {
  require(y.size() == design.n(), "response length does not match the design");
  require(k >= 0 && k <= std::min(design.n(), design.p()), "k must lie in [0, min(n, p)]");
  require(m >= 1 && m <= design.p(), "m must lie in [1, p]");
  const Eigen::MatrixXd& x = design.x();

  PathFit out;
  Basis basis{design.n(), {}};
  Eigen::VectorXd resid = y;
  detail::CandidatePool pool(design.p());

  while (static_cast<int>(out.path.selected.size()) < k && !pool.empty()) {
    const auto drawn = pool.draw(m, engine);
    const std::vector<int> cand(drawn.begin(), drawn.end());
    int best = -1;
    double best_score = -1.0;
    Eigen::VectorXd best_dir;
    std::vector<int> dependent;
    for (int j : cand) {
      Eigen::VectorXd v = basis.project_out(x.col(j));
      const double norm = std::sqrt(sq_norm(v));
      if (norm < kDegenerateNorm) {
        dependent.push_back(j);
        continue;
      }
      const double score = std::abs(inner(resid, x.col(j))) / norm;
      if (score > best_score || (score == best_score && j < best)) {
        best_score = score;
        best = j;
        best_dir = v / norm;
      }
    }
    for (int j : dependent) {
      pool.remove(j);
      out.path.diagnostics.push_back("feature " + std::to_string(j) +
                                     " lies in the span of the selected features; skipped");
    }
    if (best < 0) continue;
    pool.remove(best);
    basis.q.push_back(best_dir);
    resid -= inner(resid, best_dir) * best_dir;
    out.path.selected.push_back(best);
    out.path.candidates.push_back(cand);
    out.path.residual_norms.push_back(sq_norm(resid));
  }

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(design.p());
  const auto& sel = out.path.selected;
  if (!sel.empty()) {
    Eigen::MatrixXd xs(design.n(), static_cast<Eigen::Index>(sel.size()));
    for (std::size_t c = 0; c < sel.size(); ++c) xs.col(static_cast<Eigen::Index>(c)) = x.col(sel[c]);
    const Eigen::VectorXd b = xs.colPivHouseholderQr().solve(y);
    for (std::size_t c = 0; c < sel.size(); ++c) coef[sel[c]] = b[static_cast<Eigen::Index>(c)];
  }
  out.model.fitted = x * coef;
  out.model.coef = std::move(coef);
  out.model.meta = meta;
  return out;
}

}  // namespace

PathFit fs_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k) {
  return run(design, y, k, design.p(), nullptr, FitMeta{k, design.p(), 1});
}

PathFit efs_base_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k, int m,
                     std::uint64_t seed) {
  Engine engine = make_stream(seed, 0);
  return run(design, y, k, m, &engine, FitMeta{k, m, 1});
}

FittedModel efs_ensemble_fit(const DesignMatrix& design, const Eigen::VectorXd& y, int k, int m,
                             int ensemble_size, std::uint64_t seed) {
  require(ensemble_size >= 1, "ensemble size B must be >= 1");
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(design.p());
  for (int b = 0; b < ensemble_size; ++b) {
    Engine engine = make_stream(seed, static_cast<std::uint64_t>(b));
    coef += run(design, y, k, m, &engine, FitMeta{}).model.coef;
  }
  coef /= static_cast<double>(ensemble_size);
  FittedModel model;
  model.fitted = design.x() * coef;
  model.coef = std::move(coef);
  model.meta = FitMeta{k, m, ensemble_size};
  return model;
}

}  // namespace efs::reference

#include "efs/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "efs/analysis.hpp"
#include "efs/design.hpp"
#include "efs/error.hpp"
#include "efs/greedy.hpp"
#include "efs/io.hpp"
#include "efs/simlab.hpp"
#include "efs/weights.hpp"
#include "json.hpp"

namespace efs::cli {

namespace {

using nlohmann::json;

struct Options {
  int k = 0;
  int m = 0;
  int p = 0;
  int d = 0;
  int jmax = 0;
  int B = 100;
  double gamma = 0.0;
  std::int64_t reps = 100000;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string config;
  std::string out;
};

std::string weight_csv(const std::vector<double>& w, const std::vector<double>* se = nullptr) {
  std::ostringstream s;
  s << (se ? "j,weight,stderr\n" : "j,weight\n");
  for (std::size_t j = 0; j < w.size(); ++j) {
    s << j + 1 << ',' << format_double(w[j]);
    if (se) s << ',' << format_double((*se)[j]);
    s << '\n';
  }
  return s.str();
}

class QuantityTable {
 public:
  void add(const std::string& name, double value, double se = 0.0) {
    body_ << name << ',' << format_double(value) << ',' << format_double(se) << '\n';
  }
  std::string str() const { return "quantity,value,stderr\n" + body_.str(); }

 private:
  std::ostringstream body_;
};

// Reads a JSON object and rejects keys outside `allowed`.
json load_config(const std::string& path, const std::set<std::string>& allowed) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config is not valid JSON: " + std::string(e.what()));
  }
  require(j.is_object(), "config must be a JSON object");
  for (const auto& item : j.items())
    require(allowed.count(item.key()) == 1, "unknown config key '" + item.key() + "'");
  return j;
}

template <typename T>
T field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config field '" + key + "' has the wrong type");
  }
}

std::uint64_t pick_seed(const Options& o, const json& config) {
  if (o.seed) return *o.seed;
  return field<std::uint64_t>(config, "seed", 0);
}

std::vector<int> full_grid(int p) {
  std::vector<int> g(static_cast<std::size_t>(p));
  for (int m = 1; m <= p; ++m) g[static_cast<std::size_t>(m - 1)] = m;
  return g;
}

std::string run_fit(const std::string& method, const Options& o) {
  const RegressionData data = parse_regression_csv(read_file(o.data));
  const DesignMatrix design = DesignMatrix::normalize(data.x);
  const std::uint64_t seed = o.seed.value_or(0);
  FittedModel model;
  json selected = json::array();
  if (method == "fs") {
    const PathFit fit = fs_fit(design, data.y, o.k);
    for (int j : fit.path.selected) selected.push_back(j + 1);
    model = fit.model;
  } else {
    require(o.m >= 1, "efs needs --m >= 1");
    model = efs_ensemble_fit(design, data.y, o.k, o.m, o.B, seed);
    for (int j = 0; j < design.p(); ++j)
      if (model.coef[j] != 0.0) selected.push_back(j + 1);
  }
  json coef = json::array();
  for (int j = 0; j < design.p(); ++j) coef.push_back(model.coef[j] / design.scales()[j]);
  const double train_mse = (data.y - model.fitted).squaredNorm() / static_cast<double>(design.n());
  json result = {{"selected", selected}, {"coef", coef}, {"train_mse", train_mse}};
  return result.dump(2) + "\n";
}

std::string analyze_df(const Options& o) {
  const json c = load_config(o.config, {"n", "p", "k", "m", "replicates", "sigma2", "beta", "seed"});
  const int p = field<int>(c, "p", 10);
  const int n = field<int>(c, "n", p);
  const int k = field<int>(c, "k", 3);
  const int m = field<int>(c, "m", std::max(1, p / 3));
  const auto reps = field<std::int64_t>(c, "replicates", 2000);
  const double sigma2 = field<double>(c, "sigma2", 1.0);
  const auto beta_list = field<std::vector<double>>(c, "beta", std::vector<double>(static_cast<std::size_t>(p), 0.0));
  require(static_cast<int>(beta_list.size()) == p, "beta must have p entries");
  const std::uint64_t seed = pick_seed(o, c);

  const DesignMatrix design = orthonormal_design(n, p, derive_seed(seed, {0}));
  const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(beta_list.data(), p);
  const Eigen::VectorXd f = design.x() * beta;
  const WeightTable table = exact_weight_table(k, m, p);

  // FS(1..p) on an orthonormal design keeps the top-j OLS coefficients.
  PathFitter fs_path = [](const DesignMatrix& d, const Eigen::VectorXd& y, std::uint64_t) {
    const FeatureOrdering ord = feature_ordering(d, y);
    Eigen::MatrixXd fits(d.n(), d.p());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d.n());
    for (int r = 0; r < d.p(); ++r) {
      acc += ord.beta_hat[r] * d.x().col(ord.perm[static_cast<std::size_t>(r)]);
      fits.col(r) = acc;
    }
    return fits;
  };
  Fitter efs_exact = [&](const DesignMatrix& d, const Eigen::VectorXd& y, std::uint64_t) {
    return efs_exact_orthogonal(d, feature_ordering(d, y), k, m, table).fitted;
  };
  const PathMonteCarlo path = monte_carlo_path(fs_path, design, f, sigma2, reps, derive_seed(seed, {1}));
  const DfEstimate direct = df_monte_carlo(efs_exact, design, f, sigma2, reps, derive_seed(seed, {2}));
  const DfEstimate decomposed = df_decomposition(path, table);
  const DfEstimate fs_k = path.df(k - 1);

  QuantityTable t;
  t.add("df_fs", fs_k.df, fs_k.stderr_);
  t.add("df_efs_direct", direct.df, direct.stderr_);
  t.add("df_efs_decomposition", decomposed.df, decomposed.stderr_);
  t.add("difference", decomposed.df - direct.df, std::hypot(decomposed.stderr_, direct.stderr_));
  return t.str();
}

std::string analyze_gap(const Options& o) {
  const json c = load_config(o.config, {"p", "k", "m_grid", "beta_hat_sq", "seed"});
  const int p = field<int>(c, "p", 200);
  const int k = field<int>(c, "k", 5);
  const auto grid = field<std::vector<int>>(c, "m_grid", geometric_grid(std::min(2, p), p));
  std::vector<double> profile(static_cast<std::size_t>(p));
  for (int j = 1; j <= p; ++j) profile[static_cast<std::size_t>(j - 1)] = 1.0 / j;
  profile = field<std::vector<double>>(c, "beta_hat_sq", profile);
  require(static_cast<int>(profile.size()) == p, "beta_hat_sq must have p entries");
  require(!grid.empty(), "m_grid must not be empty");

  QuantityTable t;
  double best = -INFINITY;
  int best_m = 0;
  for (int m : grid) {
    const double g = training_gap(profile, exact_weight_table(k, m, p));
    t.add("gap_m" + std::to_string(m), g);
    if (g > best) {
      best = g;
      best_m = m;
    }
  }
  t.add("max_gap", best);
  t.add("argmax_m", best_m);
  if (2 * k <= p) t.add("bound", training_gap_bound(profile, k));
  return t.str();
}

std::string analyze_majorization(const Options& o) {
  const json c = load_config(o.config, {"p", "k", "m_grid", "seed"});
  const int p = field<int>(c, "p", 10);
  const int k = field<int>(c, "k", 3);
  const auto grid = field<std::vector<int>>(c, "m_grid", full_grid(p));
  const MajorizationReport r = majorization_check(k, p, grid);
  QuantityTable t;
  t.add("holds", r.holds ? 1.0 : 0.0);
  t.add("max_violation", r.max_violation);
  t.add("max_total_gap", r.max_total_gap);
  t.add("failing_pairs", static_cast<double>(r.failing_pairs.size()));
  return t.str();
}

std::string analyze_escape(const Options& o) {
  const json c = load_config(o.config, {"p", "n", "k", "m", "beta", "zeta", "replicates", "seed"});
  const int p = field<int>(c, "p", 60);
  const int n = field<int>(c, "n", p);
  const int k = field<int>(c, "k", p / 2);
  const int m = field<int>(c, "m", std::max(1, p / 3));
  const double beta = field<double>(c, "beta", 1.0);
  const double zeta = field<double>(c, "zeta", 0.3);
  const auto reps = field<std::int64_t>(c, "replicates", 500);
  const EscapeDesign escape = build_escape_design(p, n, beta, zeta);
  const EscapeReport r = escape_experiment(escape, k, m, reps, pick_seed(o, c));
  QuantityTable t;
  t.add("gram_error", escape.gram_error());
  t.add("fs_first_pick", r.fs_first_pick + 1);
  t.add("fs_train_error", r.fs_train_error);
  t.add("fs_predicted", r.fs_predicted);
  t.add("base_train_error", r.base_train_error.mean, r.base_train_error.stderr_);
  return t.str();
}

std::string run_simulate(const Options& o) {
  ExperimentConfig config = parse_experiment_config(read_file(o.config));
  if (o.seed) config.seed = *o.seed;
  return run_experiment(config).to_csv();
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty())
    out << text;
  else
    write_file_atomic(o.out, text);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ensemble forward selection: weights, fits, analysis and simulation", "efs"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "64-bit seed (default 0)");
    cmd->add_option("--out", o.out, "write the result here instead of stdout");
  };

  CLI::App* weights = app.add_subcommand("weights", "weight tables");
  weights->require_subcommand(1);
  CLI::App* w_exact = weights->add_subcommand("exact", "exact finite-p weights");
  w_exact->add_option("--k", o.k)->required();
  w_exact->add_option("--m", o.m)->required();
  w_exact->add_option("--p", o.p)->required();
  CLI::App* w_asym = weights->add_subcommand("asymptotic", "limiting weights for m/p -> gamma");
  w_asym->add_option("--k", o.k)->required();
  w_asym->add_option("--gamma", o.gamma)->required();
  w_asym->add_option("--jmax", o.jmax, "largest rank printed (default 3k)");
  CLI::App* w_limit = weights->add_subcommand("limit", "large-k limit at offset d = k - j");
  w_limit->add_option("--d", o.d)->required();
  w_limit->add_option("--gamma", o.gamma)->required();
  CLI::App* w_mc = weights->add_subcommand("mc", "Monte Carlo weights");
  w_mc->add_option("--k", o.k)->required();
  w_mc->add_option("--m", o.m)->required();
  w_mc->add_option("--p", o.p)->required();
  w_mc->add_option("--reps", o.reps, "replicates (default 100000)");
  for (CLI::App* c : {w_exact, w_asym, w_limit, w_mc}) add_common(c);

  CLI::App* fit = app.add_subcommand("fit", "fit FS or EFS to a CSV data set");
  fit->require_subcommand(1);
  CLI::App* fit_fs = fit->add_subcommand("fs", "forward selection");
  CLI::App* fit_efs = fit->add_subcommand("efs", "ensemble forward selection");
  for (CLI::App* c : {fit_fs, fit_efs}) {
    c->add_option("--k", o.k)->required();
    c->add_option("--data", o.data, "CSV, first column y")->required();
    add_common(c);
  }
  fit_efs->add_option("--m", o.m)->required();
  fit_efs->add_option("--B", o.B, "ensemble size (default 100)");

  CLI::App* analyze = app.add_subcommand("analyze", "orthogonal-design analyses");
  analyze->require_subcommand(1);
  std::vector<CLI::App*> analyses;
  for (const char* name : {"df", "gap", "majorization", "escape"}) {
    CLI::App* c = analyze->add_subcommand(name);
    c->add_option("--config", o.config, "JSON config")->required();
    add_common(c);
    analyses.push_back(c);
  }

  CLI::App* simulate = app.add_subcommand("simulate", "banded-design simulation study");
  simulate->add_option("--config", o.config, "JSON ExperimentConfig")->required();
  simulate->add_option("--out", o.out, "results CSV")->required();
  simulate->add_option("--seed", o.seed, "overrides the config seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  }

  try {
    std::string text;
    if (w_exact->parsed()) {
      text = weight_csv(exact_weight_table(o.k, o.m, o.p).w);
    } else if (w_asym->parsed()) {
      text = weight_csv(asymptotic_weights(o.k, o.gamma, o.jmax > 0 ? o.jmax : 3 * o.k));
    } else if (w_limit->parsed()) {
      text = "j,weight\n" + std::to_string(o.d) + ',' + format_double(limit_weight(o.d, o.gamma)) + '\n';
    } else if (w_mc->parsed()) {
      const MonteCarloWeights mc = mc_weight_table(o.k, o.m, o.p, o.reps, o.seed.value_or(0));
      text = weight_csv(mc.table.w, &mc.stderr_);
    } else if (fit_fs->parsed()) {
      text = run_fit("fs", o);
    } else if (fit_efs->parsed()) {
      text = run_fit("efs", o);
    } else if (analyses[0]->parsed()) {
      text = analyze_df(o);
    } else if (analyses[1]->parsed()) {
      text = analyze_gap(o);
    } else if (analyses[2]->parsed()) {
      text = analyze_majorization(o);
    } else if (analyses[3]->parsed()) {
      text = analyze_escape(o);
    } else if (simulate->parsed()) {
      text = run_simulate(o);
    }
    emit(o, text, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace efs::cli

#include "biascal/cli.hpp"

#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "biascal/calibration.hpp"
#include "biascal/errors.hpp"
#include "biascal/experiments.hpp"

namespace biascal {

namespace {

struct Flags {
  double q1 = 2.0, q2 = 1.0;
  double K = 1.0;
  std::vector<double> Ks;
  double d = 1.0;
  std::vector<std::int64_t> n;
  std::int64_t n0 = 0;
  int reps = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  double scale = 1.0;
  int workers = 0;
  std::string scheme = "general";
  std::string setting = "cfd";
  std::vector<std::string> estimators{"baseline", "recursive", "weighted"};
  double B = 1.0, sigma = 1.0, theta = 0.0;
  int table = 0;
  bool crn = false;
  bool timestamp = false;
};

std::string sig4(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

void require_positive(double v, const char* flag) {
  if (!(v > 0.0)) throw ConfigError(std::string(flag) + " must be positive");
}

Format parse_format(const std::string& f) {
  if (f == "csv") return Format::Csv;
  if (f == "json") return Format::Json;
  throw ConfigError("format must be csv or json");
}

BiasOrder order_of(const Flags& f) {
  require_positive(f.q1, "q1");
  require_positive(f.q2, "q2");
  return {f.q1, f.q2};
}

int cmd_amrr(const Flags& f, std::ostream& out) {
  const auto order = order_of(f);
  out << "scheme " << f.scheme << '\n';
  if (f.scheme == "general") {
    require_positive(f.K, "K");
    out << "ratio " << sig4(amrr_general(order, f.K)) << '\n';
    out << "K " << sig4(f.K) << '\n';
  } else if (f.scheme == "recursive-tied") {
    const auto r = amrr_recursive_tied(order);
    out << "ratio " << sig4(r.ratio) << '\n' << "c " << sig4(r.c) << '\n' << "beta 1\n" << "d-scale 1\n";
  } else if (f.scheme == "recursive-free") {
    const auto r = amrr_recursive_free(order);
    out << "ratio " << sig4(r.ratio) << '\n' << "d-scale " << sig4(r.d_scale) << '\n' << "c 1\n" << "beta 1\n";
  } else if (f.scheme == "averaged") {
    const auto r = amrr_recursive_free(order);
    out << "ratio " << sig4(r.ratio) << '\n' << "d-scale " << sig4(r.d_scale) << '\n'
        << "c any>0\n" << "beta (0,1)\n";
  } else {
    throw ConfigError("scheme must be one of general, recursive-tied, recursive-free, averaged");
  }
  return kExitOk;
}

int cmd_weights(const Flags& f, std::ostream& out) {
  const auto order = order_of(f);
  require_positive(f.K, "K");
  const auto fmt = parse_format(f.format);
  const std::int64_t n = f.n.empty() ? 1000 : f.n.front();
  if (f.n0 < 0) throw ConfigError("n0 must be non-negative");
  const auto ws = optimal_weights(n, f.n0, order, f.K);
  if (!f.out.empty()) {
    write_weights_file(f.out, ws, fmt);
  } else {
    emit_weight_distribution(out, {ws}, fmt);
  }
  const char* pre = f.out.empty() ? "# " : "";
  out << pre << "n " << n << '\n'
      << pre << "lambda1 " << sig4(ws.lambda1) << '\n'
      << pre << "lambda2 " << sig4(ws.lambda2) << '\n'
      << pre << "a_star " << sig4(ws.a_star) << '\n'
      << pre << "eta_star " << sig4(ws.eta_star) << '\n'
      << pre << "s_star " << sig4(ws.s_star) << '\n'
      << pre << "scaled_s_star " << sig4(ws.scaled_s_star()) << '\n'
      << pre << "amrr " << sig4(amrr_general(order, f.K)) << '\n';
  return kExitOk;
}

std::vector<EstimatorConfig> estimator_set(const Flags& f, const BiasOrder& order) {
  std::vector<EstimatorConfig> est;
  std::vector<double> Ks = f.Ks.empty() ? std::vector<double>{f.K} : f.Ks;
  for (const auto& name : f.estimators) {
    if (name == "baseline") {
      est.push_back(EstimatorConfig::baseline());
    } else if (name == "recursive") {
      est.push_back(EstimatorConfig::recursive_free(order));
    } else if (name == "recursive-tied") {
      const auto r = amrr_recursive_tied(order);
      auto e = EstimatorConfig::recursive(r.c, 1.0, 1.0);
      e.name = "recursive-tied";
      est.push_back(e);
    } else if (name == "averaged") {
      est.push_back(EstimatorConfig::averaged(1.0, 0.5, amrr_recursive_free(order).d_scale));
    } else if (name == "weighted") {
      for (double K : Ks) {
        require_positive(K, "K");
        est.push_back(EstimatorConfig::weighted(K));
      }
    } else {
      throw ConfigError("unknown estimator '" + name + "'");
    }
  }
  return est;
}

std::uint64_t resolve_seed(const Flags& f, bool given, std::ostream& out) {
  if (given) return f.seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  out << "seed " << s << '\n';
  return s;
}

int finish_run(const Flags& f, ExperimentConfig cfg, std::ostream& out) {
  const auto fmt = parse_format(f.format);
  auto report = run_experiment(cfg);
  if (f.timestamp) {
    const auto now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    report.timestamp = buf;
  }
  if (!f.out.empty()) write_report_file(f.out, report, fmt);
  write_summary(out, report);
  out << "config_hash " << report.config_hash << '\n';
  return kExitOk;
}

int cmd_run_synthetic(const Flags& f, bool seed_given, std::ostream& out) {
  const auto order = order_of(f);
  require_positive(f.d, "d");
  if (f.reps < 2) throw ConfigError("reps must be >= 2");
  ExperimentConfig cfg;
  cfg.model.synthetic = SyntheticOracleSpec::scalar(f.theta, f.B, f.sigma, order);
  cfg.model.synthetic.allow_noiseless = false;
  cfg.estimators = estimator_set(f, order);
  cfg.budgets = f.n.empty() ? std::vector<std::int64_t>{100000} : f.n;
  cfg.baseline_d = f.d;
  cfg.n0 = f.n0;
  cfg.replications = f.reps;
  cfg.workers = f.workers;
  cfg.seed = resolve_seed(f, seed_given, out);
  return finish_run(f, cfg, out);
}

int cmd_run_mm1(const Flags& f, bool seed_given, bool n0_given, std::ostream& out) {
  require_positive(f.d, "d");
  if (f.setting != "cfd" && f.setting != "sp") throw ConfigError("setting must be cfd or sp");
  ExperimentConfig cfg;
  cfg.model = ModelConfig::mm1(f.setting == "sp");
  cfg.model.crn = f.crn;
  cfg.estimators = estimator_set(f, cfg.model.order());
  cfg.budgets = f.n.empty() ? std::vector<std::int64_t>{10000} : f.n;
  cfg.baseline_d = f.d;
  cfg.n0 = n0_given ? f.n0 : 500;
  cfg.replications = f.reps;
  cfg.workers = f.workers;
  cfg.seed = resolve_seed(f, seed_given, out);
  return finish_run(f, cfg, out);
}

int cmd_reproduce(const Flags& f, bool seed_given, std::ostream& out) {
  const auto t = reproduce_table(f.table, f.scale, f.reps, seed_given ? f.seed : 20240101, f.workers);
  write_table(out, t);
  if (t.report && !f.out.empty()) write_report_file(f.out, *t.report, parse_format(f.format));
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Minimax calibration of biased stochastic estimators", "biascal"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value file with flag defaults");

  app.add_option("--q1", f.q1, "bias order");
  app.add_option("--q2", f.q2, "noise order");
  auto* optK = app.add_option("--K", f.Ks, "inflation cap on d~/d (repeatable for runs)")->delimiter(',');
  app.add_option("--d", f.d, "baseline perturbation scale");
  app.add_option("--n", f.n, "run budget(s)")->delimiter(',');
  auto* optN0 = app.add_option("--n0", f.n0, "burn-in offset");
  app.add_option("--reps", f.reps, "replications");
  auto* optSeed = app.add_option("--seed", f.seed, "random seed");
  app.add_option("--out", f.out, "output file");
  app.add_option("--format", f.format, "csv or json");
  app.add_option("--scale", f.scale, "budget scale for Monte Carlo tables");
  app.add_option("--workers", f.workers, "worker threads (0 = all cores)");
  app.add_option("--scheme", f.scheme, "general|recursive-tied|recursive-free|averaged");
  app.add_option("--setting", f.setting, "mm1 setting: cfd or sp");
  app.add_option("--estimators", f.estimators, "baseline,recursive,recursive-tied,averaged,weighted")
      ->delimiter(',');
  app.add_option("--B", f.B, "synthetic bias coefficient");
  app.add_option("--sigma", f.sigma, "synthetic noise scale");
  app.add_option("--theta", f.theta, "synthetic target value");
  app.add_flag("--crn", f.crn, "common random numbers in mm1 finite differences");
  app.add_flag("--timestamp", f.timestamp, "record a timestamp in JSON reports");

  auto* amrr = app.add_subcommand("amrr", "closed-form asymptotic minimax risk ratios");
  auto* weights = app.add_subcommand("weights", "optimal weighting scheme for a budget");
  auto* syn = app.add_subcommand("run-synthetic", "estimator comparison on the synthetic model");
  auto* mm1 = app.add_subcommand("run-mm1", "estimator comparison on the M/M/1 derivative oracles");
  auto* table = app.add_subcommand("reproduce-table", "regenerate a results table (1-8)");
  table->add_option("table", f.table, "table id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (optK->count() > 0) f.K = f.Ks.front();
    for (double K : f.Ks) require_positive(K, "K");
    const bool seed_given = optSeed->count() > 0;
    if (amrr->parsed()) return cmd_amrr(f, out);
    if (weights->parsed()) return cmd_weights(f, out);
    if (syn->parsed()) return cmd_run_synthetic(f, seed_given, out);
    if (mm1->parsed()) return cmd_run_mm1(f, seed_given, optN0->count() > 0, out);
    if (table->parsed()) return cmd_reproduce(f, seed_given, out);
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace biascal

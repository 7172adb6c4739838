#include "biascal/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "biascal/errors.hpp"
#include "biascal/summation.hpp"

namespace biascal {

using nlohmann::ordered_json;

// ---------------------------------------------------------------- config

ModelConfig ModelConfig::mm1(bool simultaneous_perturbation) {
  ModelConfig m;
  m.kind = simultaneous_perturbation ? ModelKind::Mm1Sp : ModelKind::Mm1Cfd;
  m.truth = simultaneous_perturbation ? std::vector<double>{0.0946, -0.2501} : std::vector<double>{0.0946};
  return m;
}

BiasOrder ModelConfig::order() const {
  if (kind == ModelKind::Synthetic) return synthetic.order;
  return BiasOrder{2.0, 1.0};  // central differences and SP: bias O(delta^2), noise O(1/delta)
}

std::vector<double> ModelConfig::true_value() const {
  if (kind == ModelKind::Synthetic) return synthetic.theta;
  return truth;
}

Oracle ModelConfig::make_oracle() const {
  switch (kind) {
    case ModelKind::Synthetic:
      return make_synthetic_oracle(synthetic);
    case ModelKind::Mm1Cfd:
      return make_mm1_cfd_oracle(queue, target, crn);
    case ModelKind::Mm1Sp:
      return make_mm1_sp_oracle(queue, crn);
  }
  throw ConfigError("unknown model kind");
}

EstimatorConfig EstimatorConfig::baseline() {
  EstimatorConfig e;
  e.name = "baseline";
  return e;
}

EstimatorConfig EstimatorConfig::recursive_free(const BiasOrder& order) {
  const auto cal = amrr_recursive_free(order);
  auto e = recursive(cal.c, 1.0, cal.d_scale);
  e.name = "recursive";
  return e;
}

EstimatorConfig EstimatorConfig::recursive(double c, double beta, double d_factor) {
  EstimatorConfig e;
  e.kind = EstimatorKind::Recursive;
  e.c = c;
  e.beta = beta;
  e.d_factor = d_factor;
  e.name = "recursive";
  return e;
}

EstimatorConfig EstimatorConfig::averaged(double c, double beta, double d_factor) {
  EstimatorConfig e = recursive(c, beta, d_factor);
  e.kind = EstimatorKind::Averaged;
  e.name = "averaged";
  return e;
}

EstimatorConfig EstimatorConfig::weighted(double K) {
  EstimatorConfig e;
  e.kind = EstimatorKind::Weighted;
  e.K = K;
  std::ostringstream os;
  os << "weighted-K" << K;
  e.name = os.str();
  return e;
}

void ExperimentConfig::validate() const {
  if (replications < 2) throw ConfigError("replications must be >= 2");
  if (budgets.empty()) throw ConfigError("budgets must be nonempty");
  for (auto n : budgets)
    if (n < 1) throw ConfigError("budgets must be positive");
  if (!(baseline_d > 0.0)) throw ConfigError("d must be positive");
  if (n0 < 0) throw ConfigError("n0 must be non-negative");
  if (model.kind == ModelKind::Synthetic) model.synthetic.validate();
  if (model.kind != ModelKind::Synthetic) {
    model.queue.validate();
    const std::size_t want = model.kind == ModelKind::Mm1Sp ? 2 : 1;
    if (model.truth.size() != want) throw ConfigError("true value has the wrong dimension for the model");
  }
  std::map<std::string, int> seen;
  for (const auto& e : estimators) {
    if (e.name.empty()) throw ConfigError("estimator name must not be empty");
    if (++seen[e.name] > 1) throw ConfigError("duplicate estimator name '" + e.name + "'");
    if (e.kind == EstimatorKind::Weighted && !(e.K > 0.0)) throw ConfigError("K must be positive");
    if (!(e.d_factor > 0.0)) throw ConfigError("d factor must be positive");
  }
}

namespace {

const char* kind_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Baseline: return "baseline";
    case EstimatorKind::Recursive: return "recursive";
    case EstimatorKind::Averaged: return "averaged";
    case EstimatorKind::Weighted: return "weighted";
  }
  return "?";
}

const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::Synthetic: return "synthetic";
    case ModelKind::Mm1Cfd: return "mm1-cfd";
    case ModelKind::Mm1Sp: return "mm1-sp";
  }
  return "?";
}

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  ordered_json m;
  m["kind"] = model_name(c.model.kind);
  const auto o = c.model.order();
  m["q1"] = o.q1;
  m["q2"] = o.q2;
  if (c.model.kind == ModelKind::Synthetic) {
    m["theta"] = c.model.synthetic.theta;
    m["B"] = c.model.synthetic.B;
    m["noise_scale"] = c.model.synthetic.noise_scale;
    m["higher_order_bias"] = c.model.synthetic.higher_order_bias;
  } else {
    m["arrival_rate"] = c.model.queue.arrival_rate;
    m["service_rate"] = c.model.queue.service_rate;
    m["num_customers"] = c.model.queue.num_customers;
    m["target"] = c.model.target == RateTarget::Arrival ? "arrival" : "service";
    m["crn"] = c.model.crn;
    m["truth"] = c.model.truth;
  }
  j["model"] = m;
  auto& est = j["estimators"] = ordered_json::array();
  for (const auto& e : c.estimators) {
    ordered_json x;
    x["name"] = e.name;
    x["kind"] = kind_name(e.kind);
    x["d_factor"] = e.d_factor;
    x["c"] = e.c;
    x["beta"] = e.beta;
    x["K"] = e.K;
    est.push_back(x);
  }
  j["budgets"] = c.budgets;
  j["d"] = c.baseline_d;
  j["n0"] = c.n0;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  return j;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig with_baseline(ExperimentConfig c) {
  bool has = false;
  for (const auto& e : c.estimators) has |= e.name == "baseline";
  if (!has) c.estimators.insert(c.estimators.begin(), EstimatorConfig::baseline());
  return c;
}

struct PreparedEstimator {
  const EstimatorConfig* cfg = nullptr;
  DeltaSchedule sched;
  RecursiveParams params;
  std::optional<WeightScheme> scheme;
};

int resolve_workers(int requested, int jobs) {
  int w = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (w < 1) w = 1;
  return std::min(w, std::max(jobs, 1));
}

// Runs body(r) for r in [0, count) on `workers` threads; rethrows the first error.
template <class F>
void parallel_for(int count, int workers, F&& body) {
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto loop = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= count) return;
      try {
        body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  if (workers <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

std::optional<double> theory_for(const ExperimentConfig& cfg, const PreparedEstimator& p, std::int64_t n) {
  if (cfg.model.kind != ModelKind::Synthetic) return std::nullopt;
  const auto& spec = cfg.model.synthetic;
  MsePredictionInput in;
  in.order = spec.order;
  in.bias_norm2 = spec.bias_norm2();
  in.noise_trace = spec.noise_trace();
  in.n = static_cast<double>(n);
  in.d = p.sched.scale;
  in.c = p.params.c;
  in.beta = p.params.beta;
  in.alpha = p.sched.alpha;
  switch (p.cfg->kind) {
    case EstimatorKind::Baseline: in.kind = EstimatorKind::Baseline; break;
    case EstimatorKind::Recursive: in.kind = EstimatorKind::Recursive; break;
    case EstimatorKind::Averaged: in.kind = EstimatorKind::Averaged; break;
    case EstimatorKind::Weighted:
      return weighted_mse_prediction(*p.scheme, p.sched.scale, in.bias_norm2, in.noise_trace);
  }
  try {
    return predict_mse_leading(in);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

}  // namespace

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config_json(with_baseline(*this)).dump())));
  return buf;
}

// ---------------------------------------------------------------- running

const ReportEntry& ExperimentReport::entry(const std::string& estimator, std::int64_t n) const {
  for (const auto& e : entries)
    if (e.estimator == estimator && e.n == n) return e;
  throw ConfigError("no entry for estimator '" + estimator + "' at n = " + std::to_string(n));
}

std::vector<double> ExperimentReport::squared_errors(const std::string& estimator, std::int64_t n) const {
  const auto it = errors.find({estimator, n});
  if (it == errors.end()) throw ConfigError("no errors for estimator '" + estimator + "' at n = " + std::to_string(n));
  const auto& e = it->second;
  std::vector<double> sq(e.size() / dim);
  for (std::size_t r = 0; r < sq.size(); ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += e[r * dim + i] * e[r * dim + i];
    sq[r] = s;
  }
  return sq;
}

double weighted_mse_prediction(const WeightScheme& scheme, double d_tilde, double bias_norm2, double noise_trace) {
  const auto s = weight_sums(scheme.weights, scheme.n0, scheme.order);
  const double b = std::pow(d_tilde, scheme.order.q1) * s.bias;
  return b * b * bias_norm2 + noise_trace * s.variance / std::pow(d_tilde, 2.0 * scheme.order.q2);
}

ExperimentReport run_experiment(const ExperimentConfig& config_in) {
  config_in.validate();
  ExperimentReport report;
  report.config = with_baseline(config_in);
  const auto& cfg = report.config;
  report.config_hash = cfg.hash();
  const Oracle oracle = cfg.model.make_oracle();
  const BiasOrder order = cfg.model.order();
  const auto truth = cfg.model.true_value();
  const std::size_t p = oracle.dim;
  report.dim = p;
  const int R = cfg.replications;
  const StreamKey root(cfg.seed);

  for (const auto n : cfg.budgets) {
    std::vector<PreparedEstimator> prep(cfg.estimators.size());
    for (std::size_t k = 0; k < prep.size(); ++k) {
      auto& pe = prep[k];
      pe.cfg = &cfg.estimators[k];
      pe.sched.alpha = order.alpha();
      pe.sched.n0 = cfg.n0;
      pe.sched.scale = cfg.baseline_d;
      pe.params.c = pe.cfg->c;
      pe.params.beta = pe.cfg->beta;
      switch (pe.cfg->kind) {
        case EstimatorKind::Baseline:
          break;
        case EstimatorKind::Recursive:
        case EstimatorKind::Averaged:
          pe.sched.scale = cfg.baseline_d * pe.cfg->d_factor;
          pe.params.validate();
          break;
        case EstimatorKind::Weighted:
          pe.scheme = optimal_weights(n, cfg.n0, order, pe.cfg->K);
          pe.sched.scale = cfg.baseline_d * pe.scheme->eta_star;
          break;
      }
    }
    std::vector<std::vector<double>> errs(prep.size(), std::vector<double>(static_cast<std::size_t>(R) * p));
    parallel_for(R, resolve_workers(cfg.workers, R), [&](int r) {
      const StreamKey key = root.child(static_cast<std::uint64_t>(r)).child(static_cast<std::uint64_t>(n));
      for (std::size_t k = 0; k < prep.size(); ++k) {
        const auto& pe = prep[k];
        EstimatorRun run;
        switch (pe.cfg->kind) {
          case EstimatorKind::Baseline: run = baseline_estimate(oracle, n, pe.sched, key); break;
          case EstimatorKind::Recursive: run = recursive_estimate(oracle, n, pe.sched, pe.params, key); break;
          case EstimatorKind::Averaged: run = averaged_estimate(oracle, n, pe.sched, pe.params, key); break;
          case EstimatorKind::Weighted: run = weighted_estimate(oracle, n, pe.sched, *pe.scheme, key); break;
        }
        for (std::size_t i = 0; i < p; ++i) errs[k][static_cast<std::size_t>(r) * p + i] = run.estimate[i] - truth[i];
      }
    });
    for (std::size_t k = 0; k < prep.size(); ++k) report.errors[{prep[k].cfg->name, n}] = std::move(errs[k]);

    const auto base_sq = report.squared_errors("baseline", n);
    for (const auto& pe : prep) {
      const auto sq = report.squared_errors(pe.cfg->name, n);
      ReportEntry e;
      e.estimator = pe.cfg->name;
      e.n = n;
      CompensatedSum s;
      for (double v : sq) s += v;
      e.mse = s.value() / R;
      CompensatedSum ss;
      for (double v : sq) ss += (v - e.mse) * (v - e.mse);
      e.se = std::sqrt(ss.value() / (R - 1)) / std::sqrt(static_cast<double>(R));
      const auto rr = paired_risk_ratio(sq, base_sq);
      e.ratio = rr.ratio;
      e.ratio_half_width = rr.half_width;
      e.degenerate = rr.degenerate;
      e.theory = theory_for(cfg, pe, n);
      e.delta_scale = pe.sched.scale;
      report.entries.push_back(e);
    }
  }
  return report;
}

RiskRatio paired_risk_ratio(const std::vector<double>& sq, const std::vector<double>& base) {
  if (sq.size() != base.size() || sq.size() < 2) throw ConfigError("paired risk ratio needs matched replications");
  CompensatedSum a, b;
  for (std::size_t i = 0; i < sq.size(); ++i) {
    a += sq[i];
    b += base[i];
  }
  const double A = a.value(), B = b.value();
  RiskRatio rr;
  if (B == 0.0) {
    rr.degenerate = true;
    rr.ratio = 1.0;
    return rr;
  }
  rr.ratio = A / B;
  // leave-one-out jackknife
  const std::size_t R = sq.size();
  std::vector<double> loo(R);
  CompensatedSum m;
  for (std::size_t i = 0; i < R; ++i) {
    const double den = B - base[i];
    loo[i] = den > 0.0 ? (A - sq[i]) / den : rr.ratio;
    m += loo[i];
  }
  const double mean = m.value() / R;
  CompensatedSum v;
  for (double x : loo) v += (x - mean) * (x - mean);
  const double se = std::sqrt(v.value() * (R - 1) / R);
  rr.half_width = 1.96 * se;
  return rr;
}

RiskRatio paired_risk_ratio(const ExperimentReport& report, const std::string& estimator, std::int64_t n,
                            const std::string& baseline) {
  return paired_risk_ratio(report.squared_errors(estimator, n), report.squared_errors(baseline, n));
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi >= lo) || points < 1) throw ConfigError("log grid needs 0 < lo <= hi and points >= 1");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    g[i] = points == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (points - 1));
  return g;
}

AdversarialSweep adversarial_sweep(const ExperimentConfig& config, const std::vector<double>& B_grid,
                                   const std::vector<double>& sigma_grid) {
  if (config.model.kind != ModelKind::Synthetic) throw ConfigError("adversarial sweep needs the synthetic model");
  if (!config.model.synthetic.higher_order_bias.empty())
    throw ConfigError("adversarial sweep assumes no higher-order bias term");
  // noisy run at the configured (B, sigma) and a noiseless companion on the same streams
  const auto noisy = run_experiment(config);
  ExperimentConfig quiet = config;
  quiet.replications = 2;
  for (auto& s : quiet.model.synthetic.noise_scale) s = 0.0;
  quiet.model.synthetic.allow_noiseless = true;
  const auto bias_only = run_experiment(quiet);

  AdversarialSweep out;
  const std::size_t p = noisy.dim;
  const int R = noisy.config.replications;
  for (const auto n : noisy.config.budgets) {
    std::map<std::string, std::vector<double>> bias_part, noise_part;
    for (const auto& est : noisy.config.estimators) {
      const auto& e = noisy.errors.at({est.name, n});
      const auto& b = bias_only.errors.at({est.name, n});
      std::vector<double> nz(e.size());
      for (std::size_t r = 0; r < static_cast<std::size_t>(R); ++r)
        for (std::size_t i = 0; i < p; ++i) nz[r * p + i] = e[r * p + i] - b[i];
      bias_part[est.name] = std::vector<double>(b.begin(), b.begin() + static_cast<long>(p));
      noise_part[est.name] = std::move(nz);
    }
    for (double Bm : B_grid) {
      for (double sg : sigma_grid) {
        auto sq_of = [&](const std::string& name) {
          const auto& b = bias_part[name];
          const auto& z = noise_part[name];
          std::vector<double> sq(static_cast<std::size_t>(R));
          for (std::size_t r = 0; r < sq.size(); ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < p; ++i) {
              const double v = Bm * b[i] + sg * z[r * p + i];
              s += v * v;
            }
            sq[r] = s;
          }
          return sq;
        };
        const auto base = sq_of("baseline");
        for (const auto& est : noisy.config.estimators) {
          if (est.name == "baseline") continue;
          const auto rr = paired_risk_ratio(sq_of(est.name), base);
          out.cells.push_back({Bm, sg, est.name, rr.ratio});
          auto [it, fresh] = out.worst_ratio.try_emplace(est.name, rr.ratio);
          if (!fresh) it->second = std::max(it->second, rr.ratio);
        }
      }
    }
  }
  out.report = noisy;
  return out;
}

// ---------------------------------------------------------------- tables

std::vector<std::int64_t> table_budgets(double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("scale must lie in (0, 1]");
  if (scale * 1e4 < 1e3) throw ConfigError("scale too small: the smallest budget would fall below 1000");
  std::vector<std::int64_t> out;
  for (double b : {1e4, 2e4, 3e4, 5e4, 8e4, 1e5}) out.push_back(static_cast<std::int64_t>(std::llround(b * scale)));
  return out;
}

namespace {

std::string sig4(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string sci3(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

TableResult recursive_table(int id, BiasOrder order) {
  const auto tied = amrr_recursive_tied(order);
  const auto free = amrr_recursive_free(order);
  TableResult t;
  t.id = id;
  std::ostringstream title;
  title << "AMRR and optimal configurations, q1=" << order.q1 << ", q2=" << order.q2;
  t.title = title.str();
  t.header = {"", "recursive (d unadjusted)", "recursive (d optimized)", "averaged"};
  t.rows.push_back({"AMRR", sig4(tied.ratio), sig4(free.ratio), sig4(free.ratio)});
  t.rows.push_back({"configuration", "c=" + sig4(tied.c) + ", beta=1",
                    "d~=" + sig4(free.d_scale) + "d, c=1, beta=1", "d~=" + sig4(free.d_scale) + "d, c>0, 0<beta<1"});
  return t;
}

TableResult general_table(int id, BiasOrder order) {
  TableResult t;
  t.id = id;
  std::ostringstream title;
  title << "AMRR of the optimally weighted estimator against K, q1=" << order.q1 << ", q2=" << order.q2;
  t.title = title.str();
  t.header = {"K", "AMRR"};
  for (int i = 5; i <= 20; ++i) {
    const double K = i / 10.0;
    t.rows.push_back({fixed2(K).substr(0, 3), fixed2(amrr_general(order, K))});
  }
  return t;
}

}  // namespace

TableResult reproduce_table(int id, double scale, int replications, std::uint64_t seed, int workers) {
  switch (id) {
    case 1: return recursive_table(1, {2.0, 1.0});
    case 2: return recursive_table(2, {1.0, 1.0});
    case 3: return general_table(3, {2.0, 1.0});
    case 4: return general_table(4, {1.0, 1.0});
    case 5: case 6: case 7: case 8: break;
    default: throw ConfigError("table id must be 1..8");
  }
  const bool sp = id >= 7;
  const double d = (id == 5 || id == 7) ? 1.0 : 2.0;
  ExperimentConfig cfg;
  cfg.model = ModelConfig::mm1(sp);
  cfg.baseline_d = d;
  cfg.n0 = 500;
  cfg.replications = replications;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.budgets = table_budgets(scale);
  cfg.estimators = {EstimatorConfig::baseline(), EstimatorConfig::recursive_free(cfg.model.order())};
  const int maxK = sp ? 2 : 4;
  for (int K = 1; K <= maxK; ++K) cfg.estimators.push_back(EstimatorConfig::weighted(K));

  TableResult t;
  t.id = id;
  t.title = std::string("Empirical MSE, ") + (sp ? "SP gradient in both rates" : "CFD derivative in the arrival rate") +
            ", d=" + sig4(d);
  t.report = run_experiment(cfg);
  t.header = {"n"};
  for (const auto& e : cfg.estimators) t.header.push_back(e.name);
  for (auto n : cfg.budgets) {
    std::vector<std::string> row{std::to_string(n)};
    for (const auto& e : cfg.estimators) {
      const auto& en = t.report->entry(e.name, n);
      std::string cell = sci3(en.mse);
      if (e.name != "baseline") cell += " (" + std::to_string(static_cast<int>(std::lround(100.0 * en.ratio))) + "%)";
      row.push_back(cell);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------- output

void write_report(std::ostream& os, const ExperimentReport& report, Format format) {
  if (format == Format::Csv) {
    os << "estimator,n,mse,se,ratio,theory\n";
    char buf[64];
    for (const auto& e : report.entries) {
      os << e.estimator << ',' << e.n;
      for (double v : {e.mse, e.se, e.ratio}) {
        std::snprintf(buf, sizeof buf, ",%.10g", v);
        os << buf;
      }
      os << ',';
      if (e.theory) {
        std::snprintf(buf, sizeof buf, "%.10g", *e.theory);
        os << buf;
      }
      os << '\n';
    }
    return;
  }
  ordered_json j;
  j["schema_version"] = 1;
  j["config"] = config_json(report.config);
  j["config_hash"] = report.config_hash;
  j["seed"] = report.config.seed;
  if (report.timestamp) j["timestamp"] = *report.timestamp;
  auto& arr = j["entries"] = ordered_json::array();
  for (const auto& e : report.entries) {
    ordered_json x;
    x["estimator"] = e.estimator;
    x["n"] = e.n;
    x["empirical_mse"] = e.mse;
    x["mse_se"] = e.se;
    x["risk_ratio"] = e.ratio;
    x["risk_ratio_half_width"] = e.ratio_half_width;
    x["degenerate"] = e.degenerate;
    x["theory_prediction"] = e.theory ? ordered_json(*e.theory) : ordered_json(nullptr);
    x["delta_scale"] = e.delta_scale;
    arr.push_back(x);
  }
  os << j.dump(2) << '\n';
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void finish(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace

void write_report_file(const std::string& path, const ExperimentReport& report, Format format) {
  auto f = open_out(path);
  write_report(f, report, format);
  finish(f, path);
}

void write_table(std::ostream& os, const TableResult& t) {
  os << "Table " << t.id << ": " << t.title << '\n';
  std::vector<std::size_t> width(t.header.size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
  };
  widen(t.header);
  for (const auto& r : t.rows) widen(r);
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << "  ";
      os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
    }
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

void write_summary(std::ostream& os, const ExperimentReport& report) {
  TableResult t;
  t.title = "empirical MSE (risk ratio vs baseline)";
  t.header = {"n"};
  for (const auto& e : report.config.estimators) t.header.push_back(e.name);
  for (auto n : report.config.budgets) {
    std::vector<std::string> row{std::to_string(n)};
    for (const auto& e : report.config.estimators) {
      const auto& en = report.entry(e.name, n);
      std::string cell = sci3(en.mse);
      if (e.name != "baseline") cell += " (" + sig4(en.ratio) + ")";
      row.push_back(cell);
    }
    t.rows.push_back(std::move(row));
  }
  os << t.title << '\n';
  t.title.clear();
  std::ostringstream body;
  write_table(body, t);
  const auto s = body.str();
  os << s.substr(s.find('\n') + 1);
}

namespace {

ordered_json scheme_meta(const WeightScheme& s) {
  ordered_json m;
  m["n"] = s.n();
  m["n0"] = s.n0;
  m["q1"] = s.order.q1;
  m["q2"] = s.order.q2;
  m["K"] = s.K;
  m["lambda1"] = s.lambda1;
  m["lambda2"] = s.lambda2;
  m["a_star"] = s.a_star;
  m["eta_star"] = s.eta_star;
  m["s_star"] = s.s_star;
  m["scaled_s_star"] = s.scaled_s_star();
  m["amrr"] = amrr_general(s.order, s.K);
  return m;
}

}  // namespace

void emit_weight_distribution(std::ostream& os, const std::vector<WeightScheme>& schemes, Format format) {
  if (format == Format::Csv) {
    os << "n,j,weight\n";
    char buf[48];
    for (const auto& s : schemes)
      for (std::size_t j = 0; j < s.weights.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", s.weights[j]);
        os << s.n() << ',' << (j + 1) << ',' << buf << '\n';
      }
    return;
  }
  ordered_json arr = ordered_json::array();
  for (const auto& s : schemes) {
    auto m = scheme_meta(s);
    m["weights"] = s.weights;
    arr.push_back(m);
  }
  os << arr.dump(2) << '\n';
}

void write_weights_file(const std::string& path, const WeightScheme& scheme, Format format) {
  auto f = open_out(path);
  if (format == Format::Csv) {
    const auto meta = scheme_meta(scheme);
    for (const auto& [k, v] : meta.items()) f << "# " << k << '=' << v.dump() << '\n';
    f << "j,weight\n";
    char buf[48];
    for (std::size_t j = 0; j < scheme.weights.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", scheme.weights[j]);
      f << (j + 1) << ',' << buf << '\n';
    }
  } else {
    auto m = scheme_meta(scheme);
    m["weights"] = scheme.weights;
    f << m.dump(2) << '\n';
  }
  finish(f, path);
}

}  // namespace biascal

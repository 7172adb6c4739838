#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "biascal/errors.hpp"
#include "biascal/experiments.hpp"

using namespace biascal;

namespace {

ExperimentConfig small_synthetic() {
  ExperimentConfig cfg;
  cfg.model.synthetic = SyntheticOracleSpec::scalar(0.0, 1.0, 1.0);
  cfg.estimators = {EstimatorConfig::baseline(), EstimatorConfig::recursive_free({2, 1}),
                    EstimatorConfig::averaged(1.0, 0.5, 0.83), EstimatorConfig::weighted(2.0)};
  cfg.budgets = {2000, 5000};
  cfg.replications = 200;
  cfg.seed = 4;
  cfg.workers = 1;
  return cfg;
}

std::string dump(const ExperimentReport& r, Format f) {
  std::ostringstream os;
  write_report(os, r, f);
  return os.str();
}

}  // namespace

TEST(RunExperiment, NoiselessZeroBiasIsDegenerate) {
  ExperimentConfig cfg;
  cfg.model.kind = ModelKind::Synthetic;
  cfg.model.synthetic = SyntheticOracleSpec::scalar(0.0, 0.0, 0.0);
  cfg.estimators = {EstimatorConfig::weighted(1.0)};
  cfg.budgets = {100};
  cfg.replications = 3;
  const auto rep = run_experiment(cfg);
  for (const auto& e : rep.entries) {
    EXPECT_EQ(e.mse, 0.0);
    EXPECT_EQ(e.ratio, 1.0);
    EXPECT_TRUE(e.degenerate);
  }
}

TEST(RunExperiment, BaselineAddedAndRatiosAreMseQuotients) {
  auto cfg = small_synthetic();
  cfg.estimators.erase(cfg.estimators.begin());
  const auto rep = run_experiment(cfg);
  for (auto n : cfg.budgets) {
    const auto& b = rep.entry("baseline", n);
    EXPECT_EQ(b.ratio, 1.0);
    for (const auto& e : rep.entries)
      if (e.n == n) {
        EXPECT_NEAR(e.ratio, e.mse / b.mse, 1e-12 * e.ratio);
        EXPECT_TRUE(std::isfinite(e.mse));
        ASSERT_TRUE(e.theory.has_value()) << e.estimator;
      }
  }
}

TEST(RunExperiment, StandardErrorIsSdOverRootReps) {
  const auto rep = run_experiment(small_synthetic());
  const auto sq = rep.squared_errors("baseline", 2000);
  double m = 0;
  for (double v : sq) m += v;
  m /= sq.size();
  double ss = 0;
  for (double v : sq) ss += (v - m) * (v - m);
  const double se = std::sqrt(ss / (sq.size() - 1)) / std::sqrt(static_cast<double>(sq.size()));
  EXPECT_NEAR(rep.entry("baseline", 2000).se, se, 1e-12 * se);
}

TEST(RunExperiment, DeterministicAcrossWorkerCounts) {
  auto cfg = small_synthetic();
  const auto a = run_experiment(cfg);
  cfg.workers = 4;
  const auto b = run_experiment(cfg);
  cfg.workers = 3;
  const auto c = run_experiment(cfg);
  EXPECT_EQ(dump(a, Format::Json), dump(b, Format::Json));
  EXPECT_EQ(dump(a, Format::Csv), dump(c, Format::Csv));
  EXPECT_EQ(a.config_hash, b.config_hash);
}

TEST(RunExperiment, SeedChangesResultsButNotShape) {
  auto cfg = small_synthetic();
  const auto a = run_experiment(cfg);
  cfg.seed = 5;
  const auto b = run_experiment(cfg);
  EXPECT_NE(dump(a, Format::Csv), dump(b, Format::Csv));
  EXPECT_NE(a.config_hash, b.config_hash);
  EXPECT_EQ(a.entries.size(), b.entries.size());
}

TEST(RunExperiment, PairedEstimatorsShareSamples) {
  // identical configuration under two names sees identical variates
  auto cfg = small_synthetic();
  auto twin = EstimatorConfig::baseline();
  twin.name = "baseline-twin";
  cfg.estimators.push_back(twin);
  const auto rep = run_experiment(cfg);
  const auto rr = paired_risk_ratio(rep, "baseline-twin", 2000);
  EXPECT_EQ(rr.ratio, 1.0);
  EXPECT_EQ(rr.half_width, 0.0);
}

TEST(RunExperiment, ConfigErrors) {
  auto cfg = small_synthetic();
  cfg.replications = 1;
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg = small_synthetic();
  cfg.budgets.clear();
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg = small_synthetic();
  cfg.estimators.push_back(cfg.estimators.back());
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(RunExperiment, InfeasibleWeightedPropagates) {
  auto cfg = small_synthetic();
  cfg.estimators = {EstimatorConfig::weighted(0.5)};
  EXPECT_THROW(run_experiment(cfg), InfeasibleError);
}

TEST(RunExperiment, TheoryForWeightedIsExact) {
  // noiseless: the empirical MSE equals the squared bias exactly
  auto cfg = small_synthetic();
  cfg.model.synthetic = SyntheticOracleSpec::scalar(0.0, 1.0, 0.0);
  cfg.replications = 2;
  const auto rep = run_experiment(cfg);
  const auto& e = rep.entry("weighted-K2", 5000);
  EXPECT_NEAR(e.mse, *e.theory, 1e-10 * e.mse);
}

TEST(PairedRiskRatio, ScaleEquivariance) {
  std::vector<double> a{1, 2, 3, 4}, b{2, 2, 5, 3};
  const auto r1 = paired_risk_ratio(a, b);
  for (auto& v : b) v *= 2;
  const auto r2 = paired_risk_ratio(a, b);
  EXPECT_NEAR(r2.ratio, r1.ratio / 2, 1e-15);
  EXPECT_NEAR(r2.half_width, r1.half_width / 2, 1e-15);
  const auto self = paired_risk_ratio(a, a);
  EXPECT_EQ(self.ratio, 1.0);
  EXPECT_GT(r1.half_width, 0.0);
}

TEST(PairedRiskRatio, JackknifeMatchesHandComputation) {
  const std::vector<double> a{1, 2, 3}, b{2, 4, 5};
  // leave-one-out ratios 5/9, 4/7, 3/6
  const double l[3] = {5.0 / 9, 4.0 / 7, 0.5};
  const double m = (l[0] + l[1] + l[2]) / 3;
  double v = 0;
  for (double x : l) v += (x - m) * (x - m);
  const auto r = paired_risk_ratio(a, b);
  EXPECT_NEAR(r.ratio, 6.0 / 11, 1e-15);
  EXPECT_NEAR(r.half_width, 1.96 * std::sqrt(v * 2 / 3), 1e-14);
}

TEST(Tables, ClosedFormTables) {
  const auto t3 = reproduce_table(3);
  ASSERT_EQ(t3.rows.size(), 16u);
  EXPECT_EQ(t3.rows[0][0], "0.5");
  EXPECT_EQ(t3.rows[0][1], "2.67");
  EXPECT_EQ(t3.rows[5][1], "0.67");
  const auto t2 = reproduce_table(2);
  EXPECT_EQ(t2.rows[0][1], "1.266");
  EXPECT_EQ(t2.rows[0][2], "1.089");
  EXPECT_NE(t2.rows[1][1].find("c=2.25"), std::string::npos);
  EXPECT_NE(t2.rows[1][2].find("0.7825"), std::string::npos);
  EXPECT_THROW(reproduce_table(9), ConfigError);
  EXPECT_THROW(reproduce_table(5, 0.05), ConfigError);
}

TEST(Tables, BudgetsScale) {
  EXPECT_EQ(table_budgets(0.1), (std::vector<std::int64_t>{1000, 2000, 3000, 5000, 8000, 10000}));
}

TEST(WeightDistribution, SignPatternAndSum) {
  const auto w = optimal_weights(1000, 0, {2, 1}, 1.0);
  EXPECT_LT(w.weights.front(), 0.0);
  EXPECT_GT(w.weights.back(), 0.0);
  std::ostringstream os;
  emit_weight_distribution(os, {w}, Format::Csv);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,j,weight");
  double sum = 0;
  int rows = 0;
  while (std::getline(in, line)) {
    sum += std::stod(line.substr(line.rfind(',') + 1));
    ++rows;
  }
  EXPECT_EQ(rows, 1000);
  EXPECT_NEAR(sum, 1.0, 1e-10);
}

TEST(WeightDistribution, RangeMatchesReferenceAndShrinksPastPeak) {
  // max |w_j| from an mpmath evaluation; it peaks at n = 500 before shrinking
  const std::pair<std::int64_t, double> ref[] = {{100, 0.012188732337098687},
                                                 {200, 0.015082023409397566},
                                                 {500, 0.030295100750290616},
                                                 {1000, 0.022570661569794356},
                                                 {2000, 0.016760752686969166}};
  for (const auto& [n, expected] : ref) {
    const auto w = optimal_weights(n, 0, {2, 1}, 1.0);
    double m = 0;
    for (double v : w.weights) m = std::max(m, std::fabs(v));
    EXPECT_NEAR(m, expected, 1e-9 * expected) << "n=" << n;
  }
}

TEST(WeightDistribution, JsonCarriesMetadata) {
  const auto w = optimal_weights(50, 0, {2, 1}, 1.0);
  std::ostringstream os;
  emit_weight_distribution(os, {w}, Format::Json);
  const auto s = os.str();
  for (const char* key : {"\"lambda1\"", "\"a_star\"", "\"eta_star\"", "\"s_star\"", "\"weights\""})
    EXPECT_NE(s.find(key), std::string::npos) << key;
}

TEST(AdversarialSweep, MatchesDirectRunsOnTheGrid) {
  auto cfg = small_synthetic();
  cfg.budgets = {2000};
  cfg.replications = 50;
  const auto sweep = adversarial_sweep(cfg, {0.1, 3.0}, {0.5, 10.0});
  ASSERT_EQ(sweep.cells.size(), 4u * 3u);
  // compare one cell against a direct run at that (B, sigma)
  auto direct = cfg;
  direct.model.synthetic = SyntheticOracleSpec::scalar(0.0, 3.0, 0.5);
  const auto rep = run_experiment(direct);
  for (const auto& c : sweep.cells)
    if (c.B == 3.0 && c.sigma == 0.5) EXPECT_NEAR(c.ratio, rep.entry(c.estimator, 2000).ratio, 1e-9);
  EXPECT_EQ(sweep.worst_ratio.size(), 3u);
}

TEST(Report, CsvHeaderAndJsonSchema) {
  const auto rep = run_experiment(small_synthetic());
  const auto csv = dump(rep, Format::Csv);
  EXPECT_EQ(csv.rfind("estimator,n,mse,se,ratio,theory\n", 0), 0u);
  const auto json = dump(rep, Format::Json);
  for (const char* key : {"\"schema_version\"", "\"config_hash\"", "\"empirical_mse\"", "\"risk_ratio\"",
                          "\"theory_prediction\"", "\"seed\""})
    EXPECT_NE(json.find(key), std::string::npos) << key;
  EXPECT_EQ(json.find("timestamp"), std::string::npos);
}

TEST(Report, UnwritablePathIsIoError) {
  const auto rep = run_experiment(small_synthetic());
  EXPECT_THROW(write_report_file("/nonexistent-dir/x/report.csv", rep, Format::Csv), IoError);
}

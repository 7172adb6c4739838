#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "biascal/calibration.hpp"
#include "biascal/estimators.hpp"
#include "biascal/oracles.hpp"
#include "biascal/queueing.hpp"

namespace biascal {

enum class ModelKind { Synthetic, Mm1Cfd, Mm1Sp };

struct ModelConfig {
  ModelKind kind = ModelKind::Synthetic;
  SyntheticOracleSpec synthetic;
  QueueParams queue;
  RateTarget target = RateTarget::Arrival;
  bool crn = false;
  /// True value for the mm1 models; the synthetic model uses its theta.
  std::vector<double> truth;

  static ModelConfig mm1(bool simultaneous_perturbation);
  BiasOrder order() const;
  std::vector<double> true_value() const;
  Oracle make_oracle() const;
};

/// One estimator in a comparison. Perturbation scale is d_factor * d for
/// recursive/averaged, eta* * d for weighted, d for baseline.
struct EstimatorConfig {
  std::string name;
  EstimatorKind kind = EstimatorKind::Baseline;
  double d_factor = 1.0;
  double c = 1.0;
  double beta = 1.0;
  double K = 1.0;

  static EstimatorConfig baseline();
  /// Free-d calibration: c = 1, beta = 1, d~ = d_scale d.
  static EstimatorConfig recursive_free(const BiasOrder& order);
  static EstimatorConfig recursive(double c, double beta, double d_factor = 1.0);
  static EstimatorConfig averaged(double c, double beta, double d_factor);
  static EstimatorConfig weighted(double K);
};

struct ExperimentConfig {
  ModelConfig model;
  std::vector<EstimatorConfig> estimators;  // a baseline is added when absent
  std::vector<std::int64_t> budgets;
  double baseline_d = 1.0;
  std::int64_t n0 = 0;
  int replications = 1000;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware concurrency

  void validate() const;
  std::string hash() const;  // FNV-1a of the canonical config
};

struct ReportEntry {
  std::string estimator;
  std::int64_t n = 0;
  double mse = 0;
  double se = 0;
  double ratio = 1;
  double ratio_half_width = 0;
  bool degenerate = false;
  std::optional<double> theory;
  double delta_scale = 0;  // perturbation scale actually used
};

struct RiskRatio {
  double ratio = 1;
  double half_width = 0;
  bool degenerate = false;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReportEntry> entries;
  std::string config_hash;
  std::optional<std::string> timestamp;
  /// per (estimator, n): replication errors, row-major reps x dim
  std::map<std::pair<std::string, std::int64_t>, std::vector<double>> errors;
  std::size_t dim = 1;

  const ReportEntry& entry(const std::string& estimator, std::int64_t n) const;
  std::vector<double> squared_errors(const std::string& estimator, std::int64_t n) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Ratio of empirical MSEs on paired replications with a jackknife
/// 95% half-width.
RiskRatio paired_risk_ratio(const ExperimentReport& report, const std::string& estimator, std::int64_t n,
                            const std::string& baseline = "baseline");
RiskRatio paired_risk_ratio(const std::vector<double>& sq_err, const std::vector<double>& sq_err_baseline);

/// Exact MSE of a weighted estimator on the synthetic model without higher-order bias.
double weighted_mse_prediction(const WeightScheme& scheme, double d_tilde, double bias_norm2, double noise_trace);

struct AdversarialCell {
  double B = 0, sigma = 0;
  std::string estimator;
  double ratio = 0;
};

struct AdversarialSweep {
  std::vector<AdversarialCell> cells;
  std::map<std::string, double> worst_ratio;
  ExperimentReport report;  // the run at the configured (B, sigma)
};

/// Risk ratios over a (B, sigma) grid on the synthetic model. Errors are
/// linear in (B, sigma) for fixed variates, so one noisy and one noiseless run
/// at the configured spec give every grid cell on shared streams.
AdversarialSweep adversarial_sweep(const ExperimentConfig& config, const std::vector<double>& B_grid,
                                   const std::vector<double>& sigma_grid);

std::vector<double> log_grid(double lo, double hi, int points);

struct TableResult {
  int id = 0;
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::optional<ExperimentReport> report;
};

/// Tables 1-4 from closed forms; 5-8 by Monte Carlo with budgets scaled by `scale`.
TableResult reproduce_table(int id, double scale = 1.0, int replications = 1000, std::uint64_t seed = 20240101,
                            int workers = 0);

std::vector<std::int64_t> table_budgets(double scale);

enum class Format { Csv, Json };

void write_report(std::ostream& os, const ExperimentReport& report, Format format);
void write_report_file(const std::string& path, const ExperimentReport& report, Format format);
void write_table(std::ostream& os, const TableResult& table);
/// Rows n, columns estimators, MSE with ratio in brackets.
void write_summary(std::ostream& os, const ExperimentReport& report);

void emit_weight_distribution(std::ostream& os, const std::vector<WeightScheme>& schemes, Format format);
void write_weights_file(const std::string& path, const WeightScheme& scheme, Format format);

}  // namespace biascal

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairad/data.hpp"
#include "fairad/losses.hpp"
#include "fairad/nn.hpp"
#include "fairad/theory.hpp"

namespace fairad {

/// Method variants. The suffixed forms are the ablations: -R swaps the
/// re-balanced reconstruction for the plain sum, -N drops the cross-group
/// term, -D drops the uniformity term, -C swaps the fairness-aware
/// contrastive loss for the SimCLR one. PlainAE turns the regularizer off
/// and fixes epsilon at the group proportion.
enum class Variant { FairAD, FairAD_R, FairAD_N, FairAD_D, FairAD_C, PlainAE };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct DatasetSource {
  // Exactly one of csv_path / synthetic is set.
  std::optional<std::string> csv_path;
  CsvSchema schema;
  std::optional<SyntheticSpec> synthetic;
};

struct ExperimentConfig {
  DatasetSource dataset;
  std::vector<std::size_t> hidden_widths;  // empty: default for the data dim
  Activation hidden_activation = Activation::ReLU;
  OptMethod optimizer = OptMethod::Adam;
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  double alpha = 1.0;
  EpsilonEstimator estimator = EpsilonEstimator::Loss1;
  Variant variant = Variant::FairAD;
  std::vector<std::size_t> k_values;  // empty: the dataset's anomaly count
  std::vector<std::uint64_t> seeds = {40, 41, 42};
  std::size_t batch_size = 0;  // 0 = full batch
  std::size_t pair_subsample_threshold = 4096;
  double augment_noise_scale = 0.05;
  bool standardize_features = true;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> ratio;  // |U|:|P| resample
  std::string output_path;

  void validate() const;
};

struct TrainResult {
  AutoencoderModel model;
  std::vector<LossReport> history;  // one report per epoch
};

/// Trains one variant on a label-free view of the data. Deterministic per
/// (config, seed). Aborts with NumericError naming the epoch if the loss
/// leaves the finite range.
TrainResult train_variant(const GroupedDataset::TrainingView& view,
                          const ExperimentConfig& config, std::uint64_t seed);

struct SeedRunResult {
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<LossReport> epochs;
  std::vector<MetricsReport> metrics;  // one per k
};

struct AggregateRow {
  std::size_t k = 0;
  double recall_at_k_mean = 0.0, recall_at_k_std = 0.0;
  double rocauc_mean = 0.0, rocauc_std = 0.0;
  double rec_diff_mean = 0.0, rec_diff_std = 0.0;
  double acc_diff_mean = 0.0, acc_diff_std = 0.0;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<SeedRunResult> runs;
  std::vector<AggregateRow> aggregates;
  double total_wall_seconds = 0.0;
};

/// Builds the dataset for one run: CSV is loaded as-is; a synthetic spec
/// is re-seeded per run seed so independent runs draw independent data.
/// The configured ratio resample is applied afterwards.
GroupedDataset build_dataset(const ExperimentConfig& config, std::uint64_t run_seed);

/// Full protocol per seed: build data, standardize, train, score, evaluate.
RunReport run_experiment(const ExperimentConfig& config);

/// One report per ratio with shared seeds.
std::vector<RunReport> run_ratio_study(const ExperimentConfig& base,
                                       const std::vector<std::pair<std::uint64_t, std::uint64_t>>& ratios);

struct TheoryAuditReport {
  std::string variant;
  std::uint64_t seed = 0;
  FairnessAuditReport audit;
  TvBoundReport tv_bound;
};

/// Trains the configured variant on the first seed, then audits the
/// fairness bound on the resulting scores and the TV bound on the final
/// representations.
TheoryAuditReport run_theory_audit(const ExperimentConfig& config,
                                   const AuditConfig& audit_config);

/// Flat key-value config file: one `key = value` per line, '#' comments.
ExperimentConfig parse_config_file(const std::string& path);
/// Applies one key-value pair; throws ConfigError on unknown keys.
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

}  // namespace fairad

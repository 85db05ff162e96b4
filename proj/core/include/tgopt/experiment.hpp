#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgopt/baselines.hpp"
#include "tgopt/data_model.hpp"
#include "tgopt/eval_cache.hpp"
#include "tgopt/evaluator.hpp"
#include "tgopt/features.hpp"
#include "tgopt/hyper_search.hpp"
#include "tgopt/io.hpp"
#include "tgopt/mtl.hpp"
#include "tgopt/predictor.hpp"
#include "tgopt/search.hpp"
#include "tgopt/stl.hpp"

namespace tgopt {

struct DatasetConfig {
  std::string source = "synthetic";  // "synthetic" or "csv"
  std::filesystem::path path;        // csv only
  CsvSchema schema;
  SyntheticSpec synthetic;
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  bool normalize = true;
  std::size_t distance_cap = 512;
};

struct ModelConfig {
  std::vector<int> stl_hidden{8};
  Activation hidden_activation = Activation::Tanh;
  double stl_learning_rate = 0.01;
  MtlArch mtl{{}, {8}, {}, Activation::Tanh, Activation::Linear, 0.01};
  int epochs = 60;
  std::optional<int> batch_size;
  int affinity_every = 10;
  PredictorArch predictor;
  int predictor_epochs = 200;
  bool predictor_warm_start = true;
  /// Architecture search over predictor candidates; 0 disables it.
  int nas_iters = 0;
  double nas_omega = 0.0;
  double nas_p = 10.0;
};

struct SampleConfig {
  /// Unset selects max(50, ceil(1.5 n)).
  std::optional<std::size_t> size;
};

struct BaselineConfig {
  bool hierarchical = true;
  GainTransform transform = GainTransform::Exponential;
  Linkage linkage = Linkage::Average;
  std::size_t k_min = 2;
  /// Clamped to n - 1.
  std::size_t k_max = 6;
  bool kmeans = true;
  bool random_search = true;
};

struct ReportConfig {
  std::filesystem::path artifact_dir = "artifacts";
  int repeats = 5;
  /// result.json carries wall_seconds only when set (timing.json always does).
  bool include_wall_seconds = false;
};

struct RunConfig {
  DatasetConfig dataset;
  ModelConfig model;
  SampleConfig sample;
  SearchConfig search;
  BaselineConfig baselines;
  ReportConfig report;
  std::uint64_t seed = 0;
  /// Relative paths resolve against this directory (the config file's).
  std::filesystem::path base_dir = ".";

  /// Throws Error(ConfigInvalid).
  void validate() const;
  std::filesystem::path artifact_dir() const;
  std::filesystem::path dataset_path() const;
};

/// Throws Error(ConfigInvalid) for unknown keys or bad values.
RunConfig parse_run_config(std::string_view json_text,
                           const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical JSON with every default filled in.
std::string run_config_to_json(const RunConfig& config);
/// SHA-256 prefix of the canonical JSON.
std::string config_hash(const RunConfig& config);

/// Hash of the sections a stage depends on; stored in its artifacts.
std::string stage_config_hash(const RunConfig& config, std::string_view stage);
/// Identifies MTL training settings in the on-disk group cache.
std::string mtl_fingerprint(const RunConfig& config);

/// Seed of a named pipeline stage.
std::uint64_t stage_seed(const RunConfig& config, std::string_view stage);

std::size_t default_sample_size(std::size_t n_tasks);
/// All C(n, 2) task pairs in lexicographic order.
std::vector<GroupKey> plan_pairs(std::size_t n_tasks);

struct PreparedData {
  std::vector<std::string> feature_names;
  TaskKind kind = TaskKind::Regression;
  std::vector<TaskSplit> raw_splits;
  /// Model inputs: z-scored with `norm` unless normalization is off.
  std::vector<TaskSplit> splits;
  /// Pooled over the training rows of every task.
  NormalizationStats norm;
  bool binary_features = false;
  std::optional<Partition> true_partition;

  std::vector<std::string> task_ids() const;
  LossKind loss_kind() const;
};

PreparedData prepare_data(const RunConfig& config);
/// Rebuilds the derived fields from raw splits and statistics.
PreparedData assemble_data(std::vector<std::string> feature_names, TaskKind kind,
                           std::vector<TaskSplit> raw_splits, NormalizationStats norm,
                           bool normalize, std::optional<Partition> true_partition);

NetSpec stl_net_spec(const RunConfig& config, const PreparedData& data);
TrainConfig train_config(const RunConfig& config, const PreparedData& data, std::uint64_t seed);

std::vector<StlResult> compute_stl(const PreparedData& data, const RunConfig& config, int jobs = 1);
std::vector<double> stl_losses(std::span<const StlResult> stl);

/// Group evaluator configured from the run (disk cache under
/// <artifacts>/mtl_cache when use_disk is set).
std::unique_ptr<MtlGroupEvaluator> make_evaluator(const PreparedData& data,
                                                  const RunConfig& config, bool use_disk);

std::vector<TaskProfile> make_profiles(const PreparedData& data, std::span<const StlResult> stl,
                                       const RunConfig& config);

struct PairStage {
  PairwiseTables tables;
  /// Model over all tasks: simple MTL baseline, affinity and task vectors.
  MtlResult all_in_one;
  std::vector<PairFeatures> pair_features;  // in plan_pairs order
  long mtl_trainings = 0;
};

/// Trains every pair into `cache` and fills the lookup tables.
PairStage compute_pairs(const PreparedData& data, std::span<const TaskProfile> profiles,
                        const RunConfig& config, EvalCache& cache,
                        MtlGroupEvaluator& evaluator, int jobs = 1);

struct SampleStage {
  std::vector<Partition> partitions;
  std::vector<double> losses;
  long mtl_trainings = 0;
};

/// Draws the partition sample and evaluates every group in it.
SampleStage compute_sample(std::size_t n_tasks, const RunConfig& config, EvalCache& cache,
                           MtlGroupEvaluator& evaluator, int jobs = 1);

struct PairwiseSummary {
  double all_pairs_total = 0.0;
  double optimal_pairs_total = 0.0;
};

/// Per task: mean and min over partners of the task's loss in pair models.
/// Throws Error(MissingPairGain).
PairwiseSummary pairwise_summary(const EvalCache& cache);

/// Mean test error rate and AUC over all tasks of a partition
/// (classification only; undefined AUCs are skipped).
struct PartitionMetrics {
  std::optional<double> mean_error_rate;
  std::optional<double> mean_auc;
};

PartitionMetrics partition_metrics(const Partition& p, const EvalCache& cache,
                                   std::span<const StlResult> stl);

struct ReportRow {
  std::string method;
  std::vector<double> losses;  // one per repeat
  double mtl_trainings = 0.0;
  std::optional<double> mean_error_rate;
  std::optional<double> mean_auc;
};

struct ReportStats {
  double mean = 0.0;
  double std = 0.0;  // population
};

ReportStats mean_std(std::span<const double> values);

/// Fixed CSV columns of the comparison report.
const std::vector<std::string>& report_columns();
std::string report_csv(std::span<const ReportRow> rows);
/// Markdown table with the lowest mean loss in bold.
std::string report_markdown(std::span<const ReportRow> rows);
/// Writes report.csv and report.md; both start with a '#' line carrying the
/// artifact header.
void emit_report(std::span<const ReportRow> rows, const std::filesystem::path& dir,
                 const ArtifactHeader& header);

/// Runs one stage (or "all"). Each stage checks the artifacts of the stages
/// it depends on and throws Error(MissingPrerequisiteStage) when absent or
/// produced under a different configuration.
void run_stage(std::string_view stage, const RunConfig& config, int jobs = 1);

/// Stage names in execution order.
std::vector<std::string> pipeline_order();

}  // namespace tgopt

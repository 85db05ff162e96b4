#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tgopt/partition.hpp"

namespace tgopt {

enum class TaskKind { Regression, Classification };

std::string_view to_string(TaskKind kind) noexcept;
TaskKind task_kind_from_string(std::string_view s);

/// One supervised task: rows of features with one target each.
struct Task {
  std::string id;
  Eigen::MatrixXd features;  // n_samples x d
  Eigen::VectorXd targets;   // n_samples
  TaskKind kind = TaskKind::Regression;

  std::size_t n_samples() const noexcept { return static_cast<std::size_t>(targets.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }

  /// Rows selected by index, in the given order.
  Task select_rows(std::span<const std::size_t> rows) const;
};

/// Ordered collection of tasks sharing kind and feature dimension.
/// Validated on construction and immutable afterwards.
class TaskSet {
 public:
  TaskSet() = default;
  /// Throws Error(InvalidTaskSet | InconsistentDimensions | DomainError).
  TaskSet(std::vector<Task> tasks, std::vector<std::string> feature_names);

  const std::vector<Task>& tasks() const noexcept { return tasks_; }
  const Task& operator[](std::size_t i) const { return tasks_.at(i); }
  std::size_t size() const noexcept { return tasks_.size(); }
  std::size_t dim() const noexcept { return feature_names_.size(); }
  TaskKind kind() const noexcept { return kind_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::optional<std::size_t> index_of(std::string_view id) const;
  /// True when every feature value is 0 or 1.
  bool binary_features() const;
  std::size_t max_samples() const;

 private:
  std::vector<Task> tasks_;
  std::vector<std::string> feature_names_;
  TaskKind kind_ = TaskKind::Regression;
};

struct NormalizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  std::vector<bool> constant;

  /// Pooled population statistics over the rows of `data`.
  static NormalizationStats compute(const Eigen::MatrixXd& data);
  /// z = (x - mean) / std, with constant columns mapped to 0.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& data) const;
};

struct SplitSpec {
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TaskSplit {
  Task train;
  Task val;
  Task test;

  const std::string& id() const noexcept { return train.id; }
};

struct CsvSchema {
  std::string task_id_column = "task_id";
  std::string target_column = "target";
  std::optional<TaskKind> kind_override;
};

/// Reads a header-row CSV with one row per sample. Tasks appear in order of
/// first occurrence; rows keep file order within a task.
TaskSet load_taskset(const std::filesystem::path& path, const CsvSchema& schema = {});
TaskSet parse_taskset_csv(std::string_view text, const CsvSchema& schema = {});
/// Writes a CSV readable by load_taskset; numbers use shortest round-trip form.
void save_taskset_csv(const TaskSet& ts, const std::filesystem::path& path,
                      const CsvSchema& schema = {});
std::string taskset_to_csv(const TaskSet& ts, const CsvSchema& schema = {});

/// z-scores every attribute with mean/std pooled over all tasks.
std::pair<TaskSet, NormalizationStats> normalize_features(const TaskSet& ts);

/// Rows of `task` repeated cyclically and truncated to `target_rows`.
Task repeat_rows(const Task& task, std::size_t target_rows);
/// Cyclically repeats every task up to the largest task size.
TaskSet augment_to_max(const TaskSet& ts);

/// Seeded holdout split. Val and test sizes are floor(n * frac); train gets
/// the remainder. Throws Error(TooFewSamples) when n * min_frac < 1.
TaskSplit split_task(const Task& task, const SplitSpec& spec);
std::vector<TaskSplit> split_taskset(const TaskSet& ts, const SplitSpec& spec);

struct SyntheticSpec {
  std::size_t n_tasks = 12;
  std::size_t n_clusters = 3;
  std::size_t dim = 8;
  std::size_t samples_per_task = 100;
  double noise = 0.1;
  std::uint64_t seed = 7;
};

struct SyntheticTaskSet {
  TaskSet tasks;
  Partition true_partition;
};

/// Clustered regression tasks. Task i belongs to cluster i % n_clusters; every
/// cluster has its own random linear-plus-tanh mean function.
SyntheticTaskSet synth_taskset(const SyntheticSpec& spec);

/// Conditional mean of the generator used for task `task` (noise-free).
Eigen::VectorXd synth_mean_function(const SyntheticSpec& spec, std::size_t task,
                                    const Eigen::MatrixXd& x);

}  // namespace tgopt

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tgopt/data_model.hpp"
#include "tgopt/neural.hpp"

namespace tgopt {

/// Hard parameter sharing: optional per-task pre layers, a shared trunk,
/// optional per-task post layers, and one single-output head per task.
struct MtlArch {
  std::vector<int> pre_widths;
  std::vector<int> shared_widths{16};
  std::vector<int> post_widths;
  Activation hidden_activation = Activation::Tanh;
  Activation output_activation = Activation::Linear;
  double learning_rate = 1e-3;

  void validate() const;
};

struct MtlOptions {
  /// Record inter-task affinity every `affinity_every` steps.
  bool record_affinity = false;
  int affinity_every = 10;
};

/// Trained network for a canonical (id-sorted) list of tasks.
struct MtlModel {
  MtlArch arch;
  int input_dim = 0;
  std::vector<std::string> task_ids;
  Params params;

  std::size_t n_trunk_layers() const { return arch.shared_widths.size(); }
  /// Index of task t's first layer inside params.layers.
  std::size_t task_offset(std::size_t t) const;
  std::size_t layers_per_task() const {
    return arch.pre_widths.size() + arch.post_widths.size() + 1;
  }
  Eigen::VectorXd predict(std::size_t task, const Eigen::MatrixXd& x) const;
};

struct MtlResult {
  std::vector<std::string> task_ids;  // sorted
  std::map<std::string, double> per_task_loss;
  double total_loss = 0.0;
  std::map<std::string, Eigen::VectorXd> task_vectors;
  /// z_matrix(i, j): effect of task i's update on task j's loss, in task_ids order.
  std::optional<Eigen::MatrixXd> z_matrix;
  LearningCurve curve;
  /// Reporting metrics for classification tasks (absent when undefined).
  std::map<std::string, double> per_task_error_rate;
  std::map<std::string, double> per_task_auc;
};

struct MtlTraining {
  MtlModel model;
  MtlResult result;
};

/// Trains one shared model over the group. Task order does not matter: tasks
/// are sorted by id and the batch schedule is seeded from the sorted ids.
/// Training rows are cyclically repeated to the largest task's size.
MtlTraining train_mtl_model(std::span<const TaskSplit> tasks, const MtlArch& arch,
                            const TrainConfig& config, const MtlOptions& options = {});

/// Throws Error(GroupTooSmall) for fewer than 2 tasks.
MtlResult train_mtl(std::span<const TaskSplit> tasks, const MtlArch& arch,
                    const TrainConfig& config, const MtlOptions& options = {});

/// Output-layer weights followed by bias, per task.
std::map<std::string, Eigen::VectorXd> extract_task_vectors(const MtlModel& model);

/// Lookahead inter-task affinity matrix from one jointly trained model.
Eigen::MatrixXd inter_task_affinity(std::span<const TaskSplit> tasks, const MtlArch& arch,
                                    const TrainConfig& config, int record_every = 10);

/// (sum STL - MTL) / sum STL. Throws Error(ZeroStlSum) when sum STL <= 0.
double relative_mtl_gain(double stl_sum, double mtl_total);
double relative_mtl_gain(std::span<const double> stl_losses, double mtl_total);

}  // namespace tgopt
